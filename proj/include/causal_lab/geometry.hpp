#pragma once

#include <cmath>

#include "causal_lab/errors.hpp"

namespace causal_lab {

// Coordinate pair. Which component is "time" depends on the model.
struct Vec2 {
  double x0 = 0.0;
  double x1 = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x0 + b.x0, a.x1 + b.x1}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x0 - b.x0, a.x1 - b.x1}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x0, s * a.x1}; }
  friend Vec2 operator*(Vec2 a, double s) { return s * a; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x0 == b.x0 && a.x1 == b.x1; }

  double norm() const { return std::hypot(x0, x1); }
  bool is_zero() const { return x0 == 0.0 && x1 == 0.0; }
};

inline double coordinate_distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Symmetric 2x2 metric tensor in coordinate components.
struct Metric2 {
  double g00 = 0.0;
  double g01 = 0.0;
  double g11 = 0.0;

  double eval(Vec2 a, Vec2 b) const {
    return g00 * a.x0 * b.x0 + g01 * (a.x0 * b.x1 + a.x1 * b.x0) + g11 * a.x1 * b.x1;
  }

  double det() const { return g00 * g11 - g01 * g01; }

  Metric2 inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-300 || !std::isfinite(d)) {
      throw NumericError("metric not invertible");
    }
    return {g11 / d, -g01 / d, g00 / d};
  }

  // Raise the index of a covector: (g^{-1} w)_i.
  Vec2 raise(Vec2 covec) const {
    const Metric2 inv = inverse();
    return {inv.g00 * covec.x0 + inv.g01 * covec.x1,
            inv.g01 * covec.x0 + inv.g11 * covec.x1};
  }

  // Lower the index of a vector: (g v)_i.
  Vec2 lower(Vec2 vec) const {
    return {g00 * vec.x0 + g01 * vec.x1, g01 * vec.x0 + g11 * vec.x1};
  }

  // Magnitude scale of g(v, v) with all terms taken positively; used to set
  // the relative width of the null classification band.
  double abs_scale(Vec2 v) const {
    return std::abs(g00 * v.x0 * v.x0) + 2.0 * std::abs(g01 * v.x0 * v.x1) +
           std::abs(g11 * v.x1 * v.x1);
  }
};

}  // namespace causal_lab

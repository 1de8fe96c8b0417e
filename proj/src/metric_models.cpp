#include "causal_lab/metric_models.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace causal_lab {
namespace {

// Removed sets are closed; points and crossings this close to them count as
// hits so float noise can never tunnel through a slit.
constexpr double kSeamEps = 1e-9;

// Relative half-width of the null band in vector classification.
constexpr double kNullBand = 1e-12;

constexpr double kPi = 3.14159265358979323846;

class Minkowski2D final : public MetricModel {
 public:
  Minkowski2D() : MetricModel("minkowski2d") {}

  Metric2 metric_at(const Vec2&) const override { return {-1.0, 0.0, 1.0}; }
  Vec2 time_orientation_at(const Vec2&) const override { return {1.0, 0.0}; }
  bool contains(const Vec2&) const override { return true; }
  bool constant_metric() const override { return true; }
  int time_axis() const override { return 0; }
};

// Minkowski plane in (x, t) coordinates with the closed segment
// {t = 0, -1 <= x <= 1} removed.
class SlitMinkowski final : public MetricModel {
 public:
  SlitMinkowski() : MetricModel("slit_minkowski") {}

  Metric2 metric_at(const Vec2& p) const override {
    if (!contains(p)) throw DomainError("slit_minkowski: point on the slit");
    return {1.0, 0.0, -1.0};
  }

  Vec2 time_orientation_at(const Vec2&) const override { return {0.0, 1.0}; }

  bool contains(const Vec2& p) const override {
    return !(std::abs(p.x1) <= kSeamEps && std::abs(p.x0) <= 1.0 + kSeamEps);
  }

  bool segment_visible(const Vec2& p, const Vec2& delta) const override {
    const Vec2 q = p + delta;
    if (!contains(p) || !contains(q)) return false;
    const double t0 = p.x1, t1 = q.x1;
    if (std::abs(t0) <= kSeamEps && std::abs(t1) <= kSeamEps) {
      // Segment runs along the slit line; blocked when x-ranges overlap.
      const double xlo = std::min(p.x0, q.x0), xhi = std::max(p.x0, q.x0);
      return xhi < -1.0 - kSeamEps || xlo > 1.0 + kSeamEps;
    }
    if ((t0 > kSeamEps && t1 > kSeamEps) || (t0 < -kSeamEps && t1 < -kSeamEps)) {
      return true;
    }
    // Single crossing of the t = 0 line.
    const double tau = t0 / (t0 - t1);
    const double xc = p.x0 + tau * (q.x0 - p.x0);
    return std::abs(xc) > 1.0 + kSeamEps;
  }

  bool constant_metric() const override { return true; }
  int time_axis() const override { return 1; }
};

// Wedge domain {2|y| > x, x > -1} in (x, y) coordinates with conformal
// metric (dx^2 - dy^2) / (x^2 + y^2); y is time.
class SingularWedge final : public MetricModel {
 public:
  SingularWedge() : MetricModel("singular_wedge") {}

  Metric2 metric_at(const Vec2& p) const override {
    if (!contains(p)) throw DomainError("singular_wedge: point outside wedge domain");
    const double rho2 = p.x0 * p.x0 + p.x1 * p.x1;
    const double f = 1.0 / rho2;
    return {f, 0.0, -f};
  }

  Vec2 time_orientation_at(const Vec2&) const override { return {0.0, 1.0}; }

  bool contains(const Vec2& p) const override {
    return p.x0 > -1.0 + kSeamEps && 2.0 * std::abs(p.x1) > p.x0 + kSeamEps;
  }

  bool segment_visible(const Vec2& p, const Vec2& delta) const override {
    const Vec2 q = p + delta;
    if (!contains(p) || !contains(q)) return false;
    // Removed wedge is the convex cone {x - 2y >= 0 and x + 2y >= 0}; the
    // segment is blocked when some parameter hits both half-planes at once
    // (within the seam margin). x > -1 holds along any chord of the domain.
    double lo = 0.0, hi = 1.0;
    const auto clip = [&](double a, double b) {
      // Keep {tau : a + b*tau >= -kSeamEps}.
      if (std::abs(b) < 1e-300) {
        if (a < -kSeamEps) lo = 1.0, hi = 0.0;
        return;
      }
      const double tau = (-kSeamEps - a) / b;
      if (b > 0.0) {
        lo = std::max(lo, tau);
      } else {
        hi = std::min(hi, tau);
      }
    };
    clip(p.x0 - 2.0 * p.x1, delta.x0 - 2.0 * delta.x1);
    clip(p.x0 + 2.0 * p.x1, delta.x0 + 2.0 * delta.x1);
    return lo > hi;  // empty intersection with the removed cone
  }

  int time_axis() const override { return 1; }
};

// Flat cylinder in (t, s): t wraps with period 2*pi, metric -dt^2 + ds^2,
// with two removed half-lines {t = pi/4, s <= pi/4} and
// {t = -pi/4, s >= -pi/4}.
class SlitCylinder final : public MetricModel {
 public:
  SlitCylinder() : MetricModel("slit_cylinder") {}

  Metric2 metric_at(const Vec2& p) const override {
    if (!contains(p)) throw DomainError("slit_cylinder: point on a removed half-line");
    return {-1.0, 0.0, 1.0};
  }

  Vec2 time_orientation_at(const Vec2&) const override { return {1.0, 0.0}; }

  bool contains(const Vec2& p) const override {
    const double t = wrap(p.x0), s = p.x1;
    if (std::abs(t - kPi / 4.0) <= kSeamEps && s <= kPi / 4.0 + kSeamEps) return false;
    if (std::abs(t + kPi / 4.0) <= kSeamEps && s >= -kPi / 4.0 - kSeamEps) return false;
    return true;
  }

  bool segment_visible(const Vec2& p, const Vec2& delta) const override {
    const Vec2 q = p + delta;
    if (!contains(p) || !contains(q)) return false;
    const double t0 = p.x0, t1 = q.x0;
    const double tlo = std::min(t0, t1), thi = std::max(t0, t1);
    // Barrier lines in the covering plane, at pi/4 + 2*pi*k and -pi/4 + 2*pi*k.
    for (int type = 0; type < 2; ++type) {
      const double base = (type == 0) ? kPi / 4.0 : -kPi / 4.0;
      const int klo = static_cast<int>(std::floor((tlo - kSeamEps - base) / (2.0 * kPi)));
      const int khi = static_cast<int>(std::ceil((thi + kSeamEps - base) / (2.0 * kPi)));
      for (int k = klo; k <= khi; ++k) {
        const double tb = base + 2.0 * kPi * k;
        if (tb < tlo - kSeamEps || tb > thi + kSeamEps) continue;
        if (std::abs(delta.x0) < 1e-300) {
          // Segment parallel to the barrier line.
          if (std::abs(t0 - tb) > kSeamEps) continue;
          const double slo = std::min(p.x1, q.x1), shi = std::max(p.x1, q.x1);
          if (type == 0 && slo <= kPi / 4.0 + kSeamEps) return false;
          if (type == 1 && shi >= -kPi / 4.0 - kSeamEps) return false;
          continue;
        }
        const double tau = (tb - t0) / delta.x0;
        if (tau < -kSeamEps || tau > 1.0 + kSeamEps) continue;
        const double sc = p.x1 + tau * delta.x1;
        if (type == 0 && sc <= kPi / 4.0 + kSeamEps) return false;
        if (type == 1 && sc >= -kPi / 4.0 - kSeamEps) return false;
      }
    }
    return true;
  }

  std::vector<Vec2> displacements(const Vec2& p, const Vec2& q) const override {
    const double dt = wrap(q.x0) - wrap(p.x0);
    const double ds = q.x1 - p.x1;
    return {{dt, ds}, {dt + 2.0 * kPi, ds}, {dt - 2.0 * kPi, ds}};
  }

  Vec2 canonical(const Vec2& p) const override { return {wrap(p.x0), p.x1}; }

  double period_x0() const override { return 2.0 * kPi; }

  bool constant_metric() const override { return true; }

  int time_axis() const override { return 0; }

 private:
  static double wrap(double t) {
    double w = std::remainder(t, 2.0 * kPi);  // (-pi, pi]
    if (w == kPi) w = -kPi;
    return w;
  }
};

class WidenedModel final : public MetricModel {
 public:
  WidenedModel(std::shared_ptr<const MetricModel> base, double delta)
      : MetricModel(base->id()), base_(std::move(base)), delta_(delta) {}

  Metric2 metric_at(const Vec2& p) const override {
    const Metric2 g = base_->metric_at(p);
    if (delta_ == 0.0) return g;
    const Vec2 T = base_->time_orientation_at(p);
    const double gtt = g.eval(T, T);
    if (!(gtt < 0.0)) throw NumericError("widen_cones: time orientation not timelike");
    const Vec2 tb = g.lower(T);
    const double c = delta_ / std::abs(gtt);
    return {g.g00 - c * tb.x0 * tb.x0, g.g01 - c * tb.x0 * tb.x1,
            g.g11 - c * tb.x1 * tb.x1};
  }

  Vec2 time_orientation_at(const Vec2& p) const override {
    return base_->time_orientation_at(p);
  }
  bool contains(const Vec2& p) const override { return base_->contains(p); }
  bool segment_visible(const Vec2& p, const Vec2& d) const override {
    return base_->segment_visible(p, d);
  }
  std::vector<Vec2> displacements(const Vec2& p, const Vec2& q) const override {
    return base_->displacements(p, q);
  }
  Vec2 canonical(const Vec2& p) const override { return base_->canonical(p); }
  double period_x0() const override { return base_->period_x0(); }
  bool constant_metric() const override { return base_->constant_metric(); }
  int time_axis() const override { return base_->time_axis(); }

 private:
  std::shared_ptr<const MetricModel> base_;
  double delta_;
};

}  // namespace

const char* to_string(CausalCharacter c) {
  switch (c) {
    case CausalCharacter::TimelikeFuture: return "timelike-future";
    case CausalCharacter::TimelikePast: return "timelike-past";
    case CausalCharacter::NullFuture: return "null-future";
    case CausalCharacter::NullPast: return "null-past";
    case CausalCharacter::Spacelike: return "spacelike";
    case CausalCharacter::Zero: return "zero";
  }
  return "unknown";
}

bool MetricModel::segment_visible(const Vec2& p, const Vec2& delta) const {
  return contains(p) && contains(p + delta);
}

std::vector<Vec2> MetricModel::displacements(const Vec2& p, const Vec2& q) const {
  return {q - p};
}

std::shared_ptr<MetricModel> make_model(const std::string& id) {
  if (id == "minkowski2d") return std::make_shared<Minkowski2D>();
  if (id == "slit_minkowski") return std::make_shared<SlitMinkowski>();
  if (id == "singular_wedge") return std::make_shared<SingularWedge>();
  if (id == "slit_cylinder") return std::make_shared<SlitCylinder>();
  throw ArgumentError("unknown model id: " + id);
}

std::shared_ptr<MetricModel> widen_cones(std::shared_ptr<const MetricModel> base,
                                         double delta) {
  if (!base) throw ArgumentError("widen_cones: null model");
  if (!(delta >= 0.0)) throw ArgumentError("widen_cones: delta must be >= 0");
  return std::make_shared<WidenedModel>(std::move(base), delta);
}

CausalCharacter causal_character(const MetricModel& model, const Vec2& p,
                                 const Vec2& v) {
  const Metric2 g = model.metric_at(p);
  if (v.is_zero()) return CausalCharacter::Zero;
  const double q = g.eval(v, v);
  const double band = std::max(g.abs_scale(v) * kNullBand, 1e-300);
  if (q > band) return CausalCharacter::Spacelike;
  const Vec2 T = model.time_orientation_at(p);
  const bool future = g.eval(T, v) < 0.0;
  if (q < -band) {
    return future ? CausalCharacter::TimelikeFuture : CausalCharacter::TimelikePast;
  }
  return future ? CausalCharacter::NullFuture : CausalCharacter::NullPast;
}

bool segment_future_causal(const MetricModel& model, const Vec2& p,
                           const Vec2& delta, int samples) {
  if (delta.is_zero()) return false;
  for (int i = 0; i < samples; ++i) {
    const double tau = (i + 0.5) / samples;
    const Vec2 at = p + tau * delta;
    if (!model.contains(at)) return false;
    const CausalCharacter c = causal_character(model, at, delta);
    if (c != CausalCharacter::TimelikeFuture && c != CausalCharacter::NullFuture) {
      return false;
    }
  }
  return true;
}

double segment_proper_time(const MetricModel& model, const Vec2& p,
                           const Vec2& delta, int subdivisions) {
  if (subdivisions < 1) throw ArgumentError("segment_proper_time: subdivisions < 1");
  const double h = 1.0 / subdivisions;
  double total = 0.0;
  for (int i = 0; i < subdivisions; ++i) {
    const double tau = (i + 0.5) * h;
    const Vec2 at = p + tau * delta;
    if (!model.contains(at)) {
      throw DomainError("segment_proper_time: sample point outside domain");
    }
    const Metric2 g = model.metric_at(at);
    const double q = g.eval(delta, delta);
    // Samples inside the null band integrate to zero, matching the causal
    // classification; otherwise coordinate rounding gives null segments a
    // dust weight that accumulates along staircase paths.
    const double band = std::max(g.abs_scale(delta) * kNullBand, 1e-300);
    if (q < -band) total += std::sqrt(-q) * h;
  }
  return total;
}

double curve_length(const MetricModel& model, const CausalPath& path,
                    int subdivisions) {
  if (path.size() < 2) throw ArgumentError("curve_length: path needs >= 2 vertices");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i];
    const Vec2 delta = path[i + 1] - path[i];
    if (!model.contains(a) || !model.contains(path[i + 1])) {
      throw DomainError("curve_length: path vertex outside domain");
    }
    if (!model.segment_visible(a, delta)) {
      throw DomainError("curve_length: segment exits domain");
    }
    if (delta.is_zero()) continue;
    // Causal in a single time direction; reversal is allowed, spacelike is not.
    bool all_future = true, all_past = true;
    for (int k = 0; k < 8; ++k) {
      const Vec2 at = a + ((k + 0.5) / 8.0) * delta;
      const CausalCharacter c = causal_character(model, at, delta);
      all_future &= (c == CausalCharacter::TimelikeFuture || c == CausalCharacter::NullFuture);
      all_past &= (c == CausalCharacter::TimelikePast || c == CausalCharacter::NullPast);
    }
    if (!all_future && !all_past) {
      throw CausalityError("curve_length: segment is not causal");
    }
    total += segment_proper_time(model, a, delta, subdivisions);
  }
  return total;
}

SteepFrame build_steep_frame(const MetricModel& model, const Vec2& p,
                             const FrameSpec& spec) {
  if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0)) {
    throw ArgumentError("build_steep_frame: epsilon must lie in (0, 1)");
  }
  const Metric2 g = model.metric_at(p);
  const Vec2 T = model.time_orientation_at(p);
  const double qT = g.eval(T, T);
  if (!(qT < 0.0)) throw NumericError("build_steep_frame: degenerate time direction");
  const Vec2 w0 = (1.0 / std::sqrt(-qT)) * T;

  Vec2 w1{};
  bool found = false;
  for (const Vec2 u : {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}}) {
    // Project out the w0 component: g(w0, w0) = -1.
    const Vec2 v = u + g.eval(u, w0) * w0;
    const double qv = g.eval(v, v);
    if (qv > 1e-12 * std::max(1.0, g.abs_scale(u))) {
      w1 = (1.0 / std::sqrt(qv)) * v;
      found = true;
      break;
    }
  }
  if (!found) throw NumericError("build_steep_frame: no spacelike complement");

  return {w0, (1.0 - spec.epsilon) * w1 + w0};
}

}  // namespace causal_lab

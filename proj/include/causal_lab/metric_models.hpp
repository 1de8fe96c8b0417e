#pragma once

#include <memory>
#include <string>
#include <vector>

#include "causal_lab/geometry.hpp"

namespace causal_lab {

// Classification of a tangent vector at a point.
enum class CausalCharacter {
  TimelikeFuture,
  TimelikePast,
  NullFuture,
  NullPast,
  Spacelike,
  Zero,
};

const char* to_string(CausalCharacter c);

// A piecewise-straight path given by its vertices, in coordinate order.
using CausalPath = std::vector<Vec2>;

struct FrameSpec {
  double epsilon = 0.1;  // must lie in (0, 1)
};

// Orthonormal-derived frame {e0, e1} with g(e0,e0) = -1, g(e0,e1) = -1,
// g(e1,e1) = (1-eps)^2 - 1; every member is timelike future-directed.
struct SteepFrame {
  Vec2 e0;
  Vec2 e1;
};

// A 2D spacetime region with a time orientation. Points live in coordinate
// space; models with identifications (the cylinder) interpret segment
// endpoints in the covering plane and wrap stored points into a fundamental
// domain via canonical().
class MetricModel {
 public:
  explicit MetricModel(std::string id) : id_(std::move(id)) {}
  virtual ~MetricModel() = default;

  const std::string& id() const { return id_; }

  // Metric tensor at p. Throws DomainError outside the domain.
  virtual Metric2 metric_at(const Vec2& p) const = 0;

  // Future-pointing timelike vector field at p.
  virtual Vec2 time_orientation_at(const Vec2& p) const = 0;

  virtual bool contains(const Vec2& p) const = 0;

  // True when the straight segment from p to p+delta stays inside the domain
  // (away from slits, removed wedges, barriers). Endpoints must be in the
  // domain. Segments are taken in the covering plane for identified models.
  virtual bool segment_visible(const Vec2& p, const Vec2& delta) const;

  // Displacement candidates realizing a straight segment from p to q; one
  // entry for simply-connected models, one per relevant lift for identified
  // models.
  virtual std::vector<Vec2> displacements(const Vec2& p, const Vec2& q) const;

  // Wraps a point into the fundamental domain (identity by default).
  virtual Vec2 canonical(const Vec2& p) const { return p; }

  // Period of the x0 coordinate, or 0 when the axis does not wrap.
  virtual double period_x0() const { return 0.0; }

  // True when metric_at returns the same tensor everywhere; callers may then
  // classify and integrate straight segments from a single sample exactly.
  virtual bool constant_metric() const { return false; }

  // Index of the time coordinate (0 or 1), for samplers and reporting.
  virtual int time_axis() const = 0;

 private:
  std::string id_;
};

// Model ids: "minkowski2d" (t, x), "slit_minkowski" (x, t),
// "singular_wedge" (x, y), "slit_cylinder" (t, s).
std::shared_ptr<MetricModel> make_model(const std::string& id);

// Cone-widened variant: g_bar = g - delta * (Tb (x) Tb) / |g(T,T)| where Tb is
// the lowered time orientation. delta = 0 returns an equivalent model.
std::shared_ptr<MetricModel> widen_cones(std::shared_ptr<const MetricModel> base,
                                         double delta);

// Pointwise classification of v at p by the signs of g(v,v) and g(T,v).
CausalCharacter causal_character(const MetricModel& model, const Vec2& p,
                                 const Vec2& v);

// True when the straight segment p -> p+delta is future-directed causal at
// every one of `samples` interior classification points.
bool segment_future_causal(const MetricModel& model, const Vec2& p,
                           const Vec2& delta, int samples = 8);

// Proper time of the straight segment p -> p+delta by composite midpoint
// quadrature with `subdivisions` panels. Spacelike samples clamp to zero;
// classification is the caller's business.
double segment_proper_time(const MetricModel& model, const Vec2& p,
                           const Vec2& delta, int subdivisions = 64);

// Proper time of a piecewise-straight causal path. Every segment must stay in
// the domain (DomainError) and be causal in either time direction
// (CausalityError); length is orientation-independent.
double curve_length(const MetricModel& model, const CausalPath& path,
                    int subdivisions = 64);

// Frame construction at p per the widened-frame recipe; spec.epsilon must lie
// in (0,1) (ArgumentError) and the metric must be nondegenerate at p.
SteepFrame build_steep_frame(const MetricModel& model, const Vec2& p,
                             const FrameSpec& spec);

}  // namespace causal_lab

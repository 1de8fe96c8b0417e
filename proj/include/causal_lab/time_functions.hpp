#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "causal_lab/achronal_ops.hpp"
#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"
#include "causal_lab/metric_models.hpp"

namespace causal_lab {

enum class FieldProvenance { FromSurface, DualPotential, Analytic };

const char* to_string(FieldProvenance provenance);

// A real value on every node of one graph.
struct ScalarField {
  FieldProvenance provenance = FieldProvenance::Analytic;
  std::vector<double> values;

  double at(NodeId u) const { return values[u]; }
  std::size_t size() const { return values.size(); }
};

// Signed distance to an achronal surface: d(S,x) above, 0 on S, -d(x,S) below.
ScalarField time_function_from_surface(const CausalGraph& graph, const NodeSet& surface);

ScalarField analytic_field(const CausalGraph& graph,
                           const std::function<double(const Vec2&)>& formula);

struct FlipViolation {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  double gap = 0.0;      // required growth minus actual growth, > 0
  bool pair_form = false;  // false: edge constraint, true: sampled related pair
};

struct FlipReport {
  std::vector<FlipViolation> violations;
  std::size_t edges_checked = 0;
  std::size_t pairs_checked = 0;

  bool clean() const { return violations.empty(); }
};

// Checks f(v) - f(u) >= w on every causal edge and f(y) - f(x) >= d(x,y) on
// sampled related pairs; the two are equivalent on acyclic graphs.
FlipReport check_reverse_lipschitz(const CausalGraph& graph, const ScalarField& field,
                                   std::uint64_t seed = 1,
                                   std::size_t max_pairs = 50000);

struct GradientEstimate {
  NodeId node = kNoNode;
  Vec2 grad{0.0, 0.0};        // vector with df(v) = g(grad, v)
  double g_grad_grad = 0.0;   // g(grad, grad)
  double g_grad_time = 0.0;   // g(grad, T), positive when grad points to the past
  double residual = 0.0;      // rms fit error
  double oscillation = 0.0;   // local spread of f used to judge the residual
  int neighbor_count = 0;
  bool reliable = false;
};

// Weighted affine fit of f over the proximity neighborhood of x.
GradientEstimate estimate_gradient(const MetricModel& model, const CausalGraph& graph,
                                   const ScalarField& field, NodeId x);

struct SteepnessSummary {
  std::size_t reliable = 0;
  std::size_t unreliable = 0;
  std::size_t steep = 0;          // reliable nodes with g(grad,grad) <= -1 + tol
  std::size_t past_directed = 0;  // reliable nodes with g(grad, T) > -tol
  double fraction = 0.0;          // steep / reliable
  double worst = 0.0;             // largest g(grad,grad) among reliable nodes
  double tol = 0.0;
};

SteepnessSummary check_steepness(const MetricModel& model, const CausalGraph& graph,
                                 const ScalarField& field, double tol = 0.1);

enum class BoundOutcome { Holds, Fails, Inconclusive };

struct BoundCheck {
  BoundOutcome outcome = BoundOutcome::Inconclusive;
  double slack = 0.0;  // |f(end)-f(start)| - length * min_steepness
  double length = 0.0;
  double min_steepness = 0.0;
};

// |f(end) - f(start)| >= curve length times the smallest steepness factor
// estimated along the path.
BoundCheck check_bound_inequality(const MetricModel& model, const CausalGraph& graph,
                                  const ScalarField& field, const CausalPath& path,
                                  double tol_grad = 0.05);

// Potential satisfying every edge constraint whose growth from p to q equals
// the longest-path distance exactly.
struct DualResult {
  ScalarField field;
  double value = 0.0;
};

DualResult dual_potential(const CausalGraph& graph, NodeId p, NodeId q);

struct LevelSetCheck {
  bool passed = false;
  // Nominal band width: half the graph-wide median positive edge weight.
  // Exact hits take precedence; when the level falls between node values the
  // band widens per node to half the median of its incident weights.
  double tolerance = 0.0;
  NodeSet level_set;
  HattingReport report;
};

LevelSetCheck check_level_set_hatting(const CausalGraph& graph, const ScalarField& field,
                                      double r, const std::vector<DivergentChain>& chains);

struct JumpEdge {
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  double jump = 0.0;
  double normalized = 0.0;  // jump over coordinate length
};

struct ContinuityReport {
  double max_normalized = 0.0;
  std::vector<JumpEdge> top;  // largest normalized jumps first
};

ContinuityReport continuity_report(const CausalGraph& graph, const ScalarField& field,
                                   std::size_t top_k = 10);

}  // namespace causal_lab

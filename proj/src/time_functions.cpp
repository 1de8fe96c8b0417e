#include "causal_lab/time_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "causal_lab/errors.hpp"
#include "causal_lab/parallel.hpp"
#include "causal_lab/rng.hpp"

namespace causal_lab {

namespace {

// Slack on float comparisons of accumulated path sums; anything this small is
// rounding noise, not a broken inequality.
constexpr double kFlipGuard = 1e-9;

double min_lift_norm(const MetricModel& model, const Vec2& p, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& d : model.displacements(p, q)) {
    best = std::min(best, std::hypot(d.x0, d.x1));
  }
  return best;
}

Vec2 min_lift(const MetricModel& model, const Vec2& p, const Vec2& q) {
  Vec2 pick{0.0, 0.0};
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& d : model.displacements(p, q)) {
    double n = std::hypot(d.x0, d.x1);
    if (n < best) {
      best = n;
      pick = d;
    }
  }
  return pick;
}

// Solves the 3x3 system A x = b in place; false when A is rank deficient.
bool solve3(std::array<std::array<double, 3>, 3>& A, std::array<double, 3>& b,
            std::array<double, 3>& x) {
  std::array<int, 3> perm{0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(A[perm[row]][col]) > std::abs(A[perm[pivot]][col])) pivot = row;
    }
    std::swap(perm[col], perm[pivot]);
    const double head = A[perm[col]][col];
    if (std::abs(head) < 1e-14) return false;
    for (int row = col + 1; row < 3; ++row) {
      const double factor = A[perm[row]][col] / head;
      for (int k = col; k < 3; ++k) A[perm[row]][k] -= factor * A[perm[col]][k];
      b[perm[row]] -= factor * b[perm[col]];
    }
  }
  for (int col = 2; col >= 0; --col) {
    double acc = b[perm[col]];
    for (int k = col + 1; k < 3; ++k) acc -= A[perm[col]][k] * x[k];
    x[col] = acc / A[perm[col]][col];
  }
  return true;
}

}  // namespace

const char* to_string(FieldProvenance provenance) {
  switch (provenance) {
    case FieldProvenance::FromSurface: return "from_surface";
    case FieldProvenance::DualPotential: return "dual_potential";
    case FieldProvenance::Analytic: return "analytic";
  }
  return "analytic";
}

ScalarField time_function_from_surface(const CausalGraph& graph, const NodeSet& surface) {
  AchronalReport rep = is_achronal(graph, surface);
  if (!rep.achronal) {
    std::ostringstream msg;
    msg << "time_function_from_surface: surface is not achronal, nodes "
        << rep.witness_from << " -> " << rep.witness_to;
    throw ArgumentError(msg.str());
  }
  if (surface.empty()) {
    throw ArgumentError("time_function_from_surface: surface is empty");
  }
  DistanceField up = distance_field(graph, surface.ids, SweepDirection::FromSource);
  DistanceField down = distance_field(graph, surface.ids, SweepDirection::ToSink);

  ScalarField field;
  field.provenance = FieldProvenance::FromSurface;
  field.values.resize(graph.node_count(), 0.0);
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (surface.contains(u)) {
      field.values[u] = 0.0;
    } else if (up.chrono(u)) {
      field.values[u] = up.at(u);
    } else if (down.chrono(u)) {
      field.values[u] = -down.at(u);
    } else {
      std::ostringstream msg;
      msg << "time_function_from_surface: node " << u
          << " is neither on the surface nor timelike related to it; rebuild the "
             "surface";
      throw ConstructionError(msg.str());
    }
  }
  return field;
}

ScalarField analytic_field(const CausalGraph& graph,
                           const std::function<double(const Vec2&)>& formula) {
  ScalarField field;
  field.provenance = FieldProvenance::Analytic;
  field.values.reserve(graph.node_count());
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    field.values.push_back(formula(graph.position(u)));
  }
  return field;
}

FlipReport check_reverse_lipschitz(const CausalGraph& graph, const ScalarField& field,
                                   std::uint64_t seed, std::size_t max_pairs) {
  if (field.size() != graph.node_count()) {
    throw ArgumentError("check_reverse_lipschitz: field size does not match graph");
  }
  if (graph.cyclic()) {
    throw CyclicGraphError("check_reverse_lipschitz: graph has a causal cycle");
  }
  FlipReport report;
  for (const GraphEdge& edge : graph.edges()) {
    ++report.edges_checked;
    const double gap = edge.weight - (field.at(edge.to) - field.at(edge.from));
    if (gap > kFlipGuard) {
      report.violations.push_back(FlipViolation{edge.from, edge.to, gap, false});
    }
  }

  const std::size_t n = graph.node_count();
  if (n == 0) return report;
  std::size_t source_budget = std::max<std::size_t>(1, max_pairs / n);
  std::vector<NodeId> sources;
  if (source_budget >= n) {
    sources.resize(n);
    for (NodeId u = 0; u < n; ++u) sources[u] = u;
  } else {
    Rng rng(seed);
    for (std::size_t k = 0; k < source_budget; ++k) {
      sources.push_back(static_cast<NodeId>(rng.below(n)));
    }
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  }
  for (NodeId x : sources) {
    DistanceField dist = distance_field(graph, std::vector<NodeId>{x},
                                        SweepDirection::FromSource);
    for (NodeId y = 0; y < n; ++y) {
      if (!dist.related(y) || y == x) continue;
      ++report.pairs_checked;
      const double gap = dist.at(y) - (field.at(y) - field.at(x));
      if (gap > kFlipGuard) {
        report.violations.push_back(FlipViolation{x, y, gap, true});
      }
    }
  }
  return report;
}

GradientEstimate estimate_gradient(const MetricModel& model, const CausalGraph& graph,
                                   const ScalarField& field, NodeId x) {
  if (field.size() != graph.node_count()) {
    throw ArgumentError("estimate_gradient: field size does not match graph");
  }
  if (x >= graph.node_count()) {
    throw ArgumentError("estimate_gradient: node id out of range");
  }
  GradientEstimate est;
  est.node = x;
  const Vec2 pos = graph.position(x);

  std::array<std::array<double, 3>, 3> A{};
  std::array<double, 3> b{};
  double weight_sum = 0.0;
  double lo = field.at(x), hi = field.at(x);
  for (const NodeId* w = graph.prox_begin(x); w != graph.prox_end(x); ++w) {
    const Vec2 d = min_lift(model, pos, graph.position(*w));
    const double norm = std::hypot(d.x0, d.x1);
    if (!(norm > 0.0)) continue;
    ++est.neighbor_count;
    const double weight = 1.0 / norm;
    const double fv = field.at(*w);
    lo = std::min(lo, fv);
    hi = std::max(hi, fv);
    const std::array<double, 3> row{1.0, d.x0, d.x1};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) A[i][j] += weight * row[i] * row[j];
      b[i] += weight * row[i] * fv;
    }
    weight_sum += weight;
  }
  est.oscillation = hi - lo;
  if (est.neighbor_count < 5) return est;

  std::array<double, 3> coef{};
  if (!solve3(A, b, coef)) return est;

  double err2 = 0.0;
  for (const NodeId* w = graph.prox_begin(x); w != graph.prox_end(x); ++w) {
    const Vec2 d = min_lift(model, pos, graph.position(*w));
    const double norm = std::hypot(d.x0, d.x1);
    if (!(norm > 0.0)) continue;
    const double pred = coef[0] + coef[1] * d.x0 + coef[2] * d.x1;
    err2 += (1.0 / norm) * (pred - field.at(*w)) * (pred - field.at(*w));
  }
  est.residual = std::sqrt(err2 / weight_sum);

  const Metric2 g = model.metric_at(pos);
  est.grad = g.raise(Vec2{coef[1], coef[2]});
  est.g_grad_grad = g.eval(est.grad, est.grad);
  est.g_grad_time = g.eval(est.grad, model.time_orientation_at(pos));
  est.reliable = est.residual <= 0.05 * est.oscillation + 1e-12;
  return est;
}

SteepnessSummary check_steepness(const MetricModel& model, const CausalGraph& graph,
                                 const ScalarField& field, double tol) {
  if (field.size() != graph.node_count()) {
    throw ArgumentError("check_steepness: field size does not match graph");
  }
  SteepnessSummary summary;
  summary.tol = tol;
  const std::size_t n = graph.node_count();
  std::vector<GradientEstimate> ests(n);
  parallel_for_blocks(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      ests[u] = estimate_gradient(model, graph, field, static_cast<NodeId>(u));
    }
  });
  summary.worst = -std::numeric_limits<double>::infinity();
  for (const GradientEstimate& est : ests) {
    if (!est.reliable) {
      ++summary.unreliable;
      continue;
    }
    ++summary.reliable;
    if (est.g_grad_grad <= -1.0 + tol) ++summary.steep;
    if (est.g_grad_time > -tol) ++summary.past_directed;
    summary.worst = std::max(summary.worst, est.g_grad_grad);
  }
  if (summary.reliable == 0) {
    summary.worst = 0.0;
    summary.fraction = 0.0;
  } else {
    summary.fraction =
        static_cast<double>(summary.steep) / static_cast<double>(summary.reliable);
  }
  return summary;
}

BoundCheck check_bound_inequality(const MetricModel& model, const CausalGraph& graph,
                                  const ScalarField& field, const CausalPath& path,
                                  double tol_grad) {
  if (path.size() < 2) {
    throw ArgumentError("check_bound_inequality: path needs at least two points");
  }
  std::vector<NodeId> nodes;
  for (const Vec2& point : path) {
    NodeId u = nearest_node(graph, point, 1e-9);
    if (u == kNoNode) {
      throw ArgumentError("check_bound_inequality: path point is not a graph node");
    }
    nodes.push_back(u);
  }
  BoundCheck check;
  check.length = curve_length(model, path);
  check.min_steepness = std::numeric_limits<double>::infinity();
  for (NodeId u : nodes) {
    GradientEstimate est = estimate_gradient(model, graph, field, u);
    if (!est.reliable) {
      check.outcome = BoundOutcome::Inconclusive;
      check.min_steepness = 0.0;
      return check;
    }
    const double steep2 = std::max(0.0, -est.g_grad_grad);
    check.min_steepness = std::min(check.min_steepness, std::sqrt(steep2));
  }
  const double lhs = std::abs(field.at(nodes.back()) - field.at(nodes.front()));
  check.slack = lhs - check.length * check.min_steepness;
  check.outcome = check.slack >= -tol_grad ? BoundOutcome::Holds : BoundOutcome::Fails;
  return check;
}

DualResult dual_potential(const CausalGraph& graph, NodeId p, NodeId q) {
  if (p >= graph.node_count() || q >= graph.node_count()) {
    throw ArgumentError("dual_potential: node id out of range");
  }
  if (graph.cyclic()) {
    throw CyclicGraphError("dual_potential: graph has a causal cycle");
  }
  const std::size_t n = graph.node_count();
  DistanceField to_q = distance_field(graph, std::vector<NodeId>{q},
                                      SweepDirection::ToSink);
  const double value = to_q.related(p) ? to_q.at(p) : 0.0;

  const double untouched = -std::numeric_limits<double>::infinity();
  std::vector<double> f(n, untouched);
  f[p] = 0.0;
  for (NodeId x = 0; x < n; ++x) {
    if (to_q.related(x)) f[x] = std::max(f[x], value - to_q.at(x));
  }
  for (NodeId u : graph.topo_order()) {
    if (f[u] == untouched) continue;
    auto [lo, hi] = graph.out_range(u);
    for (std::size_t e = lo; e < hi; ++e) {
      const GraphEdge& edge = graph.edges()[e];
      f[edge.to] = std::max(f[edge.to], f[u] + edge.weight);
    }
  }
  const auto& order = graph.topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId u = *it;
    if (f[u] != untouched) continue;
    double cap = 0.0;
    auto [lo, hi] = graph.out_range(u);
    for (std::size_t e = lo; e < hi; ++e) {
      const GraphEdge& edge = graph.edges()[e];
      cap = std::min(cap, f[edge.to] - edge.weight);
    }
    f[u] = cap;
  }

  DualResult result;
  result.field.provenance = FieldProvenance::DualPotential;
  result.field.values = std::move(f);
  result.value = std::max(result.field.at(q) - result.field.at(p), 0.0);
  return result;
}

LevelSetCheck check_level_set_hatting(const CausalGraph& graph, const ScalarField& field,
                                      double r, const std::vector<DivergentChain>& chains) {
  FlipReport flip = check_reverse_lipschitz(graph, field);
  if (!flip.clean()) {
    throw ArgumentError("check_level_set_hatting: field is not reverse-Lipschitz");
  }
  std::vector<double> weights;
  std::vector<std::vector<double>> incident(graph.node_count());
  for (const GraphEdge& edge : graph.edges()) {
    if (edge.weight > 0.0) {
      weights.push_back(edge.weight);
      incident[edge.from].push_back(edge.weight);
      incident[edge.to].push_back(edge.weight);
    }
  }
  const auto half_median = [](std::vector<double>& w) {
    auto mid = w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2);
    std::nth_element(w.begin(), mid, w.end());
    return 0.5 * *mid;
  };
  LevelSetCheck check;
  if (!weights.empty()) check.tolerance = half_median(weights);
  // Snap to exact hits when the level is realized; the widened band exists
  // only to catch levels that fall between node values. Its admission width
  // follows the local mesh weight, since a uniform global tolerance swallows
  // chrono-related neighbors wherever edges are cheaper than average.
  std::vector<NodeId> ids;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (std::abs(field.at(u) - r) <= kChronoEps) ids.push_back(u);
  }
  if (ids.empty()) {
    for (NodeId u = 0; u < graph.node_count(); ++u) {
      const double tol =
          incident[u].empty() ? check.tolerance : half_median(incident[u]);
      if (std::abs(field.at(u) - r) <= tol) ids.push_back(u);
    }
  }
  if (ids.empty()) {
    throw ArgumentError("check_level_set_hatting: level set is empty");
  }
  check.level_set = make_node_set(std::move(ids), SetTag::Achronal);
  check.report = is_hatting(graph, check.level_set, chains);
  check.passed = check.report.valid;
  return check;
}

ContinuityReport continuity_report(const CausalGraph& graph, const ScalarField& field,
                                   std::size_t top_k) {
  if (field.size() != graph.node_count()) {
    throw ArgumentError("continuity_report: field size does not match graph");
  }
  if (graph.proximity_pairs().empty()) {
    throw StructureError("continuity_report requires proximity edges");
  }
  ContinuityReport report;
  for (const auto& [a, b] : graph.proximity_pairs()) {
    const double jump = std::abs(field.at(a) - field.at(b));
    const double span = min_lift_norm(graph.model(), graph.position(a), graph.position(b));
    const double normalized = span > 0.0 ? jump / span : 0.0;
    report.max_normalized = std::max(report.max_normalized, normalized);
    report.top.push_back(JumpEdge{a, b, jump, normalized});
  }
  std::sort(report.top.begin(), report.top.end(), [](const JumpEdge& l, const JumpEdge& r) {
    if (l.normalized != r.normalized) return l.normalized > r.normalized;
    return std::make_pair(l.a, l.b) < std::make_pair(r.a, r.b);
  });
  if (report.top.size() > top_k) report.top.resize(top_k);
  return report;
}

}  // namespace causal_lab

#include "causal_lab/distance_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "causal_lab/parallel.hpp"
#include "causal_lab/rng.hpp"

namespace causal_lab {
namespace {

void require_acyclic(const CausalGraph& graph, const char* op) {
  if (graph.cyclic()) {
    throw CyclicGraphError(std::string(op) + ": graph has a causal cycle");
  }
}

void require_nodes(const CausalGraph& graph, const std::vector<NodeId>& ids,
                   const char* op) {
  for (NodeId u : ids) {
    if (u >= graph.node_count()) {
      throw ArgumentError(std::string(op) + ": node id out of range");
    }
  }
}

}  // namespace

DistanceField distance_field(const CausalGraph& graph,
                             const std::vector<NodeId>& sources,
                             SweepDirection direction) {
  require_acyclic(graph, "distance_field");
  if (sources.empty()) throw ArgumentError("distance_field: empty source set");
  require_nodes(graph, sources, "distance_field");

  const std::size_t n = graph.node_count();
  DistanceField f;
  f.direction = direction;
  f.sources = sources;
  f.value.assign(n, 0.0);
  f.related_bits.assign(n, 0);
  f.parent.assign(n, kNoNode);
  for (NodeId s : sources) f.related_bits[s] = 1;

  const auto& topo = graph.topo_order();
  const auto& edges = graph.edges();
  if (direction == SweepDirection::FromSource) {
    for (NodeId u : topo) {
      if (!f.related_bits[u]) continue;
      auto [b, e] = graph.out_range(u);
      for (auto k = b; k < e; ++k) {
        const GraphEdge& ed = edges[k];
        const double cand = f.value[u] + ed.weight;
        if (!f.related_bits[ed.to] || cand > f.value[ed.to]) {
          f.related_bits[ed.to] = 1;
          f.value[ed.to] = cand;
          f.parent[ed.to] = u;
        }
      }
    }
  } else {
    for (std::size_t i = n; i-- > 0;) {
      const NodeId u = topo[i];
      auto [b, e] = graph.out_range(u);
      for (auto k = b; k < e; ++k) {
        const GraphEdge& ed = edges[k];
        if (!f.related_bits[ed.to]) continue;
        const double cand = ed.weight + f.value[ed.to];
        if (!f.related_bits[u] || cand > f.value[u]) {
          f.related_bits[u] = 1;
          f.value[u] = cand;
          f.parent[u] = ed.to;
        }
      }
    }
  }
  return f;
}

std::vector<NodeId> extract_path(const DistanceField& field, NodeId target) {
  if (target >= field.value.size()) throw ArgumentError("extract_path: bad target");
  if (!field.related(target)) return {};
  std::vector<NodeId> path;
  NodeId u = target;
  while (u != kNoNode) {
    path.push_back(u);
    u = field.parent[u];
  }
  if (field.direction == SweepDirection::FromSource) {
    std::reverse(path.begin(), path.end());
  }
  return path;
}

double longest_path_distance(const CausalGraph& graph, NodeId p, NodeId q) {
  const DistanceField f = distance_field(graph, {p}, SweepDirection::FromSource);
  return f.value[q];
}

double distance_set_to_point(const CausalGraph& graph, const std::vector<NodeId>& set,
                             NodeId x) {
  const DistanceField f = distance_field(graph, set, SweepDirection::FromSource);
  if (x >= graph.node_count()) throw ArgumentError("distance_set_to_point: bad node");
  return f.value[x];
}

double distance_point_to_set(const CausalGraph& graph, NodeId x,
                             const std::vector<NodeId>& set) {
  const DistanceField f = distance_field(graph, set, SweepDirection::ToSink);
  if (x >= graph.node_count()) throw ArgumentError("distance_point_to_set: bad node");
  return f.value[x];
}

std::vector<std::vector<double>> distance_matrix(const CausalGraph& graph) {
  require_acyclic(graph, "distance_matrix");
  const std::size_t n = graph.node_count();
  if (n > 2000) throw ArgumentError("distance_matrix: graph too large (> 2000 nodes)");
  std::vector<std::vector<double>> table(n);
  parallel_for_blocks(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      table[u] = distance_field(graph, {static_cast<NodeId>(u)},
                                SweepDirection::FromSource)
                     .value;
    }
  });
  return table;
}

std::vector<TriangleViolation> check_reverse_triangle_with(
    const CausalGraph& graph, const std::function<double(NodeId, NodeId)>& dist,
    std::uint64_t seed, std::size_t max_triples) {
  require_acyclic(graph, "check_reverse_triangle");
  const std::size_t n = graph.node_count();
  std::vector<TriangleViolation> out;
  if (n < 3) return out;
  Rng rng(seed);
  for (std::size_t k = 0; k < max_triples; ++k) {
    const NodeId x = static_cast<NodeId>(rng.below(n));
    const NodeId y = static_cast<NodeId>(rng.below(n));
    const NodeId z = static_cast<NodeId>(rng.below(n));
    const double dxy = dist(x, y);
    if (dxy <= 0.0) continue;
    const double dyz = dist(y, z);
    if (dyz <= 0.0) continue;
    const double dxz = dist(x, z);
    if (dxz + 1e-9 < dxy + dyz) {
      out.push_back({x, y, z, dxy + dyz - dxz, false});
    }
  }
  return out;
}

std::vector<TriangleViolation> check_reverse_triangle(const CausalGraph& graph,
                                                      std::uint64_t seed,
                                                      std::size_t max_triples) {
  require_acyclic(graph, "check_reverse_triangle");
  const std::size_t n = graph.node_count();
  std::vector<TriangleViolation> out;
  if (n < 2) return out;

  Rng rng(seed);
  const std::size_t want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(max_triples))));
  std::vector<NodeId> srcs;
  if (n <= want) {
    for (NodeId u = 0; u < n; ++u) srcs.push_back(u);
  } else {
    for (std::size_t k = 0; k < want; ++k) {
      srcs.push_back(static_cast<NodeId>(rng.below(n)));
    }
    std::sort(srcs.begin(), srcs.end());
    srcs.erase(std::unique(srcs.begin(), srcs.end()), srcs.end());
  }

  std::vector<DistanceField> fields(srcs.size());
  parallel_for_blocks(srcs.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      fields[i] = distance_field(graph, {srcs[i]}, SweepDirection::FromSource);
    }
  });

  std::size_t used = 0;
  for (std::size_t ix = 0; ix < srcs.size() && used < max_triples; ++ix) {
    for (std::size_t iy = 0; iy < srcs.size() && used < max_triples; ++iy) {
      const NodeId x = srcs[ix], y = srcs[iy];
      if (x == y || !fields[ix].related(y)) continue;
      // one random z related to y, plus y's own farthest witness
      const NodeId z = static_cast<NodeId>(rng.below(n));
      ++used;
      if (fields[iy].related(z)) {
        const double gap = fields[ix].value[y] + fields[iy].value[z] -
                           fields[ix].value[z];
        if (gap > 1e-9) out.push_back({x, y, z, gap, false});
      }
    }
  }

  // set-to-point variant: d(S,y) >= d(S,x) + d(x,y)
  const std::size_t set_rounds = std::min<std::size_t>(20, n);
  for (std::size_t r = 0; r < set_rounds; ++r) {
    std::vector<NodeId> set;
    const std::size_t size = 1 + rng.below(8);
    for (std::size_t k = 0; k < size; ++k) {
      set.push_back(static_cast<NodeId>(rng.below(n)));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    const DistanceField fs = distance_field(graph, set, SweepDirection::FromSource);
    for (std::size_t ix = 0; ix < srcs.size(); ++ix) {
      const NodeId x = srcs[ix];
      if (!fs.related(x)) continue;
      const NodeId y = static_cast<NodeId>(rng.below(n));
      if (!fields[ix].related(y)) continue;
      const double gap = fs.value[x] + fields[ix].value[y] - fs.value[y];
      if (gap > 1e-9) {
        out.push_back({x, y, kNoNode, gap, true});
      }
    }
  }
  return out;
}

RefinementLadder build_ladder(std::shared_ptr<const MetricModel> model,
                              const LadderSpec& spec) {
  if (!model) throw ArgumentError("build_ladder: null model");
  if (spec.params.empty()) throw ArgumentError("build_ladder: no parameters");
  if (!(spec.step_factor > 0.0)) throw ArgumentError("build_ladder: bad step factor");
  for (std::size_t k = 1; k < spec.params.size(); ++k) {
    if (!(spec.params[k] < spec.params[k - 1])) {
      throw ArgumentError("build_ladder: parameters must strictly decrease");
    }
  }
  if (!(spec.params.back() > 0.0)) {
    throw ArgumentError("build_ladder: parameters must be positive");
  }
  RefinementLadder ladder;
  ladder.params = spec.params;
  for (const double eps : spec.params) {
    SamplingSpec s;
    s.mode = SampleMode::Grid;
    s.step = spec.step_factor * eps;
    s.window = spec.window;
    ladder.levels.push_back(build_graph(model, s, spec.horizon, spec.r_prox));
  }
  return ladder;
}

NodeId nearest_node(const CausalGraph& graph, const Vec2& target, double max_dist) {
  const MetricModel& model = graph.model();
  const Vec2 t = model.canonical(target);
  NodeId best = kNoNode;
  double best_d = max_dist;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    for (const Vec2& d : model.displacements(t, graph.position(u))) {
      const double nrm = d.norm();
      if (nrm < best_d || (best == kNoNode && nrm <= best_d)) {
        best = u;
        best_d = nrm;
      }
    }
  }
  return best;
}

GrowthTable divergence_probe(const RefinementLadder& ladder, const ProbeSpec& probe) {
  if (ladder.levels.empty()) throw ArgumentError("divergence_probe: empty ladder");
  GrowthTable table;
  for (std::size_t k = 0; k < ladder.levels.size(); ++k) {
    const CausalGraph& g = ladder.levels[k];
    const double eps = ladder.params[k];
    GrowthRow row;
    row.param = eps;
    row.log_inv_param = std::log(1.0 / eps);

    Vec2 a = probe.a;
    if (probe.eps_axis == 0) a.x0 = eps;
    if (probe.eps_axis == 1) a.x1 = eps;

    const double tol = g.meta().step > 0.0
                           ? 0.75 * g.meta().step
                           : 2.0 * mean_spacing(g.meta().window, g.node_count());
    const NodeId na = nearest_node(g, a, tol);
    const NodeId nb = nearest_node(g, probe.b, tol);
    if (na == kNoNode || nb == kNoNode) {
      row.note = "probe point missing at this level";
    } else if (g.cyclic()) {
      row.note = "level graph is cyclic";
    } else {
      row.distance = longest_path_distance(g, na, nb);
      row.included = true;
      ++table.included_count;
    }
    table.rows.push_back(std::move(row));
  }

  // least squares of distance against log(1/param)
  if (table.included_count >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double m = 0;
    for (const GrowthRow& r : table.rows) {
      if (!r.included) continue;
      sx += r.log_inv_param;
      sy += r.distance;
      sxx += r.log_inv_param * r.log_inv_param;
      sxy += r.log_inv_param * r.distance;
      m += 1.0;
    }
    const double denom = m * sxx - sx * sx;
    table.slope = denom != 0.0 ? (m * sxy - sx * sy) / denom
                               : std::numeric_limits<double>::quiet_NaN();
  } else {
    table.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

}  // namespace causal_lab

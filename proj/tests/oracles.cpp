#include "oracles.hpp"

#include <algorithm>
#include <limits>

namespace causal_lab::oracles {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void enumerate(const TinyDag& dag, int u, int q, double acc, double& best) {
  if (u == q) best = std::max(best, acc);
  for (const auto& [a, b, w] : dag.edges) {
    if (a == u) enumerate(dag, b, q, acc + w, best);
  }
}

}  // namespace

double brute_longest_path(const TinyDag& dag, int p, int q) {
  if (p == q) return 0.0;
  double best = kNegInf;
  enumerate(dag, p, q, 0.0, best);
  return best == kNegInf ? 0.0 : best;
}

bool brute_reachable(const TinyDag& dag, int p, int q) {
  if (p == q) return true;
  std::vector<bool> seen(dag.n, false);
  std::vector<int> stack{p};
  seen[p] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& [a, b, w] : dag.edges) {
      if (a == u && !seen[b]) {
        if (b == q) return true;
        seen[b] = true;
        stack.push_back(b);
      }
    }
  }
  return false;
}

double bellman_ford_longest(const TinyDag& dag, int p, int q) {
  std::vector<double> f(dag.n, kNegInf);
  f[p] = 0.0;
  for (int round = 0; round < dag.n; ++round) {
    bool changed = false;
    for (const auto& [a, b, w] : dag.edges) {
      if (f[a] != kNegInf && f[a] + w > f[b]) {
        f[b] = f[a] + w;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return f[q] == kNegInf ? 0.0 : f[q];
}

TinyDag random_dag(Rng& rng, int max_nodes) {
  TinyDag dag;
  dag.n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  for (int i = 0; i < dag.n; ++i) {
    for (int j = i + 1; j < dag.n; ++j) {
      if (rng.uniform() < 0.3) {
        const double w = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 2.0);
        dag.edges.emplace_back(i, j, w);
      }
    }
  }
  return dag;
}

double two_segment_distance(const MetricModel& model, const Vec2& a, const Vec2& b,
                            const Window& bends, double step) {
  const auto leg_time = [&](const Vec2& from, const Vec2& to, double& out) {
    const Vec2 delta{to.x0 - from.x0, to.x1 - from.x1};
    if (!model.segment_visible(from, delta)) return false;
    if (!segment_future_causal(model, from, delta)) return false;
    out = segment_proper_time(model, from, delta);
    return true;
  };

  double best = 0.0;
  double direct = 0.0;
  if (model.contains(a) && model.contains(b) && leg_time(a, b, direct)) {
    best = direct;
  }
  for (double x0 = bends.lo.x0; x0 <= bends.hi.x0 + 0.5 * step; x0 += step) {
    for (double x1 = bends.lo.x1; x1 <= bends.hi.x1 + 0.5 * step; x1 += step) {
      const Vec2 m{x0, x1};
      if (!model.contains(m)) continue;
      double first = 0.0, second = 0.0;
      if (!leg_time(a, m, first)) continue;
      if (!leg_time(m, b, second)) continue;
      best = std::max(best, first + second);
    }
  }
  return best;
}

CausalGraph graph_from_dag(const TinyDag& dag) {
  std::vector<Vec2> nodes;
  for (int i = 0; i < dag.n; ++i) {
    nodes.push_back({static_cast<double>(i), 0.0});
  }
  std::vector<GraphEdge> edges;
  for (const auto& [a, b, w] : dag.edges) {
    edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), w});
  }
  GraphMeta meta;
  meta.model_id = "minkowski2d";
  return CausalGraph(make_model("minkowski2d"), std::move(nodes), std::move(edges),
                     {}, std::move(meta));
}

}  // namespace causal_lab::oracles

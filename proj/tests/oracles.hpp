#pragma once

// Brute-force reference implementations the fast code is checked against.

#include <tuple>
#include <vector>

#include "causal_lab/causal_graph.hpp"
#include "causal_lab/rng.hpp"

namespace causal_lab::oracles {

struct TinyDag {
  int n = 0;
  std::vector<std::tuple<int, int, double>> edges;  // from < to
};

// Exhaustive enumeration of every path p -> q; 0 when no path exists.
double brute_longest_path(const TinyDag& dag, int p, int q);
bool brute_reachable(const TinyDag& dag, int p, int q);

// Bellman-Ford style fixpoint over the difference constraints
// f(v) >= f(u) + w for edges u->v, f(p) = 0; returns the tight f(q).
double bellman_ford_longest(const TinyDag& dag, int p, int q);

TinyDag random_dag(Rng& rng, int max_nodes);

// Wraps a TinyDag as a CausalGraph (synthetic positions, no proximity).
CausalGraph graph_from_dag(const TinyDag& dag);

// Best proper time over one- and two-segment visible causal paths a -> b,
// bending at lattice points of `bends` with spacing `step`; 0 when nothing
// connects.
double two_segment_distance(const MetricModel& model, const Vec2& a, const Vec2& b,
                            const Window& bends, double step);

}  // namespace causal_lab::oracles

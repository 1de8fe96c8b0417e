#include "causal_lab/achronal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"
#include "causal_lab/errors.hpp"
#include "causal_lab/metric_models.hpp"
#include "causal_lab/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace causal_lab;

namespace {

CausalGraph grid_graph(const std::string& model_id, const Window& window, double step,
                       double horizon = 0.0, double r_prox = 0.0) {
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = step;
  spec.window = window;
  spec.seed = 1;
  return build_graph(make_model(model_id), spec, horizon, r_prox);
}

NodeId node_at(const CausalGraph& graph, double x0, double x1) {
  NodeId u = nearest_node(graph, Vec2{x0, x1}, 1e-6);
  REQUIRE(u != kNoNode);
  return u;
}

std::vector<NodeId> ids_where(const CausalGraph& graph, double coord0) {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (std::abs(graph.position(u).x0 - coord0) < 1e-9) out.push_back(u);
  }
  return out;
}

// Positive-total-weight reachability by exhaustive path enumeration.
bool brute_chrono(const oracles::TinyDag& dag, const std::vector<NodeId>& from, int v) {
  for (NodeId u : from) {
    if (oracles::brute_reachable(dag, static_cast<int>(u), v) &&
        oracles::brute_longest_path(dag, static_cast<int>(u), v) > 1e-9) {
      return true;
    }
  }
  return false;
}

DivergentChain single_node_chain(const CausalGraph& graph, ChainDirection dir,
                                 NodeId witness, NodeId tail) {
  DivergentChain chain;
  chain.direction = dir;
  chain.nodes = {tail};
  chain.coords = {graph.position(tail)};
  chain.growth = {1.0};
  chain.seed_coord = graph.position(tail);
  chain.witness_coord = graph.position(witness);
  chain.witness = witness;
  chain.tail = tail;
  return chain;
}

}  // namespace

TEST_CASE("chronological future and past match exhaustive enumeration") {
  Rng rng(411);
  for (int trial = 0; trial < 200; ++trial) {
    oracles::TinyDag dag = oracles::random_dag(rng, 10);
    CausalGraph graph = oracles::graph_from_dag(dag);
    std::vector<NodeId> from;
    int picks = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < picks; ++k) from.push_back(static_cast<NodeId>(rng.below(dag.n)));
    NodeSet seed = make_node_set(from);

    NodeSet fut = chronological_future(graph, seed);
    CHECK(fut.tag == SetTag::FutureSet);
    for (int v = 0; v < dag.n; ++v) {
      CHECK(fut.contains(static_cast<NodeId>(v)) == brute_chrono(dag, seed.ids, v));
    }

    // mirrored sweep agrees with the forward one run per node
    NodeSet past = chronological_past(graph, seed);
    for (int v = 0; v < dag.n; ++v) {
      bool expect = false;
      for (NodeId u : seed.ids) {
        if (oracles::brute_longest_path(dag, v, static_cast<int>(u)) > 1e-9) expect = true;
      }
      CHECK(past.contains(static_cast<NodeId>(v)) == expect);
    }

    // growing the seed grows the future; taking the future twice adds nothing
    NodeSet wider = make_node_set({seed.ids});
    wider.ids.push_back(static_cast<NodeId>(rng.below(dag.n)));
    wider = make_node_set(std::move(wider.ids));
    NodeSet fut_wider = chronological_future(graph, wider);
    for (NodeId u : fut.ids) CHECK(fut_wider.contains(u));
    NodeSet fut_twice = chronological_future(graph, fut);
    for (NodeId u : fut_twice.ids) CHECK(fut.contains(u));
  }
}

TEST_CASE("chronological future of the empty set is empty") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{-0.5, -0.5}, {0.5, 0.5}}, 0.25);
  CHECK(chronological_future(graph, NodeSet{}).empty());
  CHECK(chronological_past(graph, NodeSet{}).empty());
  CHECK_THROWS_AS(chronological_future(graph, make_node_set({9999})), ArgumentError);
}

TEST_CASE("constant-time row is achronal, adding a timelike node breaks it") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{-1.0, -1.0}, {1.0, 1.0}}, 0.1,
                                 0.0, 0.102);
  NodeSet row = make_node_set(ids_where(graph, 0.0));
  CHECK(row.size() == 21);
  CHECK(is_achronal(graph, row).achronal);

  NodeSet spiked = row;
  NodeId above = node_at(graph, 0.3, 0.0);
  spiked.ids.push_back(above);
  spiked = make_node_set(std::move(spiked.ids));
  AchronalReport rep = is_achronal(graph, spiked);
  CHECK_FALSE(rep.achronal);
  CHECK(rep.witness_to == above);
  CHECK(graph.position(rep.witness_from).x0 == doctest::Approx(0.0));

  CHECK(is_achronal(graph, NodeSet{}).achronal);
  CHECK(is_achronal(graph, make_node_set({above})).achronal);
}

TEST_CASE("boundary of a point's future is its light cone shell") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{-1.0, -1.0}, {1.0, 1.0}}, 0.25,
                                 0.0, 0.26);
  NodeId origin = node_at(graph, 0.0, 0.0);
  NodeSet cone = chronological_future(graph, make_node_set({origin}));
  for (NodeId u : cone.ids) {
    CHECK(graph.position(u).x0 > std::abs(graph.position(u).x1));
  }
  NodeSet shell = boundary(graph, cone);
  std::set<std::pair<double, double>> got;
  for (NodeId u : shell.ids) got.insert({graph.position(u).x0, graph.position(u).x1});
  std::set<std::pair<double, double>> want{{0.0, 0.0}};
  for (int k = 1; k <= 4; ++k) {
    want.insert({0.25 * k, 0.25 * k});
    want.insert({0.25 * k, -0.25 * k});
  }
  CHECK(got == want);
}

TEST_CASE("boundary refuses graphs without proximity structure") {
  Rng rng(7);
  oracles::TinyDag dag = oracles::random_dag(rng, 8);
  CausalGraph graph = oracles::graph_from_dag(dag);
  CHECK_THROWS_AS(boundary(graph, make_node_set({0})), StructureError);
}

TEST_CASE("splitting surface of a half space settles on the initial row") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{-1.0, -1.0}, {1.0, 1.0}}, 0.1,
                                 0.0, 0.102);
  NodeSet row = make_node_set(ids_where(graph, 0.0));
  NodeSet half = chronological_future(graph, row);
  SplitResult split = build_splitting_surface(graph, half);
  CHECK(split.reached_fixpoint);
  CHECK(split.residue.empty());
  CHECK(split.surface.ids == row.ids);
  CHECK(split.iterate_sizes.front() == split.iterate_sizes.back());
  CHECK(split.surface.tag == SetTag::Surface);

  // the surface reproduces itself as the boundary of its own future
  NodeSet refl = boundary(graph, chronological_future(graph, split.surface));
  CHECK(refl.ids == split.surface.ids);
}

TEST_CASE("splitting surface around a slit classifies every node") {
  CausalGraph graph = grid_graph("slit_minkowski", Window{{-3.0, -2.5}, {3.0, 2.5}},
                                 0.25, 0.0, 0.26);
  NodeId apex = node_at(graph, 2.0, 0.0);
  NodeSet cone = chronological_future(graph, make_node_set({apex}));
  REQUIRE(cone.size() > 10);
  SplitResult split = build_splitting_surface(graph, cone);
  CHECK(split.reached_fixpoint);
  CHECK(split.residue.empty());
  CHECK(split.surface.size() > 0);
  for (std::size_t k = 0; k + 1 < split.iterate_sizes.size(); ++k) {
    CHECK(split.iterate_sizes[k] <= split.iterate_sizes[k + 1]);
  }
  CHECK(is_achronal(graph, split.surface).achronal);

  // every positive path from strictly below to strictly above the surface
  // crosses it exactly once: through one node, a null run, or a collar jump
  std::vector<char> in_s(graph.node_count(), 0);
  for (NodeId u : split.surface.ids) in_s[u] = 1;
  auto edge_skims_surface = [&](NodeId u, NodeId v) {
    const Vec2 a = graph.position(u);
    const Vec2 b = graph.position(v);
    const double bx = b.x0 - a.x0, bt = b.x1 - a.x1;
    const double len2 = bx * bx + bt * bt;
    for (NodeId s : split.surface.ids) {
      const Vec2 p = graph.position(s);
      double frac = len2 > 0.0
                        ? std::clamp(((p.x0 - a.x0) * bx + (p.x1 - a.x1) * bt) / len2,
                                     0.0, 1.0)
                        : 0.0;
      const double dx = p.x0 - (a.x0 + frac * bx);
      const double dt = p.x1 - (a.x1 + frac * bt);
      if (std::hypot(dx, dt) <= graph.meta().r_prox) return true;
    }
    return false;
  };
  NodeSet below_set = chronological_past(graph, split.surface);
  NodeSet above_set = chronological_future(graph, split.surface);
  std::vector<char> below(graph.node_count(), 0), above(graph.node_count(), 0);
  for (NodeId u : below_set.ids) below[u] = 1;
  for (NodeId u : above_set.ids) above[u] = 1;

  Rng rng(2024);
  int checked = 0;
  while (checked < 40) {
    NodeId a = below_set.ids[rng.below(below_set.ids.size())];
    DistanceField field = distance_field(graph, {a}, SweepDirection::FromSource);
    NodeId b = above_set.ids[rng.below(above_set.ids.size())];
    if (!field.chrono(b)) continue;
    std::vector<NodeId> path = extract_path(field, b);
    std::vector<std::size_t> hits;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (in_s[path[k]]) hits.push_back(k);
    }
    if (hits.empty()) {
      int jumps = 0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        if (below[path[k]] && above[path[k + 1]]) {
          ++jumps;
          CHECK(edge_skims_surface(path[k], path[k + 1]));
        }
      }
      CHECK(jumps == 1);
    } else {
      // consecutive surface hits may only be glued by null segments
      double first_val = 0.0, last_val = 0.0;
      double acc = 0.0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        auto [lo, hi] = graph.out_range(path[k]);
        double w = 0.0;
        for (std::size_t e = lo; e < hi; ++e) {
          if (graph.edges()[e].to == path[k + 1]) w = graph.edges()[e].weight;
        }
        acc += w;
        if (k + 1 == hits.front()) first_val = acc;
        if (k + 1 == hits.back()) last_val = acc;
      }
      if (hits.front() == 0) first_val = 0.0;
      if (hits.back() == 0) last_val = 0.0;
      CHECK(last_val - first_val <= 1e-12);
    }
    ++checked;
  }
}

TEST_CASE("splitting surface absorbs causally isolated nodes") {
  auto model = make_model("minkowski2d");
  std::vector<Vec2> nodes{{0.0, 0.0}, {0.0, 1.0}};
  CausalGraph graph = build_causal_dag(model, nodes, 1.5, 1.5);
  REQUIRE(graph.edge_count() == 0);
  REQUIRE(graph.proximity_pairs().size() == 1);
  SplitResult split = build_splitting_surface(graph, make_node_set({0}, SetTag::FutureSet));
  CHECK(split.residue.empty());
  CHECK(split.surface.ids == std::vector<NodeId>{0, 1});
}

TEST_CASE("splitting surface validates its input") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{-1.0, -1.0}, {1.0, 1.0}}, 0.1,
                                 0.0, 0.102);
  NodeSet row = make_node_set(ids_where(graph, 0.0));
  CHECK_THROWS_AS(build_splitting_surface(graph, row), ArgumentError);
  CHECK_THROWS_AS(build_splitting_surface(graph, NodeSet{}), ArgumentError);
}

TEST_CASE("divergence search finds chains on both sides of the pinch point") {
  LadderSpec lspec;
  lspec.window = Window{{0.0, -1.05}, {0.3, 1.05}};
  lspec.params = {0.1, 0.05, 0.025};
  RefinementLadder ladder = build_ladder(make_model("singular_wedge"), lspec);

  ChainSearchSpec cspec;
  cspec.threshold = 3.0;
  cspec.has_future_witness = true;
  cspec.future_witness = Vec2{0.0, 1.0};
  cspec.has_past_witness = true;
  cspec.past_witness = Vec2{0.0, -1.0};
  std::vector<DivergentChain> chains = detect_divergent_chains(ladder, cspec);

  int future = 0, past = 0;
  for (const DivergentChain& chain : chains) {
    REQUIRE(chain.nodes.size() == ladder.levels.size());
    for (std::size_t k = 0; k + 1 < chain.growth.size(); ++k) {
      CHECK(chain.growth[k + 1] > chain.growth[k]);
    }
    CHECK(chain.growth.back() >= 3.0);
    CHECK(std::abs(chain.seed_coord.x1) < 0.2);  // seeds hug the pinch point
    if (chain.direction == ChainDirection::Future) {
      ++future;
      CHECK(chain.seed_coord.x1 > 0.0);
    } else {
      ++past;
      CHECK(chain.seed_coord.x1 < 0.0);
    }
  }
  CHECK(future >= 1);
  CHECK(past >= 1);

  // and the whole pipeline: an achronal set with every chain on its good side
  const CausalGraph& fine = ladder.levels.back();
  NodeSet hatting = build_hatting(fine, chains);
  CHECK(hatting.tag == SetTag::Hatting);
  HattingReport report = is_hatting(fine, hatting, chains);
  CHECK(report.achronal);
  CHECK(report.valid);
}

TEST_CASE("divergence search on flat space comes back empty") {
  LadderSpec lspec;
  lspec.window = Window{{-0.05, -0.15}, {1.05, 0.15}};
  lspec.params = {0.1, 0.05, 0.025};
  RefinementLadder ladder = build_ladder(make_model("minkowski2d"), lspec);
  ChainSearchSpec cspec;
  cspec.threshold = 3.0;
  CHECK(detect_divergent_chains(ladder, cspec).empty());
}

TEST_CASE("hatting for a single chain is its witness") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{0.0, 0.0}, {1.0, 1.0}}, 0.25,
                                 0.0, 0.26);
  NodeId witness = node_at(graph, 1.0, 0.5);
  NodeId tail = node_at(graph, 0.25, 0.5);
  std::vector<DivergentChain> chains{
      single_node_chain(graph, ChainDirection::Future, witness, tail)};
  NodeSet hatting = build_hatting(graph, chains);
  CHECK(hatting.ids == std::vector<NodeId>{witness});
  CHECK(is_hatting(graph, hatting, chains).valid);
}

TEST_CASE("hatting adjoins unrelated witnesses directly") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{0.0, 0.0}, {1.0, 1.0}}, 0.125,
                                 0.0, 0.13);
  NodeId wf = node_at(graph, 0.875, 0.125);
  NodeId tf = node_at(graph, 0.75, 0.125);
  NodeId wp = node_at(graph, 0.125, 0.875);
  NodeId tp = node_at(graph, 0.25, 0.875);
  std::vector<DivergentChain> chains{
      single_node_chain(graph, ChainDirection::Future, wf, tf),
      single_node_chain(graph, ChainDirection::Past, wp, tp)};
  NodeSet hatting = build_hatting(graph, chains);
  CHECK(hatting.size() == 2);
  CHECK(hatting.contains(wf));
  CHECK(hatting.contains(wp));
  HattingReport report = is_hatting(graph, hatting, chains);
  CHECK(report.valid);
}

TEST_CASE("a witness below the set gets replaced by a boundary node above it") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{0.0, 0.0}, {1.0, 1.0}}, 0.125,
                                 0.0, 0.13);
  NodeId wp = node_at(graph, 0.875, 0.5);
  NodeId tp = node_at(graph, 1.0, 0.5);
  NodeId wf = node_at(graph, 0.125, 0.5);
  NodeId tf = node_at(graph, 0.0, 0.5);
  std::vector<DivergentChain> chains{
      single_node_chain(graph, ChainDirection::Future, wf, tf),
      single_node_chain(graph, ChainDirection::Past, wp, tp)};
  NodeSet hatting = build_hatting(graph, chains);
  CHECK(hatting.size() == 2);
  CHECK(hatting.contains(wp));
  CHECK_FALSE(hatting.contains(wf));  // replaced by its projection
  HattingReport report = is_hatting(graph, hatting, chains);
  CHECK(report.valid);
}

TEST_CASE("a witness above the set contributes separating boundary nodes") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{0.0, 0.0}, {1.0, 1.0}}, 0.125,
                                 0.0, 0.13);
  NodeId wp = node_at(graph, 0.125, 0.125);
  NodeId tp = node_at(graph, 0.25, 0.125);
  NodeId wf = node_at(graph, 0.875, 0.625);
  NodeId tf = node_at(graph, 0.25, 0.625);
  std::vector<DivergentChain> chains{
      single_node_chain(graph, ChainDirection::Future, wf, tf),
      single_node_chain(graph, ChainDirection::Past, wp, tp)};
  NodeSet hatting = build_hatting(graph, chains);
  CHECK(hatting.size() >= 2);
  CHECK(hatting.contains(wp));
  CHECK_FALSE(hatting.contains(wf));
  HattingReport report = is_hatting(graph, hatting, chains);
  CHECK(report.valid);
}

TEST_CASE("hatting checks reject sets on the wrong side") {
  CausalGraph graph = grid_graph("minkowski2d", Window{{0.0, 0.0}, {1.0, 1.0}}, 0.25,
                                 0.0, 0.26);
  NodeId witness = node_at(graph, 1.0, 0.5);
  NodeId tail = node_at(graph, 0.25, 0.5);
  std::vector<DivergentChain> chains{
      single_node_chain(graph, ChainDirection::Future, witness, tail)};
  // a set strictly below the tail leaves the chain on its bad side
  NodeSet low = make_node_set({node_at(graph, 0.0, 0.5)});
  HattingReport report = is_hatting(graph, low, chains);
  CHECK(report.achronal);
  CHECK_FALSE(report.valid);
  CHECK_FALSE(report.chain_ok[0]);
  CHECK(is_hatting(graph, low, {}).valid);  // no chains, achronal set passes
  CHECK_THROWS_AS(build_hatting(graph, {}), ArgumentError);
}

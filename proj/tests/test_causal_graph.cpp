#include "causal_lab/causal_graph.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <vector>

#include "causal_lab/rng.hpp"
#include "doctest.h"

using namespace causal_lab;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<std::vector<bool>> reach_matrix(const CausalGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (NodeId u = 0; u < n; ++u) {
    std::vector<NodeId> stack{u};
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      auto [b, e] = g.out_range(v);
      for (auto k = b; k < e; ++k) {
        const NodeId w = g.edges()[k].to;
        if (!r[u][w]) {
          r[u][w] = true;
          stack.push_back(w);
        }
      }
    }
  }
  return r;
}

std::vector<Vec2> threading_ring(double delta) {
  const double m = std::sqrt(1.0 + delta);
  const double mu = (m - 1.0) * kPi / 8.0;
  const double rise = kPi / 2.0 + 2.0 * mu;
  std::vector<Vec2> nodes;
  for (int k = 0; k <= 8; ++k) {
    nodes.push_back({-kPi / 4.0 + k * kPi / 16.0, -kPi / 4.0 - mu + k * rise / 8.0});
  }
  for (int k = 1; k < 24; ++k) {
    nodes.push_back({kPi / 4.0 + k * 3.0 * kPi / 2.0 / 24.0,
                     kPi / 4.0 + mu - k * rise / 24.0});
  }
  return nodes;
}
}  // namespace

TEST_CASE("grid sampling keeps in-domain lattice points") {
  auto m = make_model("minkowski2d");
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = 0.5;
  spec.window = {{0.0, 0.0}, {1.0, 1.0}};
  const auto pts = sample_points(*m, spec);
  CHECK(pts.size() == 9);

  auto slit = make_model("slit_minkowski");
  spec.window = {{-1.0, -1.0}, {1.0, 1.0}};
  const auto spts = sample_points(*slit, spec);
  CHECK(spts.size() == 25 - 5);  // the five lattice points on the slit drop out
  for (const auto& p : spts) {
    CHECK_FALSE((std::abs(p.x1) < 1e-15 && std::abs(p.x0) <= 1.0));
  }
}

TEST_CASE("sampling rejects bad specs and empty windows") {
  auto m = make_model("minkowski2d");
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = 0.0;
  spec.window = {{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(sample_points(*m, spec), ArgumentError);
  spec.step = 0.5;
  spec.window = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(sample_points(*m, spec), ArgumentError);

  auto wedge = make_model("singular_wedge");
  SamplingSpec inside_removed;
  inside_removed.mode = SampleMode::Grid;
  inside_removed.step = 0.05;
  inside_removed.window = {{0.5, -0.1}, {0.9, 0.1}};
  CHECK_THROWS_AS(sample_points(*wedge, inside_removed), SamplingError);
}

TEST_CASE("sprinkle count tracks the target intensity") {
  auto m = make_model("minkowski2d");
  SamplingSpec spec;
  spec.mode = SampleMode::Sprinkle;
  spec.density = 100.0;
  spec.window = {{0.0, 0.0}, {1.0, 1.0}};
  double total = 0.0;
  const int runs = 500;
  for (int s = 0; s < runs; ++s) {
    spec.seed = 1000 + s;
    total += static_cast<double>(sample_points(*m, spec).size());
  }
  const double mean = total / runs;
  const double sigma_mean = std::sqrt(100.0) / std::sqrt(static_cast<double>(runs));
  CHECK(std::abs(mean - 100.0) <= 3.0 * sigma_mean);
}

TEST_CASE("two point graphs") {
  auto m = make_model("minkowski2d");
  const CausalGraph g = build_causal_dag(m, {{0.0, 0.0}, {1.0, 0.0}}, 2.0, 2.0);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0].from == 0);
  CHECK(g.edges()[0].to == 1);
  CHECK(g.edges()[0].weight == doctest::Approx(1.0).epsilon(1e-12));

  const CausalGraph h = build_causal_dag(m, {{0.0, 0.0}, {1.0, 2.0}}, 3.0, 3.0);
  CHECK(h.edge_count() == 0);
}

TEST_CASE("grid graph edge and proximity structure") {
  auto m = make_model("minkowski2d");
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = 0.5;
  spec.window = {{0.0, 0.0}, {1.0, 1.0}};
  const CausalGraph g = build_graph(m, spec, 0.55, 0.55);
  CHECK(g.node_count() == 9);
  // only vertical timelike hops fit inside horizon 0.55
  CHECK(g.edge_count() == 6);
  for (const auto& e : g.edges()) {
    CHECK(g.position(e.to).x0 - g.position(e.from).x0 == doctest::Approx(0.5));
    CHECK(e.weight == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(g.proximity_pairs().size() == 12);
  CHECK_FALSE(g.cyclic());
  REQUIRE(g.topo_order().size() == 9);
  // edges point forward in the order
  std::vector<std::size_t> place(9);
  for (std::size_t i = 0; i < 9; ++i) place[g.topo_order()[i]] = i;
  for (const auto& e : g.edges()) CHECK(place[e.from] < place[e.to]);
}

TEST_CASE("sprinkled flat graphs are acyclic") {
  auto m = make_model("minkowski2d");
  SamplingSpec spec;
  spec.mode = SampleMode::Sprinkle;
  spec.density = 300.0;
  spec.window = {{0.0, 0.0}, {1.0, 1.0}};
  spec.seed = 42;
  const CausalGraph g = build_graph(m, spec);
  CHECK(g.node_count() > 200);
  CHECK_FALSE(g.cyclic());
  CHECK(g.topo_order().size() == g.node_count());

  auto widened = widen_cones(m, 0.1);
  const CausalGraph gw = build_graph(widened, spec);
  CHECK_FALSE(gw.cyclic());
  CHECK(gw.edge_count() > g.edge_count());  // wider cones admit more edges
}

TEST_CASE("graphs are identical for any worker count") {
  auto m = make_model("slit_minkowski");
  SamplingSpec spec;
  spec.mode = SampleMode::Sprinkle;
  spec.density = 250.0;
  spec.window = {{-2.0, -2.0}, {2.0, 2.0}};
  spec.seed = 7;

  setenv("CAUSAL_LAB_WORKERS", "1", 1);
  const CausalGraph a = build_graph(m, spec);
  setenv("CAUSAL_LAB_WORKERS", "7", 1);
  const CausalGraph b = build_graph(m, spec);
  unsetenv("CAUSAL_LAB_WORKERS");

  REQUIRE(a.node_count() == b.node_count());
  REQUIRE(a.edge_count() == b.edge_count());
  for (std::size_t k = 0; k < a.edge_count(); ++k) {
    CHECK(a.edges()[k].from == b.edges()[k].from);
    CHECK(a.edges()[k].to == b.edges()[k].to);
    CHECK(a.edges()[k].weight == b.edges()[k].weight);
  }
  CHECK(a.proximity_pairs() == b.proximity_pairs());
  CHECK(a.topo_order() == b.topo_order());
}

TEST_CASE("cylinder seam carries edges and proximity") {
  auto m = make_model("slit_cylinder");
  const std::vector<Vec2> nodes{{kPi - 0.05, 0.0}, {-kPi + 0.05, 0.0}};
  const CausalGraph g = build_causal_dag(m, nodes, 0.3, 0.3);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0].from == 0);
  CHECK(g.edges()[0].to == 1);
  CHECK(g.edges()[0].weight == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(g.proximity_pairs().size() == 1);
}

TEST_CASE("widened cylinder threads a causal cycle, base stays acyclic") {
  const double delta = 0.1;
  auto base = make_model("slit_cylinder");
  std::vector<Vec2> nodes;
  for (const Vec2& p : threading_ring(delta)) nodes.push_back(base->canonical(p));

  auto widened = widen_cones(base, delta);
  const CausalGraph gw = build_causal_dag(widened, nodes, 0.3, 0.3);
  CHECK(gw.cyclic());
  CHECK(gw.topo_order().empty());

  const CausalGraph g0 = build_causal_dag(base, nodes, 0.3, 0.3);
  CHECK_FALSE(g0.cyclic());
}

TEST_CASE("edges survive reclassification at finer subdivision") {
  auto m = make_model("singular_wedge");
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = 0.05;
  spec.window = {{0.0, -0.5}, {0.3, 0.5}};
  const CausalGraph g = build_graph(m, spec);
  REQUIRE(g.edge_count() > 100);
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const auto& e = g.edges()[rng.below(g.edge_count())];
    const Vec2 d = g.position(e.to) - g.position(e.from);
    CHECK(segment_future_causal(*m, g.position(e.from), d, 32));
  }
}

TEST_CASE("edge relation is transitive where visible and in range") {
  auto m = make_model("singular_wedge");
  SamplingSpec spec;
  spec.mode = SampleMode::Grid;
  spec.step = 0.05;
  spec.window = {{0.0, -0.5}, {0.3, 0.5}};
  const CausalGraph g = build_graph(m, spec);
  const double horizon = g.meta().horizon;
  Rng rng(11);
  int checked = 0;
  for (int k = 0; k < 5000 && checked < 500; ++k) {
    const auto& e1 = g.edges()[rng.below(g.edge_count())];
    auto [b, e] = g.out_range(e1.to);
    if (b == e) continue;
    const auto& e2 = g.edges()[b + rng.below(e - b)];
    const Vec2 p = g.position(e1.from);
    const Vec2 d = g.position(e2.to) - p;
    if (d.norm() > horizon) continue;
    if (!m->segment_visible(p, d)) continue;
    ++checked;
    CHECK(segment_future_causal(*m, p, d));
  }
  CHECK(checked > 100);
}

TEST_CASE("halving the grid step preserves reachability") {
  auto m = make_model("minkowski2d");
  SamplingSpec coarse;
  coarse.mode = SampleMode::Grid;
  coarse.step = 0.25;
  coarse.window = {{0.0, 0.0}, {1.0, 1.0}};
  SamplingSpec fine = coarse;
  fine.step = 0.125;

  const CausalGraph gc = build_graph(m, coarse);
  const CausalGraph gf = build_graph(m, fine);
  const auto rc = reach_matrix(gc);
  const auto rf = reach_matrix(gf);

  std::map<std::pair<long, long>, NodeId> fine_at;
  for (NodeId i = 0; i < gf.node_count(); ++i) {
    const Vec2 p = gf.position(i);
    fine_at[{std::lround(p.x0 * 8), std::lround(p.x1 * 8)}] = i;
  }
  for (NodeId u = 0; u < gc.node_count(); ++u) {
    for (NodeId v = 0; v < gc.node_count(); ++v) {
      if (!rc[u][v]) continue;
      const Vec2 pu = gc.position(u), pv = gc.position(v);
      const NodeId fu = fine_at.at({std::lround(pu.x0 * 8), std::lround(pu.x1 * 8)});
      const NodeId fv = fine_at.at({std::lround(pv.x0 * 8), std::lround(pv.x1 * 8)});
      CHECK(rf[fu][fv]);
    }
  }
}

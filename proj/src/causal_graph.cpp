#include "causal_lab/causal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "causal_lab/parallel.hpp"
#include "causal_lab/rng.hpp"

namespace causal_lab {
namespace {

double sprinkle_intensity(const MetricModel& model, const Vec2& p, double density) {
  const double det = model.metric_at(p).det();
  return density * std::sqrt(std::max(0.0, -det));
}

std::vector<Vec2> grid_sample(const MetricModel& model, const SamplingSpec& spec) {
  const Window& w = spec.window;
  const int n0 = static_cast<int>(std::floor((w.hi.x0 - w.lo.x0) / spec.step + 1e-9));
  const int n1 = static_cast<int>(std::floor((w.hi.x1 - w.lo.x1) / spec.step + 1e-9));
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n0 + 1) * (n1 + 1));
  std::set<std::pair<double, double>> seen;
  for (int i = 0; i <= n0; ++i) {
    for (int j = 0; j <= n1; ++j) {
      const Vec2 p{w.lo.x0 + i * spec.step, w.lo.x1 + j * spec.step};
      if (!model.contains(p)) continue;
      const Vec2 c = model.canonical(p);
      if (seen.insert({c.x0, c.x1}).second) out.push_back(c);
    }
  }
  return out;
}

std::vector<Vec2> sprinkle_sample(const MetricModel& model, const SamplingSpec& spec) {
  const Window& w = spec.window;
  // Thinning bound: scan the window for the intensity supremum. Unbounded
  // intensities (the singular model near its puncture) get clipped; grids
  // are the supported sampler there.
  double peak = 0.0;
  const int scan = 200;
  for (int i = 0; i <= scan; ++i) {
    for (int j = 0; j <= scan; ++j) {
      const Vec2 p{w.lo.x0 + (w.hi.x0 - w.lo.x0) * i / scan,
                   w.lo.x1 + (w.hi.x1 - w.lo.x1) * j / scan};
      if (!model.contains(p)) continue;
      peak = std::max(peak, sprinkle_intensity(model, p, spec.density));
    }
  }
  if (peak <= 0.0) throw SamplingError("sprinkle: window misses the model domain");
  const double bound = peak * 1.5;

  Rng rng(spec.seed);
  const std::uint64_t count = rng.poisson(bound * w.area());
  std::vector<Vec2> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const Vec2 p{rng.uniform(w.lo.x0, w.hi.x0), rng.uniform(w.lo.x1, w.hi.x1)};
    const double u = rng.uniform();
    if (!model.contains(p)) continue;
    if (u * bound <= sprinkle_intensity(model, p, spec.density)) {
      out.push_back(model.canonical(p));
    }
  }
  return out;
}

struct BucketGrid {
  double cell = 1.0;
  double lo0 = 0.0, lo1 = 0.0;
  int n0 = 1, n1 = 1;
  std::vector<std::vector<NodeId>> cells;

  int clamp0(int i) const { return std::min(std::max(i, 0), n0 - 1); }
  int clamp1(int i) const { return std::min(std::max(i, 0), n1 - 1); }
  int index_of(double x0, double x1) const {
    const int i = clamp0(static_cast<int>(std::floor((x0 - lo0) / cell)));
    const int j = clamp1(static_cast<int>(std::floor((x1 - lo1) / cell)));
    return i * n1 + j;
  }
};

}  // namespace

std::vector<Vec2> sample_points(const MetricModel& model, const SamplingSpec& spec) {
  if (!spec.window.valid()) throw ArgumentError("sampling: degenerate window");
  std::vector<Vec2> out;
  if (spec.mode == SampleMode::Grid) {
    if (!(spec.step > 0.0)) throw ArgumentError("sampling: grid step must be > 0");
    out = grid_sample(model, spec);
  } else {
    if (!(spec.density > 0.0)) throw ArgumentError("sampling: density must be > 0");
    out = sprinkle_sample(model, spec);
  }
  if (out.empty()) throw SamplingError("sampling produced no in-domain points");
  return out;
}

double mean_spacing(const Window& window, std::size_t node_count) {
  return std::sqrt(window.area() / std::max<std::size_t>(node_count, 1));
}

CausalGraph build_causal_dag(std::shared_ptr<const MetricModel> model,
                             const std::vector<Vec2>& nodes, double horizon,
                             double r_prox) {
  if (!model) throw ArgumentError("build_causal_dag: null model");
  if (nodes.empty()) throw ArgumentError("build_causal_dag: no nodes");
  const std::size_t n = nodes.size();

  Window bbox{nodes[0], nodes[0]};
  for (const Vec2& p : nodes) {
    bbox.lo.x0 = std::min(bbox.lo.x0, p.x0);
    bbox.lo.x1 = std::min(bbox.lo.x1, p.x1);
    bbox.hi.x0 = std::max(bbox.hi.x0, p.x0);
    bbox.hi.x1 = std::max(bbox.hi.x1, p.x1);
  }
  const double spacing = mean_spacing(bbox, n);
  if (!(horizon > 0.0) || !(r_prox > 0.0)) {
    if (!(spacing > 0.0)) {
      throw ArgumentError("build_causal_dag: degenerate node set needs explicit radii");
    }
    if (!(horizon > 0.0)) horizon = 4.0 * spacing;
    if (!(r_prox > 0.0)) r_prox = 1.5 * spacing;
  }

  const double period = model->period_x0();
  const double cell = std::max(horizon, r_prox);
  BucketGrid grid;
  grid.cell = cell;
  grid.lo0 = bbox.lo.x0 - (period > 0.0 ? period : 0.0) - cell;
  grid.lo1 = bbox.lo.x1 - cell;
  grid.n0 = std::max(1, static_cast<int>(std::ceil(
                            (bbox.hi.x0 + (period > 0.0 ? period : 0.0) + cell -
                             grid.lo0) / cell)));
  grid.n1 = std::max(1, static_cast<int>(std::ceil((bbox.hi.x1 + cell - grid.lo1) / cell)));
  grid.cells.resize(static_cast<std::size_t>(grid.n0) * grid.n1);
  for (NodeId i = 0; i < n; ++i) {
    grid.cells[grid.index_of(nodes[i].x0, nodes[i].x1)].push_back(i);
    if (period > 0.0) {
      grid.cells[grid.index_of(nodes[i].x0 + period, nodes[i].x1)].push_back(i);
      grid.cells[grid.index_of(nodes[i].x0 - period, nodes[i].x1)].push_back(i);
    }
  }

  const bool flat = model->constant_metric();
  const int class_samples = flat ? 1 : 8;
  const int weight_subdiv = flat ? 1 : 64;
  const double reach = horizon * (1.0 + 1e-12) + 1e-12;
  const double prox_reach = r_prox * (1.0 + 1e-12) + 1e-12;

  std::vector<std::vector<GraphEdge>> edges_of(n);
  std::vector<std::vector<NodeId>> prox_of(n);

  parallel_for_blocks(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<NodeId> stamp(n, static_cast<NodeId>(-1));
    std::vector<NodeId> candidates;
    for (std::size_t i = lo; i < hi; ++i) {
      const NodeId ii = static_cast<NodeId>(i);
      const Vec2 pi = nodes[i];
      candidates.clear();
      const double shifts[3] = {0.0, period, -period};
      const int nshift = period > 0.0 ? 3 : 1;
      for (int s = 0; s < nshift; ++s) {
        const int ci = static_cast<int>(std::floor((pi.x0 + shifts[s] - grid.lo0) / cell));
        const int cj = static_cast<int>(std::floor((pi.x1 - grid.lo1) / cell));
        for (int di = -1; di <= 1; ++di) {
          for (int dj = -1; dj <= 1; ++dj) {
            const int gi = grid.clamp0(ci + di), gj = grid.clamp1(cj + dj);
            for (NodeId j : grid.cells[static_cast<std::size_t>(gi) * grid.n1 + gj]) {
              if (j == ii || stamp[j] == ii) continue;
              stamp[j] = ii;
              candidates.push_back(j);
            }
          }
        }
      }
      std::sort(candidates.begin(), candidates.end());
      for (NodeId j : candidates) {
        double best = -1.0;
        // Spatial adjacency must hold inside the manifold: two nodes whose
        // connecting segment leaves it (through a slit, say) are not neighbors.
        bool prox_visible = false;
        for (const Vec2& d : model->displacements(pi, nodes[j])) {
          const double nrm = d.norm();
          if (nrm > reach && nrm > prox_reach) continue;
          if (!model->segment_visible(pi, d)) continue;
          if (nrm <= prox_reach) prox_visible = true;
          if (nrm > reach) continue;
          if (!segment_future_causal(*model, pi, d, class_samples)) continue;
          best = std::max(best, segment_proper_time(*model, pi, d, weight_subdiv));
        }
        if (best >= 0.0) {
          edges_of[i].push_back({ii, j, best});
        }
        if (ii < j && prox_visible) {
          prox_of[i].push_back(j);
        }
      }
    }
  });

  std::vector<GraphEdge> edges;
  std::vector<std::pair<NodeId, NodeId>> proximity;
  for (std::size_t i = 0; i < n; ++i) {
    edges.insert(edges.end(), edges_of[i].begin(), edges_of[i].end());
    for (NodeId j : prox_of[i]) proximity.emplace_back(static_cast<NodeId>(i), j);
  }

  GraphMeta meta;
  meta.model_id = model->id();
  meta.horizon = horizon;
  meta.r_prox = r_prox;
  meta.window = bbox;
  return CausalGraph(std::move(model), nodes, std::move(edges), std::move(proximity),
                     std::move(meta));
}

CausalGraph build_graph(std::shared_ptr<const MetricModel> model,
                        const SamplingSpec& spec, double horizon, double r_prox) {
  if (!model) throw ArgumentError("build_graph: null model");
  const std::vector<Vec2> nodes = sample_points(*model, spec);
  const double spacing = mean_spacing(spec.window, nodes.size());
  if (!(horizon > 0.0)) horizon = 4.0 * spacing;
  if (!(r_prox > 0.0)) r_prox = 1.5 * spacing;
  CausalGraph g = build_causal_dag(model, nodes, horizon, r_prox);
  g.meta().mode = spec.mode;
  g.meta().step = spec.step;
  g.meta().density = spec.density;
  g.meta().window = spec.window;
  g.meta().seed = spec.seed;
  return g;
}

CausalGraph::CausalGraph(std::shared_ptr<const MetricModel> model,
                         std::vector<Vec2> nodes, std::vector<GraphEdge> edges,
                         std::vector<std::pair<NodeId, NodeId>> proximity,
                         GraphMeta meta)
    : model_(std::move(model)),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      proximity_(std::move(proximity)),
      meta_(std::move(meta)) {
  const std::size_t n = nodes_.size();
  std::sort(edges_.begin(), edges_.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });

  out_offsets_.assign(n + 1, 0);
  for (const GraphEdge& e : edges_) {
    if (e.from >= n || e.to >= n) throw ArgumentError("edge endpoint out of range");
    if (!(e.weight >= 0.0)) throw ArgumentError("negative edge weight");
    ++out_offsets_[e.from + 1];
  }
  for (std::size_t i = 0; i < n; ++i) out_offsets_[i + 1] += out_offsets_[i];

  prox_offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : proximity_) {
    if (u >= n || v >= n) throw ArgumentError("proximity endpoint out of range");
    ++prox_offsets_[u + 1];
    ++prox_offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) prox_offsets_[i + 1] += prox_offsets_[i];
  prox_targets_.resize(prox_offsets_[n]);
  std::vector<std::uint32_t> cursor(prox_offsets_.begin(), prox_offsets_.end() - 1);
  for (const auto& [u, v] : proximity_) {
    prox_targets_[cursor[u]++] = v;
    prox_targets_[cursor[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(prox_targets_.begin() + prox_offsets_[i],
              prox_targets_.begin() + prox_offsets_[i + 1]);
  }

  // Kahn's algorithm; leftovers mean a cycle.
  std::vector<std::uint32_t> indeg(n, 0);
  for (const GraphEdge& e : edges_) ++indeg[e.to];
  std::queue<NodeId> ready;
  for (NodeId u = 0; u < n; ++u) {
    if (indeg[u] == 0) ready.push(u);
  }
  topo_order_.reserve(n);
  while (!ready.empty()) {
    const NodeId u = ready.front();
    ready.pop();
    topo_order_.push_back(u);
    for (std::uint32_t k = out_offsets_[u]; k < out_offsets_[u + 1]; ++k) {
      if (--indeg[edges_[k].to] == 0) ready.push(edges_[k].to);
    }
  }
  if (topo_order_.size() != n) {
    cyclic_ = true;
    topo_order_.clear();
  }
}

}  // namespace causal_lab

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "causal_lab/errors.hpp"
#include "causal_lab/geometry.hpp"
#include "causal_lab/metric_models.hpp"

namespace causal_lab {

using NodeId = std::uint32_t;

struct Window {
  Vec2 lo;
  Vec2 hi;

  double area() const { return (hi.x0 - lo.x0) * (hi.x1 - lo.x1); }
  bool valid() const { return hi.x0 > lo.x0 && hi.x1 > lo.x1; }
  bool holds(const Vec2& p) const {
    return p.x0 >= lo.x0 && p.x0 <= hi.x0 && p.x1 >= lo.x1 && p.x1 <= hi.x1;
  }
};

enum class SampleMode { Grid, Sprinkle };

struct SamplingSpec {
  SampleMode mode = SampleMode::Sprinkle;
  double step = 0.0;     // grid lattice spacing
  double density = 0.0;  // sprinkle intensity multiplier
  Window window;
  std::uint64_t seed = 0;
};

struct GraphEdge {
  NodeId from = 0;
  NodeId to = 0;
  double weight = 0.0;
};

struct GraphMeta {
  std::string model_id;
  SampleMode mode = SampleMode::Sprinkle;
  double step = 0.0;
  double density = 0.0;
  double horizon = 0.0;
  double r_prox = 0.0;
  double delta = 0.0;
  Window window;
  std::uint64_t seed = 0;
};

// Immutable weighted causal digraph over sampled points, with an undirected
// spatial proximity relation on the side.
class CausalGraph {
 public:
  CausalGraph(std::shared_ptr<const MetricModel> model, std::vector<Vec2> nodes,
              std::vector<GraphEdge> edges,
              std::vector<std::pair<NodeId, NodeId>> proximity, GraphMeta meta);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const Vec2& position(NodeId u) const { return nodes_[u]; }
  const std::vector<Vec2>& positions() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<std::pair<NodeId, NodeId>>& proximity_pairs() const {
    return proximity_;
  }

  // Out-edges of u as index range into edges() (sorted by from, then to).
  std::pair<std::uint32_t, std::uint32_t> out_range(NodeId u) const {
    return {out_offsets_[u], out_offsets_[u + 1]};
  }

  // Proximity neighbors of u.
  const NodeId* prox_begin(NodeId u) const {
    return prox_targets_.data() + prox_offsets_[u];
  }
  const NodeId* prox_end(NodeId u) const {
    return prox_targets_.data() + prox_offsets_[u + 1];
  }

  bool cyclic() const { return cyclic_; }
  // Empty when the graph is cyclic.
  const std::vector<NodeId>& topo_order() const { return topo_order_; }

  const MetricModel& model() const { return *model_; }
  std::shared_ptr<const MetricModel> model_ptr() const { return model_; }
  const GraphMeta& meta() const { return meta_; }
  GraphMeta& meta() { return meta_; }

 private:
  std::shared_ptr<const MetricModel> model_;
  std::vector<Vec2> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::pair<NodeId, NodeId>> proximity_;
  std::vector<std::uint32_t> out_offsets_;
  std::vector<std::uint32_t> prox_offsets_;
  std::vector<NodeId> prox_targets_;
  std::vector<NodeId> topo_order_;
  bool cyclic_ = false;
  GraphMeta meta_;
};

// In-domain sample of the window: full lattice for grid mode, seeded Poisson
// process with intensity density * sqrt(-det g) for sprinkle mode.
std::vector<Vec2> sample_points(const MetricModel& model, const SamplingSpec& spec);

// Mean nearest-neighbor scale the default radii are expressed in.
double mean_spacing(const Window& window, std::size_t node_count);

// Connects every future-directed causal, visible segment between sampled
// points with coordinate length <= horizon; weights are segment proper times.
// horizon <= 0 and r_prox <= 0 select the defaults (4x and 1.5x mean spacing).
CausalGraph build_causal_dag(std::shared_ptr<const MetricModel> model,
                             const std::vector<Vec2>& nodes, double horizon = 0.0,
                             double r_prox = 0.0);

// sample_points + build_causal_dag with sampling metadata recorded.
CausalGraph build_graph(std::shared_ptr<const MetricModel> model,
                        const SamplingSpec& spec, double horizon = 0.0,
                        double r_prox = 0.0);

}  // namespace causal_lab

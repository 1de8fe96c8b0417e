#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "causal_lab/causal_graph.hpp"

namespace causal_lab {

inline constexpr NodeId kNoNode = 0xffffffffu;

// Paths of total weight above this count as chronological (timelike) rather
// than merely causal; it is a float guard, not a physics scale.
inline constexpr double kChronoEps = 1e-9;

enum class SweepDirection { FromSource, ToSink };

// Longest-path distances from (or to) a source set. value is 0 both for the
// unrelated case and for pure null chains; related() separates them and
// chrono() marks positive-weight relations.
struct DistanceField {
  SweepDirection direction = SweepDirection::FromSource;
  std::vector<NodeId> sources;
  std::vector<double> value;
  std::vector<std::uint8_t> related_bits;
  std::vector<NodeId> parent;

  double at(NodeId u) const { return value[u]; }
  bool related(NodeId u) const { return related_bits[u] != 0; }
  bool chrono(NodeId u) const { return related_bits[u] != 0 && value[u] > kChronoEps; }
};

DistanceField distance_field(const CausalGraph& graph,
                             const std::vector<NodeId>& sources,
                             SweepDirection direction);

// Maximal-weight causal chain from the field's source set to target (or from
// target to the sink set), as a node sequence; empty when unrelated.
std::vector<NodeId> extract_path(const DistanceField& field, NodeId target);

double longest_path_distance(const CausalGraph& graph, NodeId p, NodeId q);
double distance_set_to_point(const CausalGraph& graph, const std::vector<NodeId>& set,
                             NodeId x);
double distance_point_to_set(const CausalGraph& graph, NodeId x,
                             const std::vector<NodeId>& set);

// Dense all-pairs table; refused above 2000 nodes.
std::vector<std::vector<double>> distance_matrix(const CausalGraph& graph);

struct TriangleViolation {
  NodeId x = kNoNode;
  NodeId y = kNoNode;
  NodeId z = kNoNode;
  double gap = 0.0;   // d(x,y) + d(y,z) - d(x,z), positive means violated
  bool set_variant = false;
};

// Samples causal triples x < y < z (and set-to-point variants) and reports
// reverse-triangle failures d(x,z) < d(x,y) + d(y,z) beyond the float guard.
std::vector<TriangleViolation> check_reverse_triangle(const CausalGraph& graph,
                                                      std::uint64_t seed,
                                                      std::size_t max_triples = 100000);

// Same sweep against an arbitrary pair-distance table (negative controls).
std::vector<TriangleViolation> check_reverse_triangle_with(
    const CausalGraph& graph,
    const std::function<double(NodeId, NodeId)>& dist, std::uint64_t seed,
    std::size_t max_triples = 100000);

// Grids of decreasing step over one window, for limit probes.
struct RefinementLadder {
  std::vector<double> params;
  std::vector<CausalGraph> levels;
};

struct LadderSpec {
  Window window;
  std::vector<double> params;  // strictly decreasing
  double step_factor = 0.5;    // grid step at level k = step_factor * params[k]
  double horizon = 0.0;        // 0 selects per-level defaults
  double r_prox = 0.0;
};

RefinementLadder build_ladder(std::shared_ptr<const MetricModel> model,
                              const LadderSpec& spec);

// Probe endpoints; when eps_axis is 0 or 1, that coordinate of a is replaced
// by the level parameter, so the pair closes in on the interesting point.
struct ProbeSpec {
  Vec2 a;
  Vec2 b;
  int eps_axis = -1;
};

struct GrowthRow {
  double param = 0.0;
  double distance = 0.0;
  double log_inv_param = 0.0;
  bool included = false;
  std::string note;
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  double slope = 0.0;  // least-squares slope of distance against log(1/param)
  std::size_t included_count = 0;
};

GrowthTable divergence_probe(const RefinementLadder& ladder, const ProbeSpec& probe);

// Index of the node nearest to target (lift-aware), or kNoNode when the
// nearest one sits farther than max_dist.
NodeId nearest_node(const CausalGraph& graph, const Vec2& target, double max_dist);

}  // namespace causal_lab

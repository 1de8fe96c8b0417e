#pragma once

#include <string>
#include <vector>

#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"

namespace causal_lab {

enum class SetTag { Generic, Achronal, FutureSet, PastSet, Surface, Hatting };

const char* to_string(SetTag tag);
SetTag set_tag_from_string(const std::string& name);

// Sorted, deduplicated node ids plus a role tag.
struct NodeSet {
  std::vector<NodeId> ids;
  SetTag tag = SetTag::Generic;

  bool contains(NodeId u) const;
  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

NodeSet make_node_set(std::vector<NodeId> ids, SetTag tag = SetTag::Generic);

// All nodes reachable from (resp. reaching) U by a causal path of strictly
// positive total weight.
NodeSet chronological_future(const CausalGraph& graph, const NodeSet& from);
NodeSet chronological_past(const CausalGraph& graph, const NodeSet& of);

struct AchronalReport {
  bool achronal = true;
  // violating pair: positive-weight causal path witness_from -> witness_to
  NodeId witness_from = kNoNode;
  NodeId witness_to = kNoNode;
};

AchronalReport is_achronal(const CausalGraph& graph, const NodeSet& set);

// Outer proximity layer: nodes outside A with a proximity neighbor inside.
NodeSet boundary(const CausalGraph& graph, const NodeSet& set);

struct SplitResult {
  NodeSet surface;
  std::vector<std::size_t> iterate_sizes;
  std::vector<NodeId> residue;  // nodes in none of I^+(S), S, I^-(S)
  std::size_t iterations = 0;
  bool reached_fixpoint = false;
};

// Alternating boundary iteration S_{i+1} = S_i u boundary(I^-+(S_i)) starting
// from the boundary of a future set; every iterate must stay achronal.
SplitResult build_splitting_surface(const CausalGraph& graph, const NodeSet& future_set);

enum class ChainDirection { Future, Past };

// One node per ladder level, anchored near a fixed coordinate, whose distance
// to (future case) or from (past case) a fixed witness grows level by level.
struct DivergentChain {
  ChainDirection direction = ChainDirection::Future;
  std::vector<NodeId> nodes;    // per ladder level
  std::vector<Vec2> coords;     // positions of those nodes
  std::vector<double> growth;   // witness distance per level, strictly increasing
  Vec2 seed_coord;
  Vec2 witness_coord;
  NodeId witness = kNoNode;     // finest-level witness node
  NodeId tail = kNoNode;        // finest-level chain node
};

struct ChainSearchSpec {
  double threshold = 0.0;  // <= 0 selects 5x the coarsest level's median distance
  bool has_future_witness = false;
  Vec2 future_witness;
  bool has_past_witness = false;
  Vec2 past_witness;
  int max_chains_per_direction = 4;
  double separation_factor = 8.0;  // seed spacing in units of the finest step
};

std::vector<DivergentChain> detect_divergent_chains(const RefinementLadder& ladder,
                                                    const ChainSearchSpec& spec);
std::vector<DivergentChain> detect_divergent_chains(const RefinementLadder& ladder,
                                                    double threshold);

// Inductive achronal construction over the chain witnesses; the result puts
// every future chain's tail strictly below it and every past chain's tail
// strictly above it.
NodeSet build_hatting(const CausalGraph& graph,
                      const std::vector<DivergentChain>& chains);

struct HattingReport {
  bool valid = false;
  bool achronal = false;
  NodeId witness_from = kNoNode;  // achronality violation, if any
  NodeId witness_to = kNoNode;
  // per chain: first ladder level from which all mapped nodes sit on the
  // correct side of H, or npos when none does
  std::vector<std::size_t> suffix_start;
  std::vector<bool> chain_ok;
};

HattingReport is_hatting(const CausalGraph& graph, const NodeSet& hatting,
                         const std::vector<DivergentChain>& chains);

// Median positive pairwise distance, sampled when the graph is large.
double median_positive_distance(const CausalGraph& graph, std::uint64_t seed = 1);

}  // namespace causal_lab

#include "causal_lab/achronal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "causal_lab/errors.hpp"
#include "causal_lab/rng.hpp"

namespace causal_lab {

namespace {

constexpr std::size_t kMaxSurfaceIterations = 128;

void validate_ids(const CausalGraph& graph, const std::vector<NodeId>& ids,
                  const char* where) {
  for (NodeId u : ids) {
    if (u >= graph.node_count()) {
      std::ostringstream msg;
      msg << where << ": node id " << u << " out of range";
      throw ArgumentError(msg.str());
    }
  }
}

// Per-node flags for strictly positive causal reachability from (or to) the
// given sources. Empty source list means nothing is reachable.
std::vector<char> chrono_mask(const CausalGraph& graph,
                              const std::vector<NodeId>& sources,
                              SweepDirection direction) {
  std::vector<char> mask(graph.node_count(), 0);
  if (sources.empty()) return mask;
  DistanceField field = distance_field(graph, sources, direction);
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (field.chrono(u)) mask[u] = 1;
  }
  return mask;
}

std::vector<char> membership(const CausalGraph& graph, const std::vector<NodeId>& ids) {
  std::vector<char> mask(graph.node_count(), 0);
  for (NodeId u : ids) mask[u] = 1;
  return mask;
}

std::vector<NodeId> sorted_union(const std::vector<NodeId>& a,
                                 const std::vector<NodeId>& b) {
  std::vector<NodeId> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

double min_lift_norm(const MetricModel& model, const Vec2& p, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& d : model.displacements(p, q)) {
    best = std::min(best, std::hypot(d.x0, d.x1));
  }
  return best;
}

// Matching radius for locating a coordinate in a graph: grids resolve to
// within a step (0.8 keeps half-step offsets from a finer lattice inside
// while still rejecting the next column over), sprinkled sets get a couple
// of mean spacings.
double locate_tolerance(const CausalGraph& graph) {
  if (graph.meta().mode == SampleMode::Grid && graph.meta().step > 0.0) {
    return 0.8 * graph.meta().step;
  }
  return 2.0 * mean_spacing(graph.meta().window, graph.node_count());
}

struct WitnessTrack {
  bool usable = false;
  std::vector<NodeId> per_level;
  Vec2 coord;
};

WitnessTrack locate_witness(const RefinementLadder& ladder, const Vec2& coord) {
  WitnessTrack track;
  track.coord = coord;
  for (const CausalGraph& level : ladder.levels) {
    NodeId u = nearest_node(level, coord, locate_tolerance(level));
    if (u == kNoNode) return track;
    track.per_level.push_back(u);
  }
  track.usable = !track.per_level.empty();
  return track;
}

// Endpoints of the longest causal path: the sink anchors future chains, the
// source anchors past ones.
void longest_path_endpoints(const CausalGraph& graph, Vec2& source_coord,
                            Vec2& sink_coord) {
  const auto& order = graph.topo_order();
  std::vector<double> best(graph.node_count(), 0.0);
  std::vector<NodeId> parent(graph.node_count(), kNoNode);
  for (NodeId u : order) {
    auto [lo, hi] = graph.out_range(u);
    for (std::size_t e = lo; e < hi; ++e) {
      const GraphEdge& edge = graph.edges()[e];
      double cand = best[u] + edge.weight;
      if (cand > best[edge.to] ||
          (cand == best[edge.to] && parent[edge.to] != kNoNode && u < parent[edge.to])) {
        best[edge.to] = cand;
        parent[edge.to] = u;
      }
    }
  }
  NodeId sink = 0;
  for (NodeId u = 1; u < graph.node_count(); ++u) {
    if (best[u] > best[sink]) sink = u;
  }
  NodeId source = sink;
  while (parent[source] != kNoNode) source = parent[source];
  source_coord = graph.position(source);
  sink_coord = graph.position(sink);
}

struct InductionElement {
  NodeId witness = kNoNode;
  ChainDirection direction = ChainDirection::Future;
  std::vector<const DivergentChain*> chains;
};

std::string describe_element(const InductionElement& elem, std::size_t step) {
  std::ostringstream msg;
  msg << (elem.direction == ChainDirection::Future ? "future" : "past")
      << " witness node " << elem.witness << " (step " << step << ")";
  return msg.str();
}

}  // namespace

const char* to_string(SetTag tag) {
  switch (tag) {
    case SetTag::Generic: return "generic";
    case SetTag::Achronal: return "achronal";
    case SetTag::FutureSet: return "future_set";
    case SetTag::PastSet: return "past_set";
    case SetTag::Surface: return "surface";
    case SetTag::Hatting: return "hatting";
  }
  return "generic";
}

SetTag set_tag_from_string(const std::string& name) {
  if (name == "generic") return SetTag::Generic;
  if (name == "achronal") return SetTag::Achronal;
  if (name == "future_set") return SetTag::FutureSet;
  if (name == "past_set") return SetTag::PastSet;
  if (name == "surface") return SetTag::Surface;
  if (name == "hatting") return SetTag::Hatting;
  throw ArgumentError("unknown node set tag: " + name);
}

bool NodeSet::contains(NodeId u) const {
  return std::binary_search(ids.begin(), ids.end(), u);
}

NodeSet make_node_set(std::vector<NodeId> ids, SetTag tag) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return NodeSet{std::move(ids), tag};
}

NodeSet chronological_future(const CausalGraph& graph, const NodeSet& from) {
  validate_ids(graph, from.ids, "chronological_future");
  NodeSet out;
  out.tag = SetTag::FutureSet;
  if (from.empty()) return out;
  std::vector<char> mask = chrono_mask(graph, from.ids, SweepDirection::FromSource);
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (mask[u]) out.ids.push_back(u);
  }
  return out;
}

NodeSet chronological_past(const CausalGraph& graph, const NodeSet& of) {
  validate_ids(graph, of.ids, "chronological_past");
  NodeSet out;
  out.tag = SetTag::PastSet;
  if (of.empty()) return out;
  std::vector<char> mask = chrono_mask(graph, of.ids, SweepDirection::ToSink);
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (mask[u]) out.ids.push_back(u);
  }
  return out;
}

AchronalReport is_achronal(const CausalGraph& graph, const NodeSet& set) {
  validate_ids(graph, set.ids, "is_achronal");
  AchronalReport report;
  if (set.size() < 2) return report;
  DistanceField field = distance_field(graph, set.ids, SweepDirection::FromSource);
  for (NodeId u : set.ids) {
    if (!field.chrono(u)) continue;
    std::vector<NodeId> path = extract_path(field, u);
    report.achronal = false;
    report.witness_from = path.empty() ? kNoNode : path.front();
    report.witness_to = u;
    return report;
  }
  return report;
}

NodeSet boundary(const CausalGraph& graph, const NodeSet& set) {
  validate_ids(graph, set.ids, "boundary");
  if (graph.proximity_pairs().empty()) {
    throw StructureError("boundary requires proximity edges");
  }
  std::vector<char> in = membership(graph, set.ids);
  NodeSet out;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    if (in[u]) continue;
    for (const NodeId* w = graph.prox_begin(u); w != graph.prox_end(u); ++w) {
      if (in[*w]) {
        out.ids.push_back(u);
        break;
      }
    }
  }
  return out;
}

SplitResult build_splitting_surface(const CausalGraph& graph, const NodeSet& future_set) {
  validate_ids(graph, future_set.ids, "build_splitting_surface");
  if (graph.cyclic()) {
    throw CyclicGraphError("build_splitting_surface: graph has a causal cycle");
  }
  if (future_set.empty()) {
    throw ArgumentError("build_splitting_surface: future set is empty");
  }
  {
    std::vector<char> in = membership(graph, future_set.ids);
    NodeSet fut = chronological_future(graph, future_set);
    for (NodeId u : fut.ids) {
      if (!in[u]) {
        std::ostringstream msg;
        msg << "build_splitting_surface: input is not a future set, node " << u
            << " escapes it";
        throw ArgumentError(msg.str());
      }
    }
  }

  SplitResult result;
  NodeSet surface = boundary(graph, future_set);
  if (surface.empty()) {
    throw ArgumentError("build_splitting_surface: future set has empty boundary");
  }
  surface = make_node_set(std::move(surface.ids), SetTag::Surface);

  auto assert_achronal = [&](std::size_t iterate) {
    AchronalReport rep = is_achronal(graph, surface);
    if (!rep.achronal) {
      std::ostringstream msg;
      msg << "splitting surface iterate " << iterate << " is not achronal: nodes "
          << rep.witness_from << " -> " << rep.witness_to;
      throw ConstructionError(msg.str());
    }
  };

  assert_achronal(0);
  result.iterate_sizes.push_back(surface.size());

  std::size_t stale = 0;
  std::size_t i = 0;
  while (stale < 2 && i < kMaxSurfaceIterations) {
    ++i;
    NodeSet side = (i % 2 == 1) ? chronological_past(graph, surface)
                                : chronological_future(graph, surface);
    NodeSet shell = boundary(graph, side);
    std::vector<NodeId> merged = sorted_union(surface.ids, shell.ids);
    if (merged == surface.ids) {
      ++stale;
    } else {
      stale = 0;
      surface.ids = std::move(merged);
      assert_achronal(i);
    }
    result.iterate_sizes.push_back(surface.size());
  }
  result.iterations = i;
  result.reached_fixpoint = stale >= 2;

  // Nodes with no causal relation to the surface at all would never be
  // classified; they are achronal to it by definition, so absorb them.
  for (std::size_t round = 0; round < graph.node_count(); ++round) {
    std::vector<char> above = chrono_mask(graph, surface.ids, SweepDirection::FromSource);
    std::vector<char> below = chrono_mask(graph, surface.ids, SweepDirection::ToSink);
    std::vector<char> in = membership(graph, surface.ids);
    NodeId isolated = kNoNode;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
      if (!above[u] && !below[u] && !in[u]) {
        isolated = u;
        break;
      }
    }
    if (isolated == kNoNode) break;
    surface.ids = sorted_union(surface.ids, {isolated});
    if (result.iterate_sizes.back() != surface.size()) {
      result.iterate_sizes.push_back(surface.size());
    }
  }
  assert_achronal(result.iterations);

  {
    std::vector<char> above = chrono_mask(graph, surface.ids, SweepDirection::FromSource);
    std::vector<char> below = chrono_mask(graph, surface.ids, SweepDirection::ToSink);
    std::vector<char> in = membership(graph, surface.ids);
    for (NodeId u = 0; u < graph.node_count(); ++u) {
      if (!above[u] && !below[u] && !in[u]) result.residue.push_back(u);
    }
  }
  result.surface = std::move(surface);
  return result;
}

std::vector<DivergentChain> detect_divergent_chains(const RefinementLadder& ladder,
                                                    const ChainSearchSpec& spec) {
  if (ladder.levels.empty()) {
    throw ArgumentError("detect_divergent_chains: ladder has no levels");
  }
  for (const CausalGraph& level : ladder.levels) {
    if (level.cyclic()) {
      throw CyclicGraphError("detect_divergent_chains: a ladder level is cyclic");
    }
  }
  const CausalGraph& coarse = ladder.levels.front();
  const CausalGraph& fine = ladder.levels.back();
  const std::size_t level_count = ladder.levels.size();

  double threshold = spec.threshold;
  if (!(threshold > 0.0)) {
    threshold = 5.0 * median_positive_distance(coarse);
    if (!(threshold > 0.0)) return {};
  }

  Vec2 auto_past{0.0, 0.0};
  Vec2 auto_future{0.0, 0.0};
  bool need_auto = !spec.has_future_witness || !spec.has_past_witness;
  if (need_auto) longest_path_endpoints(coarse, auto_past, auto_future);
  const Vec2 future_coord = spec.has_future_witness ? spec.future_witness : auto_future;
  const Vec2 past_coord = spec.has_past_witness ? spec.past_witness : auto_past;

  double fine_step = fine.meta().mode == SampleMode::Grid && fine.meta().step > 0.0
                         ? fine.meta().step
                         : mean_spacing(fine.meta().window, fine.node_count());
  const double separation = spec.separation_factor * fine_step;
  const MetricModel& model = fine.model();

  std::vector<DivergentChain> chains;

  auto search_direction = [&](ChainDirection dir, const Vec2& witness_coord) {
    WitnessTrack track = locate_witness(ladder, witness_coord);
    if (!track.usable) return;

    // d(x, witness) for future chains, d(witness, x) for past ones.
    SweepDirection sweep = dir == ChainDirection::Future ? SweepDirection::ToSink
                                                         : SweepDirection::FromSource;
    std::vector<DistanceField> fields;
    fields.reserve(level_count);
    for (std::size_t k = 0; k < level_count; ++k) {
      fields.push_back(distance_field(ladder.levels[k],
                                      std::vector<NodeId>{track.per_level[k]}, sweep));
    }

    const DistanceField& fine_field = fields.back();
    std::vector<NodeId> candidates;
    for (NodeId u = 0; u < fine.node_count(); ++u) {
      if (fine_field.chrono(u) && fine_field.at(u) >= threshold) candidates.push_back(u);
    }
    std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
      if (fine_field.at(a) != fine_field.at(b)) return fine_field.at(a) > fine_field.at(b);
      return a < b;
    });

    std::vector<NodeId> seeds;
    for (NodeId u : candidates) {
      if (static_cast<int>(seeds.size()) >= spec.max_chains_per_direction) break;
      bool crowded = false;
      for (NodeId kept : seeds) {
        if (min_lift_norm(model, fine.position(u), fine.position(kept)) < separation) {
          crowded = true;
          break;
        }
      }
      if (!crowded) seeds.push_back(u);
    }

    for (NodeId seed : seeds) {
      DivergentChain chain;
      chain.direction = dir;
      chain.seed_coord = fine.position(seed);
      chain.witness_coord = track.coord;
      chain.witness = track.per_level.back();
      bool ok = true;
      for (std::size_t k = 0; k < level_count; ++k) {
        const CausalGraph& level = ladder.levels[k];
        NodeId x = nearest_node(level, chain.seed_coord, locate_tolerance(level));
        if (x == kNoNode || !fields[k].chrono(x)) {
          ok = false;
          break;
        }
        chain.nodes.push_back(x);
        chain.coords.push_back(level.position(x));
        chain.growth.push_back(fields[k].at(x));
      }
      if (!ok) continue;
      for (std::size_t k = 0; k + 1 < level_count; ++k) {
        if (!(chain.growth[k + 1] > chain.growth[k])) {
          ok = false;
          break;
        }
      }
      if (!ok || chain.growth.back() < threshold) continue;
      chain.tail = chain.nodes.back();
      chains.push_back(std::move(chain));
    }
  };

  search_direction(ChainDirection::Future, future_coord);
  search_direction(ChainDirection::Past, past_coord);
  return chains;
}

std::vector<DivergentChain> detect_divergent_chains(const RefinementLadder& ladder,
                                                    double threshold) {
  ChainSearchSpec spec;
  spec.threshold = threshold;
  return detect_divergent_chains(ladder, spec);
}

NodeSet build_hatting(const CausalGraph& graph,
                      const std::vector<DivergentChain>& chains) {
  if (chains.empty()) {
    throw ArgumentError("build_hatting: no divergent chains given");
  }
  if (graph.cyclic()) {
    throw CyclicGraphError("build_hatting: graph has a causal cycle");
  }
  for (const DivergentChain& chain : chains) {
    if (chain.witness >= graph.node_count() || chain.tail >= graph.node_count()) {
      throw ArgumentError("build_hatting: chain witness or tail not in graph");
    }
  }

  // One induction element per distinct witness, future and past interleaved.
  std::vector<InductionElement> future_elems;
  std::vector<InductionElement> past_elems;
  auto add_elem = [](std::vector<InductionElement>& list, const DivergentChain& chain) {
    for (InductionElement& e : list) {
      if (e.witness == chain.witness) {
        e.chains.push_back(&chain);
        return;
      }
    }
    InductionElement e;
    e.witness = chain.witness;
    e.direction = chain.direction;
    e.chains.push_back(&chain);
    list.push_back(std::move(e));
  };
  for (const DivergentChain& chain : chains) {
    add_elem(chain.direction == ChainDirection::Future ? future_elems : past_elems, chain);
  }
  std::vector<InductionElement> sequence;
  {
    std::size_t fi = 0;
    std::size_t pi = 0;
    if (pi < past_elems.size()) {
      sequence.push_back(past_elems[pi++]);
    } else {
      sequence.push_back(future_elems[fi++]);
    }
    while (fi < future_elems.size() || pi < past_elems.size()) {
      if (fi < future_elems.size()) sequence.push_back(future_elems[fi++]);
      if (pi < past_elems.size()) sequence.push_back(past_elems[pi++]);
    }
  }

  std::vector<NodeId> set;
  for (std::size_t step = 0; step < sequence.size(); ++step) {
    const InductionElement& elem = sequence[step];
    const NodeId w = elem.witness;
    if (set.empty()) {
      set.push_back(w);
      continue;
    }

    std::vector<char> above = chrono_mask(graph, set, SweepDirection::FromSource);
    std::vector<char> below = chrono_mask(graph, set, SweepDirection::ToSink);
    if (std::binary_search(set.begin(), set.end(), w) || (!above[w] && !below[w])) {
      set = sorted_union(set, {w});
      continue;
    }

    const bool future_elem = elem.direction == ChainDirection::Future;
    const bool wrong_side = future_elem ? below[w] : above[w];
    NodeSet current = make_node_set(set, SetTag::Achronal);

    if (wrong_side) {
      // The witness sits on the side its chains should end up on: replace it
      // by the nearest admissible node of the facing boundary shell.
      NodeSet side = future_elem ? chronological_past(graph, current)
                                 : chronological_future(graph, current);
      NodeSet shell = boundary(graph, side);
      std::vector<char> reach =
          chrono_mask(graph, {w},
                      future_elem ? SweepDirection::FromSource : SweepDirection::ToSink);
      NodeId pick = kNoNode;
      double pick_dist = std::numeric_limits<double>::infinity();
      for (NodeId y : shell.ids) {
        if (!reach[y]) continue;
        if (future_elem ? above[y] : below[y]) continue;
        double dist = min_lift_norm(graph.model(), graph.position(w), graph.position(y));
        if (dist < pick_dist || (dist == pick_dist && (pick == kNoNode || y < pick))) {
          pick = y;
          pick_dist = dist;
        }
      }
      if (pick == kNoNode) {
        throw ConstructionError("build_hatting: no admissible projection for " +
                                describe_element(elem, step));
      }
      set = sorted_union(set, {pick});
      continue;
    }

    // The witness sits on the far side: adjoin the facing boundary nodes that
    // separate it from its chain tails.
    NodeSet side = future_elem ? chronological_future(graph, current)
                               : chronological_past(graph, current);
    NodeSet shell = boundary(graph, side);
    std::vector<char> from_w =
        chrono_mask(graph, {w},
                    future_elem ? SweepDirection::ToSink : SweepDirection::FromSource);
    std::vector<NodeId> adjoin;
    for (const DivergentChain* chain : elem.chains) {
      const NodeId tail = chain->tail;
      if (future_elem ? above[tail] : below[tail]) {
        throw ConstructionError(
            "build_hatting: chain tail " + std::to_string(tail) +
            " already crossed the set under construction; refine the ladder");
      }
      std::vector<char> from_tail =
          chrono_mask(graph, {tail},
                      future_elem ? SweepDirection::FromSource : SweepDirection::ToSink);
      for (NodeId y : shell.ids) {
        if (!from_tail[y] || !from_w[y]) continue;
        if (future_elem ? below[y] : above[y]) continue;
        adjoin.push_back(y);
      }
    }
    std::sort(adjoin.begin(), adjoin.end());
    adjoin.erase(std::unique(adjoin.begin(), adjoin.end()), adjoin.end());
    if (adjoin.empty()) {
      throw ConstructionError("build_hatting: no separating boundary nodes for " +
                              describe_element(elem, step));
    }
    std::size_t kept = 0;
    for (NodeId y : adjoin) {
      std::vector<char> up = chrono_mask(graph, set, SweepDirection::FromSource);
      std::vector<char> down = chrono_mask(graph, set, SweepDirection::ToSink);
      if (up[y] || down[y]) continue;
      set = sorted_union(set, {y});
      ++kept;
    }
    if (kept == 0) {
      throw ConstructionError("build_hatting: separating nodes all clash for " +
                              describe_element(elem, step));
    }
  }

  NodeSet hatting = make_node_set(std::move(set), SetTag::Hatting);
  AchronalReport rep = is_achronal(graph, hatting);
  if (!rep.achronal) {
    std::ostringstream msg;
    msg << "build_hatting: result not achronal, nodes " << rep.witness_from << " -> "
        << rep.witness_to;
    throw ConstructionError(msg.str());
  }
  return hatting;
}

HattingReport is_hatting(const CausalGraph& graph, const NodeSet& hatting,
                         const std::vector<DivergentChain>& chains) {
  validate_ids(graph, hatting.ids, "is_hatting");
  HattingReport report;
  AchronalReport achronal = is_achronal(graph, hatting);
  report.achronal = achronal.achronal;
  report.witness_from = achronal.witness_from;
  report.witness_to = achronal.witness_to;

  std::vector<char> below = chrono_mask(graph, hatting.ids, SweepDirection::ToSink);
  std::vector<char> above = chrono_mask(graph, hatting.ids, SweepDirection::FromSource);

  const std::size_t npos = std::numeric_limits<std::size_t>::max();
  bool all_ok = true;
  for (const DivergentChain& chain : chains) {
    const std::vector<char>& side = chain.direction == ChainDirection::Future ? below : above;
    std::size_t start = npos;
    for (std::size_t k = chain.coords.size(); k-- > 0;) {
      NodeId mapped = nearest_node(graph, chain.coords[k],
                                   std::numeric_limits<double>::infinity());
      if (mapped != kNoNode && side[mapped]) {
        start = k;
      } else {
        break;
      }
    }
    report.suffix_start.push_back(start);
    report.chain_ok.push_back(start != npos);
    if (start == npos) all_ok = false;
  }
  report.valid = report.achronal && all_ok;
  return report;
}

double median_positive_distance(const CausalGraph& graph, std::uint64_t seed) {
  if (graph.cyclic()) {
    throw CyclicGraphError("median_positive_distance: graph has a causal cycle");
  }
  const std::size_t n = graph.node_count();
  if (n == 0) return 0.0;
  std::vector<NodeId> sources;
  if (n <= 512) {
    sources.resize(n);
    for (NodeId u = 0; u < n; ++u) sources[u] = u;
  } else {
    Rng rng(seed);
    for (int k = 0; k < 512; ++k) sources.push_back(static_cast<NodeId>(rng.below(n)));
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  }
  std::vector<double> values;
  for (NodeId s : sources) {
    DistanceField field = distance_field(graph, std::vector<NodeId>{s},
                                         SweepDirection::FromSource);
    for (NodeId u = 0; u < n; ++u) {
      if (field.chrono(u)) values.push_back(field.at(u));
    }
  }
  if (values.empty()) return 0.0;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace causal_lab

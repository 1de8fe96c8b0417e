#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "causal_lab/achronal_ops.hpp"
#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"
#include "causal_lab/time_functions.hpp"

namespace causal_lab {

// Graphs travel as JSON with explicit node positions, weighted edges,
// proximity pairs and the sampling metadata needed to rebuild the model:
//   {"meta": {...}, "nodes": [[id,x0,x1],...], "edges": [[u,v,w],...],
//    "proximity": [[u,v],...]}
std::string graph_to_json(const CausalGraph& graph);
CausalGraph graph_from_json(const std::string& text);
void save_graph(const CausalGraph& graph, const std::string& path);
CausalGraph load_graph(const std::string& path);

// Node sets are {"tag": "...", "ids": [...]}.
std::string node_set_to_json(const NodeSet& set);
NodeSet node_set_from_json(const std::string& text);
void save_node_set(const NodeSet& set, const std::string& path);
NodeSet load_node_set(const std::string& path);

// Fields map node id to value: {"0": -1.5, "1": 0.0, ...}. Ids must cover
// 0..n-1 with no gaps.
std::string field_to_json(const ScalarField& field);
ScalarField field_from_json(const std::string& text);
void save_field(const ScalarField& field, const std::string& path);
ScalarField load_field(const std::string& path);

// Divergence tables as CSV: epsilon,distance,log_inv_eps with full-precision
// values, one row per ladder level.
std::string growth_table_to_csv(const GrowthTable& table);
void save_growth_csv(const GrowthTable& table, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// FNV-1a over raw bytes; hex form is used for artifact fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::string& path);

// Full-precision decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace causal_lab

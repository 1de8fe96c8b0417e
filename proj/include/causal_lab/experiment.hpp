#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causal_lab/achronal_ops.hpp"
#include "causal_lab/causal_graph.hpp"
#include "json.hpp"

namespace causal_lab {

// One pipeline step. Supported ops and their arguments are validated up
// front by parse_experiment_config; execution order is the config order and
// each op consumes only products of earlier ops.
struct PipelineStage {
  std::string op;
  nlohmann::json args;
};

struct ExperimentConfig {
  std::string model_id;
  double delta = 0.0;  // cone widening applied to the model
  std::uint64_t seed = 0;
  std::string out_dir;  // artifact directory; empty skips file output
  bool has_sample = false;
  SamplingSpec sample;
  double horizon = 0.0;
  double r_prox = 0.0;
  std::vector<PipelineStage> pipeline;
  std::string canonical_text;  // normalized config JSON, hashed into reports
};

// Rejects unknown keys, unknown ops, missing seed, and pipelines whose stages
// consume a product no earlier stage supplies. Nothing is computed here.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct Report {
  nlohmann::json doc;
  int exit_code = 0;
};

// Runs the pipeline, writes artifacts under out_dir, and collects one check
// record per stage. A stage that throws is recorded as an error and every
// stage depending on its products is skipped. Exit codes: 0 all checks pass,
// 2 any failure or error, 3 otherwise when something was inconclusive.
Report run_experiment(const ExperimentConfig& config);

void save_report(const Report& report, const std::string& path);

// Fingerprint of the report with the timestamp field removed, so reruns of
// one config compare equal.
std::string report_hash(const nlohmann::json& report_doc);

struct CausalityProbeRow {
  double delta = 0.0;
  bool cycle_found = false;
  bool verified = false;  // every hop of the witness re-checked on the metric
  std::vector<NodeId> witness;
  std::vector<Vec2> witness_coords;
};

// Threads a near-null ring through both barrier gaps of the slit cylinder and
// reports, per widening delta, whether the resulting graph has a causal cycle
// together with a verified witness walk.
std::vector<CausalityProbeRow> stable_causality_probe(const std::vector<double>& deltas);
nlohmann::json causality_table_to_json(const std::vector<CausalityProbeRow>& rows);

// CSV extraction of a report's stored plot block ("divergence", "steepness",
// "duality"); unknown or absent blocks raise ArgumentError.
std::string plot_data_csv(const nlohmann::json& report_doc, const std::string& check);
void emit_plot_data(const nlohmann::json& report_doc, const std::string& check,
                    const std::string& path);

}  // namespace causal_lab

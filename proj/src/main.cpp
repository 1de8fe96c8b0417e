#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "causal_lab/achronal_ops.hpp"
#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"
#include "causal_lab/errors.hpp"
#include "causal_lab/experiment.hpp"
#include "causal_lab/io.hpp"
#include "causal_lab/metric_models.hpp"
#include "causal_lab/time_functions.hpp"
#include "json.hpp"

using namespace causal_lab;
using nlohmann::json;

namespace {

std::vector<double> csv_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(start, comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ArgumentError(what + ": bad number \"" + tok + "\"");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ArgumentError(what + ": empty list");
  return out;
}

Window window_of(const std::vector<double>& w) {
  Window win{{w[0], w[1]}, {w[2], w[3]}};
  if (!win.valid()) throw ArgumentError("window must satisfy lo < hi on both axes");
  return win;
}

Window default_window(const std::string& model_id) {
  if (model_id == "minkowski2d") return {{-1.0, -1.0}, {1.0, 1.0}};
  if (model_id == "slit_minkowski") return {{-3.0, -2.5}, {3.0, 2.5}};
  if (model_id == "singular_wedge") return {{-0.9, -1.0}, {0.4, 1.0}};
  if (model_id == "slit_cylinder") {
    return {{-3.141592653589793, -2.5}, {3.141592653589793, 2.5}};
  }
  throw ArgumentError("no default window for model " + model_id);
}

void print_line(const std::string& s) { std::puts(s.c_str()); }

std::string status_of(bool ok) { return ok ? "[pass]" : "[FAIL]"; }

// Shared by the verify verb and its CLI-level summary: sampled longest paths
// from random sources, pushed through the bound inequality.
struct BoundTally {
  std::size_t holds = 0, fails = 0, open = 0;
  double min_slack = 0.0;
};

BoundTally bound_over_sampled_paths(const CausalGraph& g, const ScalarField& f,
                                    int want, double tol_grad, std::uint64_t seed) {
  BoundTally tally;
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 17);
  const auto n = static_cast<NodeId>(g.node_count());
  bool any = false;
  for (int attempt = 0;
       attempt < 8 * want &&
       tally.holds + tally.fails + tally.open < static_cast<std::size_t>(want);
       ++attempt) {
    const NodeId u = static_cast<NodeId>(rng() % n);
    const DistanceField df = distance_field(g, {u}, SweepDirection::FromSource);
    std::vector<NodeId> targets;
    for (NodeId v = 0; v < n; ++v) {
      if (v != u && df.chrono(v)) targets.push_back(v);
    }
    if (targets.empty()) continue;
    CausalPath path;
    for (const NodeId w : extract_path(df, targets[rng() % targets.size()])) {
      path.push_back(g.position(w));
    }
    const BoundCheck bc = check_bound_inequality(g.model(), g, f, path, tol_grad);
    if (!any || bc.slack < tally.min_slack) tally.min_slack = bc.slack;
    any = true;
    if (bc.outcome == BoundOutcome::Holds) ++tally.holds;
    else if (bc.outcome == BoundOutcome::Fails) ++tally.fails;
    else ++tally.open;
  }
  return tally;
}

int run_report_file(const std::string& path) {
  const std::string text = read_text_file(path);
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) throw ArgumentError("config: malformed JSON in " + path);

  std::vector<ExperimentConfig> configs;
  if (root.is_object() && root.contains("experiments")) {
    if (root.size() != 1 || !root.at("experiments").is_array()) {
      throw ArgumentError("config: \"experiments\" must be the only key and an array");
    }
    for (const json& entry : root.at("experiments")) {
      configs.push_back(parse_experiment_config(entry.dump()));
    }
  } else {
    configs.push_back(parse_experiment_config(text));
  }

  int exit_code = 0;
  for (const ExperimentConfig& cfg : configs) {
    const Report report = run_experiment(cfg);
    for (const json& rec : report.doc.at("checks")) {
      std::string line = "[" + rec.at("status").get<std::string>() + "] " +
                         rec.at("name").get<std::string>();
      if (rec.contains("summary") && !rec.at("summary").empty()) {
        line += " " + rec.at("summary").dump();
      }
      print_line(line);
    }
    print_line("report hash " + report_hash(report.doc) +
               (cfg.out_dir.empty() ? std::string()
                                    : " written to " + cfg.out_dir + "/report.json"));
    exit_code = std::max(exit_code, report.exit_code);
  }
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal-lab: discrete causal structure on 2D spacetime models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");
  std::function<int()> action;

  // sample
  {
    auto* cmd = app.add_subcommand("sample", "Sample a model and build its causal graph");
    auto model = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("sprinkle");
    auto step = std::make_shared<double>(0.0);
    auto density = std::make_shared<double>(0.0);
    auto window = std::make_shared<std::vector<double>>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto horizon = std::make_shared<double>(0.0);
    auto r_prox = std::make_shared<double>(0.0);
    auto delta = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "Model id")->required();
    cmd->add_option("--mode", *mode, "grid or sprinkle");
    cmd->add_option("--step", *step, "Grid spacing (grid mode)");
    cmd->add_option("--density", *density, "Poisson intensity multiplier (sprinkle mode)");
    cmd->add_option("--window", *window, "lo0 lo1 hi0 hi1 (default per model)")->expected(4);
    cmd->add_option("--seed", *seed, "Sprinkle seed")->required();
    cmd->add_option("--horizon", *horizon, "Edge reach (0 = 4x mean spacing)");
    cmd->add_option("--r-prox", *r_prox, "Proximity radius (0 = 1.5x mean spacing)");
    cmd->add_option("--delta", *delta, "Cone widening");
    cmd->add_option("--out", *out, "Output graph JSON")->required();
    cmd->callback([=, &action]() {
      action = [=]() {
        SamplingSpec spec;
        if (*mode == "grid") spec.mode = SampleMode::Grid;
        else if (*mode == "sprinkle") spec.mode = SampleMode::Sprinkle;
        else throw ArgumentError("mode must be grid or sprinkle");
        spec.step = *step;
        spec.density = *density;
        spec.window = window->empty() ? default_window(*model) : window_of(*window);
        spec.seed = *seed;
        std::shared_ptr<const MetricModel> m = make_model(*model);
        if (*delta > 0.0) m = widen_cones(m, *delta);
        CausalGraph g = build_graph(m, spec, *horizon, *r_prox);
        g.meta().delta = *delta;
        save_graph(g, *out);
        print_line("graph: " + std::to_string(g.node_count()) + " nodes, " +
                   std::to_string(g.edges().size()) + " edges, " +
                   std::to_string(g.proximity_pairs().size()) + " proximity pairs" +
                   (g.cyclic() ? ", cyclic" : "") + " -> " + *out);
        return 0;
      };
    });
  }

  // distance
  {
    auto* cmd = app.add_subcommand("distance", "Longest-path distance between two nodes");
    auto graph_path = std::make_shared<std::string>();
    auto from = std::make_shared<std::int64_t>(-1);
    auto to = std::make_shared<std::int64_t>(-1);
    auto from_pt = std::make_shared<std::vector<double>>();
    auto to_pt = std::make_shared<std::vector<double>>();
    auto locate_tol = std::make_shared<double>(0.0);
    cmd->add_option("--graph", *graph_path, "Graph JSON")->required();
    cmd->add_option("--from", *from, "Source node id");
    cmd->add_option("--to", *to, "Target node id");
    cmd->add_option("--from-point", *from_pt, "Source coordinates")->expected(2);
    cmd->add_option("--to-point", *to_pt, "Target coordinates")->expected(2);
    cmd->add_option("--locate-tol", *locate_tol, "Point lookup radius (0 = per-graph default)");
    cmd->callback([=, &action]() {
      action = [=]() {
        const CausalGraph g = load_graph(*graph_path);
        const double tol = *locate_tol > 0.0 ? *locate_tol
                           : (g.meta().mode == SampleMode::Grid && g.meta().step > 0.0
                                  ? 0.8 * g.meta().step
                                  : mean_spacing(g.meta().window, g.node_count()));
        const auto pick = [&](std::int64_t id, const std::vector<double>& pt,
                              const char* side) {
          if (id >= 0) {
            if (static_cast<std::size_t>(id) >= g.node_count()) {
              throw ArgumentError(std::string(side) + ": node id out of range");
            }
            return static_cast<NodeId>(id);
          }
          if (pt.size() == 2) {
            const NodeId u = nearest_node(g, {pt[0], pt[1]}, tol);
            if (u == kNoNode) {
              throw ArgumentError(std::string(side) + ": no node near that point");
            }
            return u;
          }
          throw ArgumentError(std::string("give --") + side + " or --" + side + "-point");
        };
        const NodeId p = pick(*from, *from_pt, "from");
        const NodeId q = pick(*to, *to_pt, "to");
        const DistanceField df = distance_field(g, {p}, SweepDirection::FromSource);
        json out{{"from", p},
                 {"to", q},
                 {"distance", df.at(q)},
                 {"related", df.related(q)},
                 {"chrono", df.chrono(q)}};
        print_line(out.dump());
        return 0;
      };
    });
  }

  // surface
  {
    auto* cmd = app.add_subcommand("surface", "Build a splitting surface from a future set");
    auto graph_path = std::make_shared<std::string>();
    auto seed_set = std::make_shared<std::string>();
    auto future_of = std::make_shared<std::vector<double>>();
    auto locate_tol = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--graph", *graph_path, "Graph JSON")->required();
    cmd->add_option("--seed-set", *seed_set,
                    "Node set JSON; tag future_set uses it as-is, otherwise its "
                    "chronological future is taken first");
    cmd->add_option("--future-of", *future_of, "Seed point whose chronological future is used")
        ->expected(2);
    cmd->add_option("--locate-tol", *locate_tol, "Point lookup radius");
    cmd->add_option("--out", *out, "Output node set JSON")->required();
    cmd->callback([=, &action]() {
      action = [=]() {
        const CausalGraph g = load_graph(*graph_path);
        NodeSet f0;
        if (!seed_set->empty()) {
          const NodeSet loaded = load_node_set(*seed_set);
          f0 = loaded.tag == SetTag::FutureSet ? loaded : chronological_future(g, loaded);
        } else if (future_of->size() == 2) {
          const double tol = *locate_tol > 0.0
                                 ? *locate_tol
                                 : (g.meta().step > 0.0
                                        ? 0.8 * g.meta().step
                                        : mean_spacing(g.meta().window, g.node_count()));
          const NodeId u = nearest_node(g, {(*future_of)[0], (*future_of)[1]}, tol);
          if (u == kNoNode) throw ArgumentError("no node near the seed point");
          f0 = chronological_future(g, make_node_set({u}));
        } else {
          throw ArgumentError("give --seed-set or --future-of");
        }
        const SplitResult res = build_splitting_surface(g, f0);
        save_node_set(res.surface, *out);
        const bool ok = res.residue.empty() && res.reached_fixpoint;
        print_line(status_of(ok) + " surface: " + std::to_string(res.surface.size()) +
                   " nodes after " + std::to_string(res.iterations) + " iterations, " +
                   std::to_string(res.residue.size()) + " residue -> " + *out);
        return ok ? 0 : 2;
      };
    });
  }

  // timefn
  {
    auto* cmd = app.add_subcommand("timefn", "Signed-distance time function from a surface");
    auto graph_path = std::make_shared<std::string>();
    auto surface_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--graph", *graph_path, "Graph JSON")->required();
    cmd->add_option("--surface", *surface_path, "Achronal node set JSON")->required();
    cmd->add_option("--out", *out, "Output field JSON")->required();
    cmd->callback([=, &action]() {
      action = [=]() {
        const CausalGraph g = load_graph(*graph_path);
        const ScalarField f = time_function_from_surface(g, load_node_set(*surface_path));
        save_field(f, *out);
        const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
        print_line("field: " + std::to_string(f.size()) + " values in [" +
                   format_double(*lo) + ", " + format_double(*hi) + "] -> " + *out);
        return 0;
      };
    });
  }

  // verify
  {
    auto* cmd = app.add_subcommand("verify", "Check a field against steep time function properties");
    auto graph_path = std::make_shared<std::string>();
    auto field_path = std::make_shared<std::string>();
    auto checks = std::make_shared<std::string>("flip,steep");
    auto tol = std::make_shared<double>(0.1);
    auto tol_grad = std::make_shared<double>(0.05);
    auto min_fraction = std::make_shared<double>(-1.0);
    auto max_pairs = std::make_shared<std::size_t>(50000);
    auto bound_pairs = std::make_shared<int>(10);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--graph", *graph_path, "Graph JSON")->required();
    cmd->add_option("--field", *field_path, "Field JSON")->required();
    cmd->add_option("--checks", *checks, "Comma list from flip,steep,bound");
    cmd->add_option("--tol", *tol, "Steepness tolerance");
    cmd->add_option("--tol-grad", *tol_grad, "Gradient tolerance for the bound check");
    cmd->add_option("--min-fraction", *min_fraction,
                    "Fail when the steep fraction drops below this (default: report only)");
    cmd->add_option("--max-pairs", *max_pairs, "Sampled pairs for the flip check");
    cmd->add_option("--bound-pairs", *bound_pairs, "Sampled paths for the bound check");
    cmd->add_option("--seed", *seed, "Sampling seed");
    cmd->callback([=, &action]() {
      action = [=]() {
        const CausalGraph g = load_graph(*graph_path);
        const ScalarField f = load_field(*field_path);
        if (f.size() != g.node_count()) {
          throw ArgumentError("field has " + std::to_string(f.size()) + " values for " +
                              std::to_string(g.node_count()) + " nodes");
        }
        bool failed = false, open = false;
        std::size_t start = 0;
        const std::string& list = *checks;
        while (start <= list.size()) {
          const std::size_t comma = list.find(',', start);
          const std::string check = list.substr(start, comma - start);
          if (check == "flip") {
            const FlipReport rep = check_reverse_lipschitz(g, f, *seed, *max_pairs);
            print_line(status_of(rep.clean()) + " flip: " +
                       std::to_string(rep.violations.size()) + " violations over " +
                       std::to_string(rep.edges_checked) + " edges, " +
                       std::to_string(rep.pairs_checked) + " pairs");
            failed = failed || !rep.clean();
          } else if (check == "steep") {
            const SteepnessSummary s = check_steepness(g.model(), g, f, *tol);
            const bool ok = *min_fraction < 0.0 || s.fraction >= *min_fraction;
            print_line(status_of(ok) + " steep: fraction " + format_double(s.fraction) +
                       " of " + std::to_string(s.reliable) + " reliable nodes, worst " +
                       format_double(s.worst) + ", " + std::to_string(s.unreliable) +
                       " unreliable");
            failed = failed || !ok;
          } else if (check == "bound") {
            const BoundTally t =
                bound_over_sampled_paths(g, f, *bound_pairs, *tol_grad, *seed);
            const bool ok = t.fails == 0;
            print_line(status_of(ok) + " bound: " + std::to_string(t.holds) + " hold, " +
                       std::to_string(t.fails) + " fail, " + std::to_string(t.open) +
                       " inconclusive, min slack " + format_double(t.min_slack));
            failed = failed || !ok;
            open = open || (ok && t.holds == 0);
          } else {
            throw ArgumentError("unknown check \"" + check + "\"");
          }
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        return failed ? 2 : (open ? 3 : 0);
      };
    });
  }

  // verify-duality
  {
    auto* cmd = app.add_subcommand("verify-duality",
                                   "Longest path against the dual potential on sampled pairs");
    auto graph_path = std::make_shared<std::string>();
    auto pairs = std::make_shared<int>(20);
    auto tol = std::make_shared<double>(1e-9);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--graph", *graph_path, "Graph JSON")->required();
    cmd->add_option("--pairs", *pairs, "Sampled node pairs");
    cmd->add_option("--tol", *tol, "Allowed |longest - dual|");
    cmd->add_option("--seed", *seed, "Pair sampling seed");
    cmd->add_option("--out", *out, "Optional CSV of per-pair values");
    cmd->callback([=, &action]() {
      action = [=]() {
        const CausalGraph g = load_graph(*graph_path);
        std::mt19937_64 rng(*seed * 0x9e3779b97f4a7c15ull + 29);
        const auto n = static_cast<NodeId>(g.node_count());
        std::string csv = "pair_id,longest_path,dual_value,abs_diff\n";
        double worst = 0.0;
        for (int k = 0; k < *pairs; ++k) {
          const NodeId p = static_cast<NodeId>(rng() % n);
          const NodeId q = static_cast<NodeId>(rng() % n);
          const double lp = longest_path_distance(g, p, q);
          const double dual = dual_potential(g, p, q).value;
          worst = std::max(worst, std::abs(lp - dual));
          csv += std::to_string(k) + ',' + format_double(lp) + ',' + format_double(dual) +
                 ',' + format_double(std::abs(lp - dual)) + '\n';
        }
        if (!out->empty()) write_text_file(*out, csv);
        const bool ok = worst <= *tol;
        print_line(status_of(ok) + " duality: max |longest - dual| = " +
                   format_double(worst) + " over " + std::to_string(*pairs) + " pairs");
        return ok ? 0 : 2;
      };
    });
  }

  // probe-divergence
  {
    auto* cmd = app.add_subcommand("probe-divergence",
                                   "Distance growth along a refinement ladder");
    auto model = std::make_shared<std::string>();
    auto ladder = std::make_shared<std::string>();
    auto window = std::make_shared<std::vector<double>>();
    auto pa = std::make_shared<std::vector<double>>();
    auto pb = std::make_shared<std::vector<double>>();
    auto eps_axis = std::make_shared<int>(2);
    auto step_factor = std::make_shared<double>(0.5);
    auto horizon = std::make_shared<double>(0.0);
    auto r_prox = std::make_shared<double>(0.0);
    auto slope_min = std::make_shared<double>(0.0);
    auto slope_max = std::make_shared<double>(0.0);
    auto has_bounds = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "Model id")->required();
    cmd->add_option("--ladder", *ladder, "Comma list of level parameters, decreasing")
        ->required();
    cmd->add_option("--window", *window, "lo0 lo1 hi0 hi1 (default: model probe window)")
        ->expected(4);
    cmd->add_option("--a", *pa, "Probe start (default per model)")->expected(2);
    cmd->add_option("--b", *pb, "Probe end (default per model)")->expected(2);
    cmd->add_option("--eps-axis", *eps_axis,
                    "Coordinate of a replaced by the level parameter (-1 fixed, default "
                    "per model)");
    cmd->add_option("--step-factor", *step_factor, "Grid step per level parameter");
    cmd->add_option("--horizon", *horizon, "Edge reach (0 = per-level default)");
    cmd->add_option("--r-prox", *r_prox, "Proximity radius (0 = per-level default)");
    auto* smin = cmd->add_option("--slope-min", *slope_min, "Fail below this slope");
    auto* smax = cmd->add_option("--slope-max", *slope_max, "Fail above this slope");
    cmd->add_option("--out", *out, "Output CSV")->required();
    cmd->callback([=, &action]() {
      const bool bounds = smin->count() > 0 || smax->count() > 0;
      *has_bounds = bounds;
      action = [=]() {
        LadderSpec spec;
        spec.params = csv_doubles(*ladder, "--ladder");
        spec.step_factor = *step_factor;
        spec.horizon = *horizon;
        spec.r_prox = *r_prox;
        ProbeSpec probe;
        if (*model == "singular_wedge") {
          spec.window = {{0.0, -1.05}, {0.3, 1.05}};
          probe = {{0.0, 0.1}, {0.0, 1.0}, 1};
        } else if (*model == "minkowski2d") {
          spec.window = {{-0.05, -0.15}, {1.05, 0.15}};
          probe = {{0.1, 0.0}, {1.0, 0.0}, 0};
        } else {
          if (window->empty() || pa->size() != 2 || pb->size() != 2) {
            throw ArgumentError("this model needs explicit --window, --a, --b");
          }
        }
        if (!window->empty()) spec.window = window_of(*window);
        if (pa->size() == 2) probe.a = {(*pa)[0], (*pa)[1]};
        if (pb->size() == 2) probe.b = {(*pb)[0], (*pb)[1]};
        if (*eps_axis != 2) probe.eps_axis = *eps_axis;

        const RefinementLadder lad = build_ladder(make_model(*model), spec);
        const GrowthTable table = divergence_probe(lad, probe);
        save_growth_csv(table, *out);
        bool ok = true;
        if (*has_bounds) {
          if (smin->count() > 0) ok = ok && table.slope >= *slope_min;
          if (smax->count() > 0) ok = ok && table.slope <= *slope_max;
        }
        print_line(status_of(ok) + " divergence: slope " + format_double(table.slope) +
                   " over " + std::to_string(table.included_count) + " levels -> " + *out);
        return ok ? 0 : 2;
      };
    });
  }

  // hatting
  {
    auto* cmd = app.add_subcommand("hatting",
                                   "Detect divergent chains on a ladder and build a hatting");
    auto ladder_dir = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto ladder = std::make_shared<std::string>();
    auto window = std::make_shared<std::vector<double>>();
    auto step_factor = std::make_shared<double>(0.5);
    auto horizon = std::make_shared<double>(0.0);
    auto r_prox = std::make_shared<double>(0.0);
    auto threshold = std::make_shared<double>(0.0);
    auto fw = std::make_shared<std::vector<double>>();
    auto pw = std::make_shared<std::vector<double>>();
    auto max_chains = std::make_shared<int>(4);
    auto separation = std::make_shared<double>(8.0);
    auto out = std::make_shared<std::string>();
    auto chains_out = std::make_shared<std::string>();
    cmd->add_option("--ladder-dir", *ladder_dir,
                    "Directory of level graph JSON files; the level parameter is each "
                    "graph's recorded step");
    cmd->add_option("--model", *model, "Model id (builds the ladder instead)");
    cmd->add_option("--ladder", *ladder, "Comma list of level parameters");
    cmd->add_option("--window", *window, "lo0 lo1 hi0 hi1")->expected(4);
    cmd->add_option("--step-factor", *step_factor, "Grid step per level parameter");
    cmd->add_option("--horizon", *horizon, "Edge reach (0 = per-level default)");
    cmd->add_option("--r-prox", *r_prox, "Proximity radius (0 = per-level default)");
    cmd->add_option("--threshold", *threshold, "Chain growth threshold (0 = auto)");
    cmd->add_option("--future-witness", *fw, "Witness point for future chains")->expected(2);
    cmd->add_option("--past-witness", *pw, "Witness point for past chains")->expected(2);
    cmd->add_option("--max-chains", *max_chains, "Chains kept per direction");
    cmd->add_option("--separation-factor", *separation, "Seed spacing in finest steps");
    cmd->add_option("--out", *out, "Output hatting node set JSON")->required();
    cmd->add_option("--chains-out", *chains_out, "Optional chain dump JSON");
    cmd->callback([=, &action]() {
      action = [=]() {
        RefinementLadder lad;
        if (!ladder_dir->empty()) {
          std::vector<std::string> files;
          for (const auto& entry : std::filesystem::directory_iterator(*ladder_dir)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path().string());
          }
          if (files.empty()) throw ArgumentError("no .json graphs in " + *ladder_dir);
          std::sort(files.begin(), files.end());
          for (const std::string& file : files) {
            CausalGraph g = load_graph(file);
            if (!(g.meta().step > 0.0)) {
              throw ArgumentError(file + ": graph has no recorded step");
            }
            lad.params.push_back(g.meta().step);
            lad.levels.push_back(std::move(g));
          }
          for (std::size_t i = 1; i < lad.params.size(); ++i) {
            if (!(lad.params[i] < lad.params[i - 1])) {
              throw ArgumentError("ladder graphs must come in strictly refining order");
            }
          }
        } else {
          if (model->empty() || ladder->empty() || window->empty()) {
            throw ArgumentError("give --ladder-dir, or --model with --ladder and --window");
          }
          LadderSpec spec;
          spec.window = window_of(*window);
          spec.params = csv_doubles(*ladder, "--ladder");
          spec.step_factor = *step_factor;
          spec.horizon = *horizon;
          spec.r_prox = *r_prox;
          lad = build_ladder(make_model(*model), spec);
        }

        ChainSearchSpec cspec;
        cspec.threshold = *threshold;
        if (fw->size() == 2) {
          cspec.has_future_witness = true;
          cspec.future_witness = {(*fw)[0], (*fw)[1]};
        }
        if (pw->size() == 2) {
          cspec.has_past_witness = true;
          cspec.past_witness = {(*pw)[0], (*pw)[1]};
        }
        cspec.max_chains_per_direction = *max_chains;
        cspec.separation_factor = *separation;

        const std::vector<DivergentChain> chains = detect_divergent_chains(lad, cspec);
        if (chains.empty()) {
          print_line("[FAIL] hatting: no divergent chains found");
          return 2;
        }
        const CausalGraph& finest = lad.levels.back();
        const NodeSet hat = build_hatting(finest, chains);
        const HattingReport rep = is_hatting(finest, hat, chains);
        save_node_set(hat, *out);
        if (!chains_out->empty()) {
          json doc = json::object();
          doc["chains"] = json::array();
          for (const DivergentChain& c : chains) {
            json coords = json::array();
            for (const Vec2& p : c.coords) coords.push_back(json::array({p.x0, p.x1}));
            doc["chains"].push_back(
                json{{"direction", c.direction == ChainDirection::Future ? "future" : "past"},
                     {"nodes", c.nodes},
                     {"coords", std::move(coords)},
                     {"growth", c.growth}});
          }
          write_text_file(*chains_out, doc.dump(2) + "\n");
        }
        print_line(status_of(rep.valid) + " hatting: " + std::to_string(chains.size()) +
                   " chains, " + std::to_string(hat.size()) + " nodes, achronal " +
                   (rep.achronal ? "yes" : "no") + " -> " + *out);
        return rep.valid ? 0 : 2;
      };
    });
  }

  // stable-causality-probe
  {
    auto* cmd = app.add_subcommand("stable-causality-probe",
                                   "Cycle search on the widened slit cylinder");
    auto deltas = std::make_shared<std::string>("0,0.05,0.1,0.5");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--deltas", *deltas, "Comma list of widenings, 0 first");
    cmd->add_option("--out", *out, "Optional witness table JSON");
    cmd->callback([=, &action]() {
      action = [=]() {
        const std::vector<CausalityProbeRow> rows =
            stable_causality_probe(csv_doubles(*deltas, "--deltas"));
        bool all_ok = true;
        for (const CausalityProbeRow& r : rows) {
          const bool ok = r.delta == 0.0 ? !r.cycle_found : (r.cycle_found && r.verified);
          all_ok = all_ok && ok;
          print_line(status_of(ok) + " delta " + format_double(r.delta) + ": " +
                     (r.cycle_found
                          ? "cycle through " + std::to_string(r.witness.size()) +
                                " nodes" + (r.verified ? ", verified" : ", UNVERIFIED")
                          : "acyclic"));
        }
        if (!out->empty()) {
          write_text_file(*out, causality_table_to_json(rows).dump(2) + "\n");
        }
        return all_ok ? 0 : 2;
      };
    });
  }

  // report
  {
    auto* cmd = app.add_subcommand("report", "Run a config end to end and write a report");
    auto config = std::make_shared<std::string>();
    cmd->add_option("--config", *config, "Experiment config JSON")->required();
    cmd->callback([=, &action]() {
      action = [=]() { return run_report_file(*config); };
    });
  }

  // emit-plot
  {
    auto* cmd = app.add_subcommand("emit-plot", "Extract plot CSV from a report");
    auto report = std::make_shared<std::string>();
    auto check = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--report", *report, "Report JSON")->required();
    cmd->add_option("--check", *check, "divergence, steepness, or duality")->required();
    cmd->add_option("--out", *out, "Output CSV")->required();
    cmd->callback([=, &action]() {
      action = [=]() {
        const json doc = json::parse(read_text_file(*report), nullptr, false);
        if (doc.is_discarded()) throw ArgumentError("malformed report JSON");
        emit_plot_data(doc, *check, *out);
        print_line(*check + " -> " + *out);
        return 0;
      };
    });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return action ? action() : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

#include "causal_lab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <random>
#include <functional>
#include <utility>

#include "causal_lab/distance_engine.hpp"
#include "causal_lab/errors.hpp"
#include "causal_lab/io.hpp"
#include "causal_lab/metric_models.hpp"
#include "causal_lab/time_functions.hpp"

namespace causal_lab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kPi = 3.14159265358979323846;

Vec2 point_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ArgumentError(what + " must be a [x0, x1] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Window window_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) {
    throw ArgumentError(what + " must be [[lo0, lo1], [hi0, hi1]]");
  }
  Window w{point_from(j[0], what + " lower corner"),
           point_from(j[1], what + " upper corner")};
  if (!w.valid()) throw ArgumentError(what + ": window is empty");
  return w;
}

void check_keys(const json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const std::string& where) {
  for (const char* k : required) {
    if (!obj.contains(k)) {
      throw ArgumentError(where + ": missing required key \"" + k + "\"");
    }
  }
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    const auto match = [&key](const char* k) { return key == k; };
    if (std::any_of(required.begin(), required.end(), match)) continue;
    if (std::any_of(optional.begin(), optional.end(), match)) continue;
    throw ArgumentError(where + ": unknown key \"" + key + "\"");
  }
}

double number_arg(const json& args, const char* key, double fallback,
                  const std::string& where) {
  if (!args.contains(key)) return fallback;
  if (!args.at(key).is_number()) {
    throw ArgumentError(where + ": \"" + key + "\" must be a number");
  }
  return args.at(key).get<double>();
}

std::vector<double> number_list(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ArgumentError(what + " must be a nonempty array");
  std::vector<double> out;
  for (const json& v : j) {
    if (!v.is_number()) throw ArgumentError(what + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Products flowing between pipeline stages; availability is what the config
// validator tracks and what the runner re-checks after upstream errors.
struct Products {
  bool graph = false;
  bool surface = false;
  bool field = false;
  bool chains = false;
};

void validate_stage(const PipelineStage& stage, const ExperimentConfig& cfg,
                    Products& have, const std::string& where) {
  const json& a = stage.args;
  const auto need = [&](bool ok, const char* what) {
    if (!ok) {
      throw ArgumentError(where + ": op \"" + stage.op + "\" needs a " + what +
                          " from an earlier stage");
    }
  };
  const auto need_window = [&](const char* opname) {
    if (!a.contains("window") && !cfg.has_sample) {
      throw ArgumentError(where + ": op \"" + std::string(opname) +
                          "\" needs a window argument when the config has no sample block");
    }
    if (a.contains("window")) window_from(a.at("window"), where + ": window");
  };

  if (stage.op == "surface") {
    check_keys(a, {}, {"op", "name", "future_of", "future_ids", "locate_tol", "expect"}, where);
    need(have.graph, "graph");
    const bool by_coord = a.contains("future_of"), by_id = a.contains("future_ids");
    if (by_coord == by_id) {
      throw ArgumentError(where + ": give exactly one of future_of / future_ids");
    }
    if (by_coord) {
      if (!a.at("future_of").is_array() || a.at("future_of").empty()) {
        throw ArgumentError(where + ": future_of must be a nonempty array of points");
      }
      for (const json& p : a.at("future_of")) point_from(p, where + ": future_of entry");
    }
    have.surface = true;
  } else if (stage.op == "timefn") {
    check_keys(a, {}, {"op", "name"}, where);
    need(have.surface, "surface");
    have.field = true;
  } else if (stage.op == "analytic_field") {
    check_keys(a, {"formula"}, {"op", "name"}, where);
    const std::string f = a.at("formula").get<std::string>();
    if (f != "coordinate0" && f != "coordinate1" && f != "negative_coordinate0" &&
        f != "negative_coordinate1") {
      throw ArgumentError(where + ": unknown formula \"" + f + "\"");
    }
    need(have.graph, "graph");
    have.field = true;
  } else if (stage.op == "verify") {
    check_keys(a, {"checks"},
               {"op", "name", "tol", "tol_grad", "max_pairs", "bound_pairs", "expect"},
               where);
    if (!a.at("checks").is_array() || a.at("checks").empty()) {
      throw ArgumentError(where + ": checks must be a nonempty array");
    }
    for (const json& c : a.at("checks")) {
      const std::string name = c.get<std::string>();
      if (name != "flip" && name != "steep" && name != "bound") {
        throw ArgumentError(where + ": unknown check \"" + name + "\"");
      }
    }
    need(have.field, "field");
  } else if (stage.op == "continuity") {
    check_keys(a, {}, {"op", "name", "top_k", "expect"}, where);
    need(have.field, "field");
  } else if (stage.op == "duality") {
    check_keys(a, {}, {"op", "name", "pairs", "tol"}, where);
    need(have.graph, "graph");
  } else if (stage.op == "distance") {
    check_keys(a, {"pairs"}, {"op", "name", "locate_tol"}, where);
    if (!a.at("pairs").is_array() || a.at("pairs").empty()) {
      throw ArgumentError(where + ": pairs must be a nonempty array");
    }
    for (const json& p : a.at("pairs")) {
      check_keys(p, {"a", "b"}, {"min", "max", "equals", "tol", "locate_tol"},
                 where + ": pair");
      point_from(p.at("a"), where + ": pair a");
      point_from(p.at("b"), where + ": pair b");
      if (!p.contains("min") && !p.contains("max") && !p.contains("equals")) {
        throw ArgumentError(where + ": pair needs min, max, or equals");
      }
    }
    need(have.graph, "graph");
  } else if (stage.op == "probe_divergence") {
    check_keys(a, {"params", "a", "b"},
               {"op", "name", "eps_axis", "window", "step_factor", "horizon", "r_prox",
                "expect"},
               where);
    number_list(a.at("params"), where + ": params");
    point_from(a.at("a"), where + ": a");
    point_from(a.at("b"), where + ": b");
    need_window("probe_divergence");
  } else if (stage.op == "hatting") {
    check_keys(a, {"params"},
               {"op", "name", "window", "step_factor", "horizon", "r_prox", "threshold",
                "future_witness", "past_witness", "max_chains", "separation_factor",
                "expect"},
               where);
    number_list(a.at("params"), where + ": params");
    if (a.contains("future_witness")) point_from(a.at("future_witness"), where);
    if (a.contains("past_witness")) point_from(a.at("past_witness"), where);
    need_window("hatting");
    // Without a sampled graph the finest ladder level becomes the working
    // graph; with one, chains are checked against the sampled graph and the
    // earlier products stay valid.
    have.graph = true;
    have.chains = true;
  } else if (stage.op == "level_set") {
    check_keys(a, {}, {"op", "name", "r"}, where);
    need(have.field, "field");
    need(have.chains, "divergent chain list");
  } else if (stage.op == "stable_causality") {
    check_keys(a, {"deltas"}, {"op", "name"}, where);
    number_list(a.at("deltas"), where + ": deltas");
    if (cfg.model_id != "slit_cylinder") {
      throw ArgumentError(where + ": stable_causality runs on the slit_cylinder model");
    }
  } else if (stage.op == "frames") {
    check_keys(a, {"epsilons"}, {"op", "name", "points", "tol", "window"}, where);
    for (double eps : number_list(a.at("epsilons"), where + ": epsilons")) {
      if (!(eps > 0.0 && eps < 1.0)) {
        throw ArgumentError(where + ": epsilons must lie in (0, 1)");
      }
    }
    need_window("frames");
  } else {
    throw ArgumentError(where + ": unknown op \"" + stage.op + "\"");
  }
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything a running pipeline carries from stage to stage.
struct RunContext {
  const ExperimentConfig* cfg = nullptr;
  std::shared_ptr<const MetricModel> model;
  std::optional<CausalGraph> graph;
  std::optional<NodeSet> surface;
  std::optional<ScalarField> field;
  std::vector<DivergentChain> chains;
  bool have_chains = false;
  json* plots = nullptr;
};

void emit_artifact(const RunContext& ctx, json& record, const std::string& name,
                   const std::string& text) {
  record["artifacts"][name] = content_hash(text);
  if (!ctx.cfg->out_dir.empty()) {
    write_text_file(ctx.cfg->out_dir + "/" + name, text);
  }
}

std::string artifact_name(int stage_index, const char* kind) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d_", stage_index);
  return std::string(buf) + kind;
}

double default_locate_tol(const CausalGraph& g) {
  const GraphMeta& meta = g.meta();
  if (meta.mode == SampleMode::Grid && meta.step > 0.0) return 0.8 * meta.step;
  return mean_spacing(meta.window, g.node_count());
}

NodeId locate(const CausalGraph& g, const Vec2& p, double tol, const std::string& where) {
  const NodeId u = nearest_node(g, p, tol);
  if (u == kNoNode) {
    throw ArgumentError(where + ": no node within " + format_double(tol) + " of (" +
                        format_double(p.x0) + ", " + format_double(p.x1) + ")");
  }
  return u;
}

json chains_to_json(const std::vector<DivergentChain>& chains) {
  json out = json::array();
  for (const DivergentChain& c : chains) {
    json coords = json::array();
    for (const Vec2& p : c.coords) coords.push_back(json::array({p.x0, p.x1}));
    out.push_back(json{{"direction", c.direction == ChainDirection::Future ? "future" : "past"},
                       {"nodes", c.nodes},
                       {"coords", std::move(coords)},
                       {"growth", c.growth},
                       {"seed", json::array({c.seed_coord.x0, c.seed_coord.x1})},
                       {"witness_coord", json::array({c.witness_coord.x0, c.witness_coord.x1})},
                       {"witness", c.witness},
                       {"tail", c.tail}});
  }
  return json{{"chains", std::move(out)}};
}

void run_surface(RunContext& ctx, const json& a, int idx, json& rec) {
  const CausalGraph& g = *ctx.graph;
  std::vector<NodeId> seed_ids;
  if (a.contains("future_of")) {
    const double tol = number_arg(a, "locate_tol", default_locate_tol(g), "surface");
    for (const json& jp : a.at("future_of")) {
      seed_ids.push_back(locate(g, point_from(jp, "surface seed"), tol, "surface"));
    }
  } else {
    for (const json& ji : a.at("future_ids")) {
      const auto u = ji.get<NodeId>();
      if (u >= g.node_count()) throw ArgumentError("surface: node id out of range");
      seed_ids.push_back(u);
    }
  }
  const NodeSet f0 = chronological_future(g, make_node_set(std::move(seed_ids)));
  SplitResult res = build_splitting_surface(g, f0);

  rec["summary"] = json{{"future_set", f0.size()},
                        {"surface_size", res.surface.size()},
                        {"iterations", res.iterations},
                        {"iterate_sizes", res.iterate_sizes},
                        {"residue", res.residue.size()},
                        {"reached_fixpoint", res.reached_fixpoint}};
  const auto max_residue =
      a.contains("expect") ? a.at("expect").value("max_residue", 0u) : 0u;
  rec["tolerances"] = json{{"max_residue", max_residue}};
  if (res.residue.size() > max_residue || !res.reached_fixpoint) {
    rec["status"] = "fail";
  }
  emit_artifact(ctx, rec, artifact_name(idx, "surface.json"),
                node_set_to_json(res.surface));
  ctx.surface = std::move(res.surface);
}

void run_timefn(RunContext& ctx, int idx, json& rec) {
  ScalarField f = time_function_from_surface(*ctx.graph, *ctx.surface);
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  rec["summary"] = json{{"nodes", f.size()}, {"min", *lo}, {"max", *hi}};
  emit_artifact(ctx, rec, artifact_name(idx, "field.json"), field_to_json(f));
  ctx.field = std::move(f);
}

void run_analytic_field(RunContext& ctx, const json& a, int idx, json& rec) {
  const std::string formula = a.at("formula").get<std::string>();
  const double sign = formula.rfind("negative_", 0) == 0 ? -1.0 : 1.0;
  const bool first = formula.rfind("coordinate0") != std::string::npos;
  ScalarField f = analytic_field(
      *ctx.graph, [sign, first](const Vec2& p) { return sign * (first ? p.x0 : p.x1); });
  rec["summary"] = json{{"nodes", f.size()}, {"formula", formula}};
  emit_artifact(ctx, rec, artifact_name(idx, "field.json"), field_to_json(f));
  ctx.field = std::move(f);
}

void run_verify(RunContext& ctx, const json& a, json& rec) {
  const CausalGraph& g = *ctx.graph;
  const ScalarField& f = *ctx.field;
  const json expect = a.value("expect", json::object());
  bool failed = false, inconclusive = false;

  for (const json& jc : a.at("checks")) {
    const std::string check = jc.get<std::string>();
    if (check == "flip") {
      const auto max_pairs = static_cast<std::size_t>(
          number_arg(a, "max_pairs", 50000, "verify"));
      const FlipReport rep = check_reverse_lipschitz(g, f, ctx.cfg->seed, max_pairs);
      rec["summary"]["flip"] = json{{"violations", rep.violations.size()},
                                    {"edges_checked", rep.edges_checked},
                                    {"pairs_checked", rep.pairs_checked}};
      const auto allowed =
          expect.contains("flip") ? expect.at("flip").value("max_violations", 0u) : 0u;
      rec["tolerances"]["flip_max_violations"] = allowed;
      if (rep.violations.size() > allowed) failed = true;
    } else if (check == "steep") {
      const double tol = number_arg(a, "tol", 0.1, "verify");
      const SteepnessSummary s = check_steepness(g.model(), g, f, tol);
      rec["summary"]["steep"] = json{{"fraction", s.fraction},
                                     {"worst", s.worst},
                                     {"reliable", s.reliable},
                                     {"unreliable", s.unreliable},
                                     {"steep", s.steep},
                                     {"past_directed", s.past_directed}};
      rec["tolerances"]["steep_tol"] = tol;
      json rows = json::array();
      for (NodeId u = 0; u < g.node_count(); ++u) {
        const GradientEstimate est = estimate_gradient(g.model(), g, f, u);
        rows.push_back(json::array({u, est.g_grad_grad, est.reliable ? 1 : 0}));
      }
      (*ctx.plots)["steepness"] =
          json{{"columns", json::array({"node_id", "g_grad_grad", "reliable"})},
               {"rows", std::move(rows)}};
      if (expect.contains("steep")) {
        const json& e = expect.at("steep");
        if (e.contains("min_fraction")) {
          rec["tolerances"]["steep_min_fraction"] = e.at("min_fraction");
          if (!(s.fraction >= e.at("min_fraction").get<double>())) failed = true;
        }
        if (e.contains("max_fraction")) {
          rec["tolerances"]["steep_max_fraction"] = e.at("max_fraction");
          if (!(s.fraction <= e.at("max_fraction").get<double>())) failed = true;
        }
        if (e.contains("min_reliable")) {
          if (s.reliable < e.at("min_reliable").get<std::size_t>()) failed = true;
        }
      }
    } else if (check == "bound") {
      const int want = static_cast<int>(number_arg(a, "bound_pairs", 10, "verify"));
      const double tol_grad = number_arg(a, "tol_grad", 0.05, "verify");
      std::mt19937_64 rng(ctx.cfg->seed * 0x9e3779b97f4a7c15ull + 17);
      std::size_t holds = 0, fails = 0, open = 0;
      double min_slack = 0.0;
      bool any = false;
      const auto n = static_cast<NodeId>(g.node_count());
      for (int attempt = 0; attempt < 8 * want && holds + fails + open < static_cast<std::size_t>(want);
           ++attempt) {
        const NodeId u = static_cast<NodeId>(rng() % n);
        const DistanceField df = distance_field(g, {u}, SweepDirection::FromSource);
        std::vector<NodeId> targets;
        for (NodeId v = 0; v < n; ++v) {
          if (v != u && df.chrono(v)) targets.push_back(v);
        }
        if (targets.empty()) continue;
        const NodeId v = targets[rng() % targets.size()];
        CausalPath path;
        for (const NodeId w : extract_path(df, v)) path.push_back(g.position(w));
        const BoundCheck bc = check_bound_inequality(g.model(), g, f, path, tol_grad);
        if (!any || bc.slack < min_slack) min_slack = bc.slack;
        any = true;
        if (bc.outcome == BoundOutcome::Holds) ++holds;
        else if (bc.outcome == BoundOutcome::Fails) ++fails;
        else ++open;
      }
      rec["summary"]["bound"] = json{{"holds", holds},
                                     {"fails", fails},
                                     {"inconclusive", open},
                                     {"min_slack", min_slack}};
      rec["tolerances"]["bound_tol_grad"] = tol_grad;
      if (fails > 0) failed = true;
      else if (holds == 0) inconclusive = true;
    }
  }
  if (failed) rec["status"] = "fail";
  else if (inconclusive) rec["status"] = "inconclusive";
}

void run_continuity(RunContext& ctx, const json& a, json& rec) {
  const auto top_k = static_cast<std::size_t>(number_arg(a, "top_k", 10, "continuity"));
  const ContinuityReport rep = continuity_report(*ctx.graph, *ctx.field, top_k);
  json tops = json::array();
  for (const JumpEdge& e : rep.top) {
    tops.push_back(json{{"a", e.a}, {"b", e.b}, {"jump", e.jump}, {"normalized", e.normalized}});
  }
  rec["summary"] = json{{"max_normalized", rep.max_normalized}, {"top", std::move(tops)}};
  if (a.contains("expect") && a.at("expect").contains("max_normalized_below")) {
    const double cap = a.at("expect").at("max_normalized_below").get<double>();
    rec["tolerances"]["max_normalized_below"] = cap;
    if (!(rep.max_normalized < cap)) rec["status"] = "fail";
  }
}

void run_duality(RunContext& ctx, const json& a, json& rec) {
  const CausalGraph& g = *ctx.graph;
  const int pairs = static_cast<int>(number_arg(a, "pairs", 20, "duality"));
  const double tol = number_arg(a, "tol", 1e-9, "duality");
  std::mt19937_64 rng(ctx.cfg->seed * 0x9e3779b97f4a7c15ull + 29);
  const auto n = static_cast<NodeId>(g.node_count());
  json rows = json::array();
  double worst = 0.0;
  std::size_t related = 0;
  for (int k = 0; k < pairs; ++k) {
    const NodeId p = static_cast<NodeId>(rng() % n);
    const NodeId q = static_cast<NodeId>(rng() % n);
    const double lp = longest_path_distance(g, p, q);
    const DualResult dual = dual_potential(g, p, q);
    const double diff = std::abs(lp - dual.value);
    rows.push_back(json::array({k, lp, dual.value, diff}));
    worst = std::max(worst, diff);
    if (lp > 0.0) ++related;
  }
  (*ctx.plots)["duality"] =
      json{{"columns", json::array({"pair_id", "longest_path", "dual_value", "abs_diff"})},
           {"rows", std::move(rows)}};
  rec["summary"] = json{{"pairs", pairs}, {"chrono_related", related}, {"max_abs_diff", worst}};
  rec["tolerances"] = json{{"tol", tol}};
  if (!(worst <= tol)) rec["status"] = "fail";
}

void run_distance(RunContext& ctx, const json& a, json& rec) {
  const CausalGraph& g = *ctx.graph;
  const double op_tol = number_arg(a, "locate_tol", default_locate_tol(g), "distance");
  json rows = json::array();
  bool failed = false;
  for (const json& p : a.at("pairs")) {
    const double tol = number_arg(p, "locate_tol", op_tol, "distance pair");
    const NodeId u = locate(g, point_from(p.at("a"), "distance a"), tol, "distance");
    const NodeId v = locate(g, point_from(p.at("b"), "distance b"), tol, "distance");
    const double d = longest_path_distance(g, u, v);
    bool ok = true;
    if (p.contains("equals")) {
      ok = std::abs(d - p.at("equals").get<double>()) <= number_arg(p, "tol", 1e-9, "pair");
    }
    if (ok && p.contains("min")) ok = d >= p.at("min").get<double>();
    if (ok && p.contains("max")) ok = d <= p.at("max").get<double>();
    rows.push_back(json{{"from", u}, {"to", v}, {"distance", d}, {"ok", ok}});
    failed = failed || !ok;
  }
  rec["summary"] = json{{"pairs", std::move(rows)}};
  if (failed) rec["status"] = "fail";
}

void run_probe_divergence(RunContext& ctx, const json& a, int idx, json& rec) {
  LadderSpec spec;
  spec.window = a.contains("window") ? window_from(a.at("window"), "probe window")
                                     : ctx.cfg->sample.window;
  spec.params = number_list(a.at("params"), "params");
  spec.step_factor = number_arg(a, "step_factor", 0.5, "probe_divergence");
  spec.horizon = number_arg(a, "horizon", 0.0, "probe_divergence");
  spec.r_prox = number_arg(a, "r_prox", 0.0, "probe_divergence");
  const RefinementLadder ladder = build_ladder(ctx.model, spec);

  ProbeSpec probe;
  probe.a = point_from(a.at("a"), "probe a");
  probe.b = point_from(a.at("b"), "probe b");
  probe.eps_axis = static_cast<int>(number_arg(a, "eps_axis", -1, "probe_divergence"));
  const GrowthTable table = divergence_probe(ladder, probe);

  json jrows = json::array();
  json plot_rows = json::array();
  for (const GrowthRow& r : table.rows) {
    jrows.push_back(json{{"param", r.param},
                         {"distance", r.distance},
                         {"log_inv_param", r.log_inv_param},
                         {"included", r.included},
                         {"note", r.note}});
    plot_rows.push_back(json::array({r.param, r.distance, r.log_inv_param}));
  }
  (*ctx.plots)["divergence"] =
      json{{"columns", json::array({"epsilon", "distance", "log_inv_eps"})},
           {"rows", std::move(plot_rows)}};
  rec["summary"] = json{{"slope", table.slope},
                        {"included_count", table.included_count},
                        {"rows", std::move(jrows)}};
  emit_artifact(ctx, rec, artifact_name(idx, "growth.csv"), growth_table_to_csv(table));

  if (a.contains("expect")) {
    const json& e = a.at("expect");
    if (e.contains("slope_min") && !(table.slope >= e.at("slope_min").get<double>())) {
      rec["status"] = "fail";
    }
    if (e.contains("slope_max") && !(table.slope <= e.at("slope_max").get<double>())) {
      rec["status"] = "fail";
    }
    if (e.contains("abs_slope_max") &&
        !(std::abs(table.slope) <= e.at("abs_slope_max").get<double>())) {
      rec["status"] = "fail";
    }
    rec["tolerances"] = e;
    if (e.contains("min_included") &&
        table.included_count < e.at("min_included").get<std::size_t>()) {
      rec["status"] = "fail";
    }
  }
}

void run_hatting(RunContext& ctx, const json& a, int idx, json& rec) {
  LadderSpec lspec;
  lspec.window = a.contains("window") ? window_from(a.at("window"), "hatting window")
                                      : ctx.cfg->sample.window;
  lspec.params = number_list(a.at("params"), "params");
  lspec.step_factor = number_arg(a, "step_factor", 0.5, "hatting");
  lspec.horizon = number_arg(a, "horizon", 0.0, "hatting");
  lspec.r_prox = number_arg(a, "r_prox", 0.0, "hatting");
  RefinementLadder ladder = build_ladder(ctx.model, lspec);

  ChainSearchSpec cspec;
  cspec.threshold = number_arg(a, "threshold", 0.0, "hatting");
  if (a.contains("future_witness")) {
    cspec.has_future_witness = true;
    cspec.future_witness = point_from(a.at("future_witness"), "future_witness");
  }
  if (a.contains("past_witness")) {
    cspec.has_past_witness = true;
    cspec.past_witness = point_from(a.at("past_witness"), "past_witness");
  }
  cspec.max_chains_per_direction =
      static_cast<int>(number_arg(a, "max_chains", 4, "hatting"));
  cspec.separation_factor = number_arg(a, "separation_factor", 8.0, "hatting");

  std::vector<DivergentChain> chains = detect_divergent_chains(ladder, cspec);
  const auto min_chains =
      a.contains("expect") ? a.at("expect").value("min_chains", 1u) : 1u;
  rec["tolerances"] = json{{"min_chains", min_chains}};

  if (chains.empty()) {
    rec["summary"] = json{{"chains", 0}};
    rec["status"] = "fail";
    return;
  }

  // The hatting lives on the sampled graph when the config has one; otherwise
  // the finest ladder level takes over as the working graph.
  const bool adopt_finest = !ctx.graph.has_value();
  if (adopt_finest) {
    ctx.graph = std::move(ladder.levels.back());
    ctx.surface.reset();
    ctx.field.reset();
  }
  const CausalGraph& host = *ctx.graph;
  NodeSet hat = build_hatting(host, chains);
  const HattingReport rep = is_hatting(host, hat, chains);

  json suffix = json::array();
  for (const std::size_t s : rep.suffix_start) {
    if (s == static_cast<std::size_t>(-1)) suffix.push_back(nullptr);
    else suffix.push_back(s);
  }
  rec["summary"] = json{{"chains", chains.size()},
                        {"hatting_size", hat.size()},
                        {"achronal", rep.achronal},
                        {"valid", rep.valid},
                        {"chain_ok", json(rep.chain_ok)},
                        {"suffix_start", std::move(suffix)},
                        {"host_nodes", host.node_count()},
                        {"host_is_finest_level", adopt_finest}};
  if (!rep.valid || chains.size() < min_chains) rec["status"] = "fail";

  emit_artifact(ctx, rec, artifact_name(idx, "hatting.json"), node_set_to_json(hat));
  emit_artifact(ctx, rec, artifact_name(idx, "chains.json"),
                chains_to_json(chains).dump(2) + "\n");

  ctx.chains = std::move(chains);
  ctx.have_chains = true;
}

void run_level_set(RunContext& ctx, const json& a, int idx, json& rec) {
  const double r = number_arg(a, "r", 0.0, "level_set");
  const LevelSetCheck check = check_level_set_hatting(*ctx.graph, *ctx.field, r, ctx.chains);
  json chain_ok = json::array();
  for (const bool ok : check.report.chain_ok) chain_ok.push_back(ok);
  rec["summary"] = json{{"r", r},
                        {"passed", check.passed},
                        {"level_size", check.level_set.size()},
                        {"achronal", check.report.achronal},
                        {"chain_ok", std::move(chain_ok)}};
  rec["tolerances"] = json{{"band", check.tolerance}};
  if (!check.passed) rec["status"] = "fail";
  emit_artifact(ctx, rec, artifact_name(idx, "level_set.json"),
                node_set_to_json(check.level_set));
}

void run_stable_causality(RunContext& ctx, const json& a, int idx, json& rec) {
  const std::vector<double> deltas = number_list(a.at("deltas"), "deltas");
  const std::vector<CausalityProbeRow> rows = stable_causality_probe(deltas);
  bool ok = true;
  json jrows = json::array();
  for (const CausalityProbeRow& r : rows) {
    const bool row_ok = r.delta == 0.0 ? !r.cycle_found : (r.cycle_found && r.verified);
    ok = ok && row_ok;
    jrows.push_back(json{{"delta", r.delta},
                         {"cycle_found", r.cycle_found},
                         {"verified", r.verified},
                         {"witness_length", r.witness.size()},
                         {"ok", row_ok}});
  }
  rec["summary"] = json{{"rows", std::move(jrows)}};
  if (!ok) rec["status"] = "fail";
  emit_artifact(ctx, rec, artifact_name(idx, "causality.json"),
                causality_table_to_json(rows).dump(2) + "\n");
}

void run_frames(RunContext& ctx, const json& a, json& rec) {
  const Window window = a.contains("window")
                            ? window_from(a.at("window"), "frames window")
                            : ctx.cfg->sample.window;
  const int points = static_cast<int>(number_arg(a, "points", 100, "frames"));
  const double tol = number_arg(a, "tol", 1e-12, "frames");
  const std::vector<double> epsilons = number_list(a.at("epsilons"), "epsilons");
  const MetricModel& model = *ctx.model;

  std::mt19937_64 rng(ctx.cfg->seed * 0x9e3779b97f4a7c15ull + 43);
  std::uniform_real_distribution<double> u0(window.lo.x0, window.hi.x0);
  std::uniform_real_distribution<double> u1(window.lo.x1, window.hi.x1);

  double worst = 0.0;
  std::size_t orientation_failures = 0;
  int accepted = 0;
  for (int attempt = 0; attempt < 1000 * points && accepted < points; ++attempt) {
    const Vec2 p{u0(rng), u1(rng)};
    if (!model.contains(p)) continue;
    ++accepted;
    const Metric2 g = model.metric_at(p);
    for (const double eps : epsilons) {
      const SteepFrame fr = build_steep_frame(model, p, FrameSpec{eps});
      const double want11 = (1.0 - eps) * (1.0 - eps) - 1.0;
      worst = std::max({worst, std::abs(g.eval(fr.e0, fr.e0) + 1.0),
                        std::abs(g.eval(fr.e0, fr.e1) + 1.0),
                        std::abs(g.eval(fr.e1, fr.e1) - want11)});
      if (causal_character(model, p, fr.e0) != CausalCharacter::TimelikeFuture ||
          causal_character(model, p, fr.e1) != CausalCharacter::TimelikeFuture) {
        ++orientation_failures;
      }
    }
  }
  if (accepted < points) {
    throw SamplingError("frames: window rejects too many sample points");
  }
  rec["summary"] = json{{"points", accepted},
                        {"epsilons", epsilons},
                        {"max_gram_deviation", worst},
                        {"orientation_failures", orientation_failures}};
  rec["tolerances"] = json{{"tol", tol}};
  if (!(worst <= tol) || orientation_failures > 0) rec["status"] = "fail";
}

// Directed cycle in edge order, as the node walk v0 -> v1 -> ... -> v0 (last
// edge implied); empty when the graph is acyclic.
std::vector<NodeId> find_cycle(const CausalGraph& g) {
  const auto n = static_cast<NodeId>(g.node_count());
  std::vector<int> color(n, 0);
  std::vector<std::pair<NodeId, std::uint32_t>> frames;
  std::vector<NodeId> path;
  for (NodeId s = 0; s < n; ++s) {
    if (color[s] != 0) continue;
    color[s] = 1;
    frames.emplace_back(s, g.out_range(s).first);
    path.push_back(s);
    while (!frames.empty()) {
      const NodeId u = frames.back().first;
      const std::uint32_t hi = g.out_range(u).second;
      if (frames.back().second >= hi) {
        color[u] = 2;
        path.pop_back();
        frames.pop_back();
        continue;
      }
      const NodeId v = g.edges()[frames.back().second].to;
      ++frames.back().second;
      if (color[v] == 0) {
        color[v] = 1;
        frames.emplace_back(v, g.out_range(v).first);
        path.push_back(v);
      } else if (color[v] == 1) {
        const auto pos = std::find(path.begin(), path.end(), v);
        return {pos, path.end()};
      }
    }
  }
  return {};
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw ArgumentError("config: malformed JSON");
  }
  try {
    check_keys(root, {"model", "seed", "pipeline"},
               {"delta", "out_dir", "sample", "horizon", "r_prox"}, "config");

    ExperimentConfig cfg;
    cfg.model_id = root.at("model").get<std::string>();
    make_model(cfg.model_id);  // rejects unknown ids before any computation
    if (!root.at("seed").is_number_unsigned()) {
      throw ArgumentError("config: seed must be an unsigned integer");
    }
    cfg.seed = root.at("seed").get<std::uint64_t>();
    cfg.delta = root.value("delta", 0.0);
    if (!(cfg.delta >= 0.0)) throw ArgumentError("config: delta must be >= 0");
    cfg.out_dir = root.value("out_dir", std::string());
    cfg.horizon = root.value("horizon", 0.0);
    cfg.r_prox = root.value("r_prox", 0.0);

    if (root.contains("sample")) {
      const json& s = root.at("sample");
      check_keys(s, {"mode", "window"}, {"step", "density"}, "config sample");
      const std::string mode = s.at("mode").get<std::string>();
      if (mode == "grid") {
        cfg.sample.mode = SampleMode::Grid;
        cfg.sample.step = s.value("step", 0.0);
        if (!(cfg.sample.step > 0.0)) {
          throw ArgumentError("config: grid sampling needs step > 0");
        }
      } else if (mode == "sprinkle") {
        cfg.sample.mode = SampleMode::Sprinkle;
        cfg.sample.density = s.value("density", 0.0);
        if (!(cfg.sample.density > 0.0)) {
          throw ArgumentError("config: sprinkle sampling needs density > 0");
        }
      } else {
        throw ArgumentError("config: unknown sample mode \"" + mode + "\"");
      }
      cfg.sample.window = window_from(s.at("window"), "config sample window");
      cfg.sample.seed = cfg.seed;
      cfg.has_sample = true;
    }

    if (!root.at("pipeline").is_array() || root.at("pipeline").empty()) {
      throw ArgumentError("config: pipeline must be a nonempty array");
    }
    Products have;
    have.graph = cfg.has_sample;
    int index = 1;
    for (const json& js : root.at("pipeline")) {
      if (!js.is_object() || !js.contains("op") || !js.at("op").is_string()) {
        throw ArgumentError("config: each pipeline stage needs an \"op\" string");
      }
      PipelineStage stage{js.at("op").get<std::string>(), js};
      validate_stage(stage, cfg, have, "config stage " + std::to_string(index));
      cfg.pipeline.push_back(std::move(stage));
      ++index;
    }

    cfg.canonical_text = root.dump();
    return cfg;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text_file(path));
}

Report run_experiment(const ExperimentConfig& cfg) {
  json doc{{"causal_lab_version", kVersion},
           {"model", cfg.model_id},
           {"seed", cfg.seed},
           {"config_hash", content_hash(cfg.canonical_text)},
           {"timestamp", utc_timestamp()},
           {"checks", json::array()},
           {"plots", json::object()}};

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
  }

  RunContext ctx;
  ctx.cfg = &cfg;
  ctx.model = make_model(cfg.model_id);
  if (cfg.delta > 0.0) ctx.model = widen_cones(ctx.model, cfg.delta);
  ctx.plots = &doc["plots"];

  const auto run_guarded = [&](const std::string& name, const std::string& op,
                               const std::function<void(json&)>& body) {
    json rec{{"name", name},
             {"op", op},
             {"status", "pass"},
             {"summary", json::object()},
             {"tolerances", json::object()},
             {"artifacts", json::object()}};
    try {
      body(rec);
    } catch (const std::exception& e) {
      rec["status"] = "error";
      rec["summary"] = json{{"message", e.what()}};
    }
    doc["checks"].push_back(std::move(rec));
  };

  if (cfg.has_sample) {
    run_guarded("sample_0", "sample", [&](json& rec) {
      CausalGraph g = build_graph(ctx.model, cfg.sample, cfg.horizon, cfg.r_prox);
      g.meta().delta = cfg.delta;
      rec["summary"] = json{{"nodes", g.node_count()},
                            {"edges", g.edges().size()},
                            {"proximity", g.proximity_pairs().size()},
                            {"cyclic", g.cyclic()}};
      emit_artifact(ctx, rec, artifact_name(0, "graph.json"), graph_to_json(g));
      ctx.graph = std::move(g);
    });
  }

  int index = 1;
  for (const PipelineStage& stage : cfg.pipeline) {
    const int idx = index++;
    const std::string name =
        stage.args.value("name", stage.op + "_" + std::to_string(idx));

    const bool needs_graph = stage.op == "surface" || stage.op == "analytic_field" ||
                             stage.op == "duality" || stage.op == "distance";
    const bool missing =
        (needs_graph && !ctx.graph.has_value()) ||
        (stage.op == "timefn" && !(ctx.surface.has_value() && ctx.graph.has_value())) ||
        ((stage.op == "verify" || stage.op == "continuity") && !ctx.field.has_value()) ||
        (stage.op == "level_set" && !(ctx.field.has_value() && ctx.have_chains));
    if (missing) {
      doc["checks"].push_back(json{{"name", name},
                                   {"op", stage.op},
                                   {"status", "skipped"},
                                   {"summary", json{{"message", "input missing after an earlier failure"}}},
                                   {"tolerances", json::object()},
                                   {"artifacts", json::object()}});
      continue;
    }

    run_guarded(name, stage.op, [&](json& rec) {
      const json& a = stage.args;
      if (stage.op == "surface") run_surface(ctx, a, idx, rec);
      else if (stage.op == "timefn") run_timefn(ctx, idx, rec);
      else if (stage.op == "analytic_field") run_analytic_field(ctx, a, idx, rec);
      else if (stage.op == "verify") run_verify(ctx, a, rec);
      else if (stage.op == "continuity") run_continuity(ctx, a, rec);
      else if (stage.op == "duality") run_duality(ctx, a, rec);
      else if (stage.op == "distance") run_distance(ctx, a, rec);
      else if (stage.op == "probe_divergence") run_probe_divergence(ctx, a, idx, rec);
      else if (stage.op == "hatting") run_hatting(ctx, a, idx, rec);
      else if (stage.op == "level_set") run_level_set(ctx, a, idx, rec);
      else if (stage.op == "stable_causality") run_stable_causality(ctx, a, idx, rec);
      else if (stage.op == "frames") run_frames(ctx, a, rec);
      else throw ArgumentError("unknown op \"" + stage.op + "\"");
    });
  }

  bool any_bad = false, any_open = false;
  for (const json& rec : doc["checks"]) {
    const std::string status = rec.at("status").get<std::string>();
    if (status == "fail" || status == "error") any_bad = true;
    if (status == "inconclusive") any_open = true;
  }

  Report report;
  report.doc = std::move(doc);
  report.exit_code = any_bad ? 2 : (any_open ? 3 : 0);
  if (!cfg.out_dir.empty()) {
    save_report(report, cfg.out_dir + "/report.json");
  }
  return report;
}

void save_report(const Report& report, const std::string& path) {
  write_text_file(path, report.doc.dump(2) + "\n");
}

std::string report_hash(const json& report_doc) {
  json trimmed = report_doc;
  trimmed.erase("timestamp");
  return content_hash(trimmed.dump());
}

std::vector<CausalityProbeRow> stable_causality_probe(const std::vector<double>& deltas) {
  const std::shared_ptr<MetricModel> base = make_model("slit_cylinder");
  std::vector<CausalityProbeRow> rows;
  for (const double delta : deltas) {
    if (!(delta >= 0.0)) {
      throw ArgumentError("stable_causality_probe: deltas must be >= 0");
    }
    const std::shared_ptr<const MetricModel> model = widen_cones(base, delta);

    // Ring threading both barrier gaps: climb through the short way around at
    // a slope halfway between the unwidened and widened light cones, descend
    // over the long way back. The climb geometry follows the probed widening
    // (floored at 0.05), so at delta = 0 the same ring sits just outside the
    // light cone and stays acyclic.
    const double m = std::sqrt(1.0 + std::max(delta, 0.05));
    const double mu = (m - 1.0) * kPi / 8.0;
    const double rise = kPi / 2.0 + 2.0 * mu;
    std::vector<Vec2> nodes;
    nodes.reserve(32);
    for (int i = 0; i < 32; ++i) {
      const double t = -kPi / 4.0 + i * (kPi / 16.0);
      const double s = i <= 8 ? -kPi / 4.0 - mu + i * (rise / 8.0)
                              : kPi / 4.0 + mu - (i - 8) * (rise / 24.0);
      nodes.push_back(model->canonical({t, s}));
    }
    const CausalGraph g = build_causal_dag(model, nodes, 0.3, 0.2);

    CausalityProbeRow row;
    row.delta = delta;
    if (g.cyclic()) {
      row.witness = find_cycle(g);
      row.cycle_found = !row.witness.empty();
      bool ok = row.cycle_found;
      for (std::size_t i = 0; ok && i < row.witness.size(); ++i) {
        const Vec2 pa = g.position(row.witness[i]);
        const Vec2 pb = g.position(row.witness[(i + 1) % row.witness.size()]);
        bool hop = false;
        for (const Vec2& d : model->displacements(pa, pb)) {
          if (model->segment_visible(pa, d) && segment_future_causal(*model, pa, d, 8)) {
            hop = true;
            break;
          }
        }
        ok = hop;
      }
      row.verified = ok;
      for (const NodeId u : row.witness) row.witness_coords.push_back(g.position(u));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json causality_table_to_json(const std::vector<CausalityProbeRow>& rows) {
  json out = json::array();
  for (const CausalityProbeRow& r : rows) {
    json coords = json::array();
    for (const Vec2& p : r.witness_coords) coords.push_back(json::array({p.x0, p.x1}));
    out.push_back(json{{"delta", r.delta},
                       {"cycle_found", r.cycle_found},
                       {"verified", r.verified},
                       {"witness", r.witness},
                       {"witness_coords", std::move(coords)}});
  }
  return json{{"rows", std::move(out)}};
}

std::string plot_data_csv(const json& report_doc, const std::string& check) {
  if (!report_doc.contains("plots") || !report_doc.at("plots").contains(check)) {
    throw ArgumentError("report has no plot data for \"" + check +
                        "\"; known kinds: divergence, steepness, duality");
  }
  const json& block = report_doc.at("plots").at(check);
  std::string out;
  const json& columns = block.at("columns");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i].get<std::string>();
  }
  out += '\n';
  for (const json& row : block.at("rows")) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (row[i].is_number_integer() || row[i].is_number_unsigned()) {
        out += std::to_string(row[i].get<long long>());
      } else {
        out += format_double(row[i].get<double>());
      }
    }
    out += '\n';
  }
  return out;
}

void emit_plot_data(const json& report_doc, const std::string& check,
                    const std::string& path) {
  write_text_file(path, plot_data_csv(report_doc, check));
}

}  // namespace causal_lab

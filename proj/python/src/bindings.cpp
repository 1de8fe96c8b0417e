#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "causal_lab/achronal_ops.hpp"
#include "causal_lab/causal_graph.hpp"
#include "causal_lab/distance_engine.hpp"
#include "causal_lab/errors.hpp"
#include "causal_lab/experiment.hpp"
#include "causal_lab/io.hpp"
#include "causal_lab/metric_models.hpp"
#include "causal_lab/time_functions.hpp"

namespace py = pybind11;
using namespace causal_lab;

namespace {

using Point = std::pair<double, double>;
using PyWindow = std::pair<Point, Point>;

Window window_of(const PyWindow& w) {
  Window out{{w.first.first, w.first.second}, {w.second.first, w.second.second}};
  if (!out.valid()) throw ArgumentError("window must satisfy lo < hi on both axes");
  return out;
}

ScalarField field_of(const std::vector<double>& values, std::size_t n) {
  if (values.size() != n) {
    throw ArgumentError("field length does not match the node count");
  }
  ScalarField f;
  f.values = values;
  return f;
}

CausalGraph sample(const std::string& model_id, const std::string& mode,
                   const PyWindow& window, double step, double density,
                   std::uint64_t seed, double horizon, double r_prox, double delta) {
  SamplingSpec spec;
  spec.window = window_of(window);
  spec.seed = seed;
  if (mode == "grid") {
    spec.mode = SampleMode::Grid;
    spec.step = step;
  } else if (mode == "sprinkle") {
    spec.mode = SampleMode::Sprinkle;
    spec.density = density;
  } else {
    throw ArgumentError("mode must be \"grid\" or \"sprinkle\"");
  }
  std::shared_ptr<const MetricModel> m = make_model(model_id);
  if (delta > 0.0) m = widen_cones(m, delta);
  CausalGraph g = build_graph(m, spec, horizon, r_prox);
  g.meta().delta = delta;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Causal graphs, Lorentzian distance, and achronal structure on "
            "discretized 2d spacetimes";

  py::register_exception<Error>(m, "CausalLabError");

  py::class_<CausalGraph>(m, "CausalGraph")
      .def_property_readonly("node_count", &CausalGraph::node_count)
      .def_property_readonly("edge_count", &CausalGraph::edge_count)
      .def_property_readonly("model_id",
                             [](const CausalGraph& g) { return g.meta().model_id; })
      .def("cyclic", &CausalGraph::cyclic)
      .def("position",
           [](const CausalGraph& g, NodeId u) {
             if (u >= g.node_count()) throw ArgumentError("node id out of range");
             const Vec2 p = g.position(u);
             return Point{p.x0, p.x1};
           },
           py::arg("node"))
      .def("to_json", [](const CausalGraph& g) { return graph_to_json(g); })
      .def_static("from_json",
                  [](const std::string& text) { return graph_from_json(text); },
                  py::arg("text"))
      .def("__repr__", [](const CausalGraph& g) {
        return "<CausalGraph " + g.meta().model_id + ", " +
               std::to_string(g.node_count()) + " nodes, " +
               std::to_string(g.edge_count()) + " edges>";
      });

  m.def("sample_graph", &sample, py::arg("model"), py::arg("mode"), py::arg("window"),
        py::arg("step") = 0.0, py::arg("density") = 0.0, py::arg("seed") = 0,
        py::arg("horizon") = 0.0, py::arg("r_prox") = 0.0, py::arg("delta") = 0.0,
        "Sample a model into a causal graph. window is ((lo0, lo1), (hi0, hi1)); "
        "grid mode needs step, sprinkle mode needs density and seed. horizon and "
        "r_prox default to multiples of the mean node spacing; delta > 0 widens "
        "the cones after sampling.");

  m.def("nearest_node",
        [](const CausalGraph& g, const Point& p, double max_dist) {
          const NodeId u = nearest_node(g, {p.first, p.second}, max_dist);
          return u == kNoNode ? py::object(py::none()) : py::object(py::cast(u));
        },
        py::arg("graph"), py::arg("point"), py::arg("max_dist"),
        "Id of the node closest to point within max_dist, or None.");

  m.def("longest_path_distance",
        [](const CausalGraph& g, NodeId p, NodeId q) {
          if (p >= g.node_count() || q >= g.node_count()) {
            throw ArgumentError("node id out of range");
          }
          return longest_path_distance(g, p, q);
        },
        py::arg("graph"), py::arg("p"), py::arg("q"),
        "Lorentzian distance: the largest total weight over causal paths p -> q, "
        "0 when unrelated.");

  m.def("dual_potential",
        [](const CausalGraph& g, NodeId p, NodeId q) {
          if (p >= g.node_count() || q >= g.node_count()) {
            throw ArgumentError("node id out of range");
          }
          DualResult r = dual_potential(g, p, q);
          return std::make_pair(r.value, std::move(r.field.values));
        },
        py::arg("graph"), py::arg("p"), py::arg("q"),
        "Exact dual of the longest-path problem: returns (value, potential) where "
        "value equals the distance p -> q and the potential grows by at least the "
        "edge weight along every causal edge.");

  m.def("chronological_future",
        [](const CausalGraph& g, const std::vector<NodeId>& ids) {
          return chronological_future(g, make_node_set(std::vector<NodeId>(ids))).ids;
        },
        py::arg("graph"), py::arg("ids"),
        "Nodes at positive distance from the given set.");

  m.def("splitting_surface",
        [](const CausalGraph& g, const std::vector<NodeId>& future_ids) {
          SplitResult r = build_splitting_surface(
              g, make_node_set(std::vector<NodeId>(future_ids), SetTag::FutureSet));
          py::dict out;
          out["surface"] = r.surface.ids;
          out["residue"] = r.residue;
          out["iterations"] = r.iterations;
          out["iterate_sizes"] = r.iterate_sizes;
          out["reached_fixpoint"] = r.reached_fixpoint;
          return out;
        },
        py::arg("graph"), py::arg("future_ids"),
        "Grow an achronal surface that splits the graph around the given future "
        "set; every node ends up on, above, or below it.");

  m.def("time_function",
        [](const CausalGraph& g, const std::vector<NodeId>& surface_ids) {
          return time_function_from_surface(
                     g, make_node_set(std::vector<NodeId>(surface_ids), SetTag::Surface))
              .values;
        },
        py::arg("graph"), py::arg("surface_ids"),
        "Signed-distance time function: negative below the surface, zero on it, "
        "positive above.");

  m.def("check_flip",
        [](const CausalGraph& g, const std::vector<double>& field, std::uint64_t seed,
           std::size_t max_pairs) {
          const FlipReport r =
              check_reverse_lipschitz(g, field_of(field, g.node_count()), seed, max_pairs);
          py::dict out;
          out["clean"] = r.clean();
          out["violations"] = r.violations.size();
          out["edges_checked"] = r.edges_checked;
          out["pairs_checked"] = r.pairs_checked;
          return out;
        },
        py::arg("graph"), py::arg("field"), py::arg("seed") = 1,
        py::arg("max_pairs") = 50000,
        "Check f(v) - f(u) >= d(u, v) on causal edges and sampled related pairs.");

  m.def("check_steepness",
        [](const CausalGraph& g, const std::vector<double>& field, double tol) {
          const SteepnessSummary s =
              check_steepness(g.model(), g, field_of(field, g.node_count()), tol);
          py::dict out;
          out["fraction"] = s.fraction;
          out["reliable"] = s.reliable;
          out["unreliable"] = s.unreliable;
          out["steep"] = s.steep;
          out["past_directed"] = s.past_directed;
          out["worst"] = s.worst;
          return out;
        },
        py::arg("graph"), py::arg("field"), py::arg("tol") = 0.1,
        "Estimate gradients over proximity neighborhoods and report the fraction "
        "of reliable nodes with g(grad f, grad f) <= -(1 - tol).");

  m.def("run_experiment",
        [](const std::string& config_text) {
          const Report report = run_experiment(parse_experiment_config(config_text));
          return std::make_pair(report.doc.dump(2), report.exit_code);
        },
        py::arg("config_json"),
        "Run a full experiment config (JSON text) and return "
        "(report_json, exit_code).");
}

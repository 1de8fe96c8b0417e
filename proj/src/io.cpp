#include "causal_lab/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "causal_lab/errors.hpp"
#include "causal_lab/metric_models.hpp"
#include "json.hpp"

namespace causal_lab {

using nlohmann::json;

namespace {

const char* mode_name(SampleMode mode) {
  return mode == SampleMode::Grid ? "grid" : "sprinkle";
}

SampleMode mode_from_name(const std::string& name) {
  if (name == "grid") return SampleMode::Grid;
  if (name == "sprinkle") return SampleMode::Sprinkle;
  throw ArgumentError("unknown sample mode: " + name);
}

json meta_to_json(const GraphMeta& meta) {
  return json{{"model", meta.model_id},
              {"mode", mode_name(meta.mode)},
              {"step", meta.step},
              {"density", meta.density},
              {"horizon", meta.horizon},
              {"r_prox", meta.r_prox},
              {"delta", meta.delta},
              {"window", json::array({json::array({meta.window.lo.x0, meta.window.lo.x1}),
                                      json::array({meta.window.hi.x0, meta.window.hi.x1})})},
              {"seed", meta.seed}};
}

GraphMeta meta_from_json(const json& j) {
  GraphMeta meta;
  meta.model_id = j.at("model").get<std::string>();
  meta.mode = mode_from_name(j.at("mode").get<std::string>());
  meta.step = j.at("step").get<double>();
  meta.density = j.at("density").get<double>();
  meta.horizon = j.at("horizon").get<double>();
  meta.r_prox = j.at("r_prox").get<double>();
  meta.delta = j.value("delta", 0.0);
  const json& w = j.at("window");
  meta.window.lo = {w.at(0).at(0).get<double>(), w.at(0).at(1).get<double>()};
  meta.window.hi = {w.at(1).at(0).get<double>(), w.at(1).at(1).get<double>()};
  meta.seed = j.at("seed").get<std::uint64_t>();
  return meta;
}

json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ArgumentError(std::string("malformed JSON in ") + what);
  }
  return j;
}

}  // namespace

std::string graph_to_json(const CausalGraph& graph) {
  json nodes = json::array();
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    const Vec2& p = graph.position(u);
    nodes.push_back(json::array({u, p.x0, p.x1}));
  }
  json edges = json::array();
  for (const GraphEdge& e : graph.edges()) {
    edges.push_back(json::array({e.from, e.to, e.weight}));
  }
  json prox = json::array();
  for (const auto& [a, b] : graph.proximity_pairs()) {
    prox.push_back(json::array({a, b}));
  }
  json doc{{"meta", meta_to_json(graph.meta())},
           {"nodes", std::move(nodes)},
           {"edges", std::move(edges)},
           {"proximity", std::move(prox)}};
  return doc.dump(2) + "\n";
}

CausalGraph graph_from_json(const std::string& text) {
  const json doc = parse_text(text, "graph");
  GraphMeta meta = meta_from_json(doc.at("meta"));
  std::shared_ptr<const MetricModel> model = make_model(meta.model_id);
  if (meta.delta > 0.0) model = widen_cones(model, meta.delta);

  const json& jn = doc.at("nodes");
  std::vector<Vec2> nodes(jn.size());
  for (const json& row : jn) {
    const auto id = row.at(0).get<NodeId>();
    if (id >= nodes.size()) throw ArgumentError("graph JSON: node id out of range");
    nodes[id] = {row.at(1).get<double>(), row.at(2).get<double>()};
  }
  std::vector<GraphEdge> edges;
  edges.reserve(doc.at("edges").size());
  for (const json& row : doc.at("edges")) {
    edges.push_back({row.at(0).get<NodeId>(), row.at(1).get<NodeId>(),
                     row.at(2).get<double>()});
  }
  std::vector<std::pair<NodeId, NodeId>> prox;
  prox.reserve(doc.at("proximity").size());
  for (const json& row : doc.at("proximity")) {
    prox.emplace_back(row.at(0).get<NodeId>(), row.at(1).get<NodeId>());
  }
  return CausalGraph(std::move(model), std::move(nodes), std::move(edges),
                     std::move(prox), std::move(meta));
}

void save_graph(const CausalGraph& graph, const std::string& path) {
  write_text_file(path, graph_to_json(graph));
}

CausalGraph load_graph(const std::string& path) {
  return graph_from_json(read_text_file(path));
}

std::string node_set_to_json(const NodeSet& set) {
  json doc{{"tag", to_string(set.tag)}, {"ids", set.ids}};
  return doc.dump(2) + "\n";
}

NodeSet node_set_from_json(const std::string& text) {
  const json doc = parse_text(text, "node set");
  if (!doc.is_object()) throw ArgumentError("node set JSON must be an object");
  NodeSet set;
  set.tag = set_tag_from_string(doc.at("tag").get<std::string>());
  set.ids = doc.at("ids").get<std::vector<NodeId>>();
  return make_node_set(std::move(set.ids), set.tag);
}

void save_node_set(const NodeSet& set, const std::string& path) {
  write_text_file(path, node_set_to_json(set));
}

NodeSet load_node_set(const std::string& path) {
  return node_set_from_json(read_text_file(path));
}

std::string field_to_json(const ScalarField& field) {
  json doc = json::object();
  for (std::size_t u = 0; u < field.size(); ++u) {
    doc[std::to_string(u)] = field.values[u];
  }
  return doc.dump(2) + "\n";
}

ScalarField field_from_json(const std::string& text) {
  const json doc = parse_text(text, "field");
  if (!doc.is_object()) throw ArgumentError("field JSON must be an object");
  ScalarField field;
  field.values.assign(doc.size(), 0.0);
  std::vector<bool> seen(doc.size(), false);
  for (const auto& [key, value] : doc.items()) {
    std::size_t pos = 0;
    unsigned long id = 0;
    try {
      id = std::stoul(key, &pos);
    } catch (const std::exception&) {
      throw ArgumentError("field JSON: non-numeric node id \"" + key + "\"");
    }
    if (pos != key.size() || id >= field.values.size()) {
      throw ArgumentError("field JSON: node ids must cover 0..n-1, got \"" + key + "\"");
    }
    field.values[id] = value.get<double>();
    seen[id] = true;
  }
  for (std::size_t u = 0; u < seen.size(); ++u) {
    if (!seen[u]) {
      throw ArgumentError("field JSON: missing node id " + std::to_string(u));
    }
  }
  return field;
}

void save_field(const ScalarField& field, const std::string& path) {
  write_text_file(path, field_to_json(field));
}

ScalarField load_field(const std::string& path) {
  return field_from_json(read_text_file(path));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string growth_table_to_csv(const GrowthTable& table) {
  std::string out = "epsilon,distance,log_inv_eps\n";
  for (const GrowthRow& row : table.rows) {
    out += format_double(row.param);
    out += ',';
    out += format_double(row.distance);
    out += ',';
    out += format_double(row.log_inv_param);
    out += '\n';
  }
  return out;
}

void save_growth_csv(const GrowthTable& table, const std::string& path) {
  write_text_file(path, growth_table_to_csv(table));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
  if (!out) throw ArgumentError("short write to " + path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string content_hash(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

std::string file_hash(const std::string& path) {
  return content_hash(read_text_file(path));
}

}  // namespace causal_lab

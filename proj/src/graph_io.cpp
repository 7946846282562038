#include "pcsym/graph_io.hpp"

#include <cctype>
#include <charconv>
#include <map>

#include <json.hpp>

namespace pcsym {

using nlohmann::json;

Graph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("graph JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vertices") || !j["vertices"].is_number_unsigned())
    throw ValidationError("graph JSON: expected object with unsigned \"vertices\"");
  Graph g(j["vertices"].get<VertexId>());
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw ValidationError("graph JSON: \"edges\" must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
          !e[1].is_number_unsigned())
        throw ValidationError("graph JSON: each edge must be [u,v] with unsigned ids");
      g.add_edge(e[0].get<VertexId>(), e[1].get<VertexId>());
    }
  }
  if (j.contains("labels")) {
    if (!j["labels"].is_object()) throw ValidationError("graph JSON: \"labels\" must be an object");
    for (const auto& [key, val] : j["labels"].items()) {
      VertexId v{};
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
      if (ec != std::errc{} || ptr != key.data() + key.size() || !val.is_string())
        throw ValidationError("graph JSON: label keys must be vertex ids, values strings");
      g.set_label(v, val.get<std::string>());
    }
  }
  return g;
}

std::string graph_to_json(const Graph& g) {
  json j;
  j["vertices"] = g.vertex_count();
  j["edges"] = json::array();
  for (auto [u, v] : g.edges()) j["edges"].push_back({u, v});
  if (!g.labels().empty()) {
    // std::map orders keys numerically-by-string; good enough for stability
    // since emission sorts by vertex id below.
    json labels = json::object();
    std::map<VertexId, std::string> sorted(g.labels().begin(), g.labels().end());
    for (const auto& [v, l] : sorted) labels[std::to_string(v)] = l;
    j["labels"] = std::move(labels);
  }
  return j.dump(2) + "\n";
}

namespace {

struct DotLexer {
  const std::string& text;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else if (text.compare(pos, 2, "//") == 0) {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (text.compare(pos, 2, "/*") == 0) {
        pos += 2;
        while (pos + 1 < text.size() && text.compare(pos, 2, "*/") != 0) ++pos;
        pos = std::min(pos + 2, text.size());
      } else {
        break;
      }
    }
  }

  bool eat(const std::string& tok) {
    skip_space();
    if (text.compare(pos, tok.size(), tok) == 0) {
      pos += tok.size();
      return true;
    }
    return false;
  }

  std::string ident() {
    skip_space();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return text.substr(start, pos - start);
  }
};

}  // namespace

Graph graph_from_dot(const std::string& text) {
  DotLexer lex{text};
  if (!lex.eat("digraph")) throw ValidationError("DOT: expected 'digraph'");
  lex.ident();  // optional graph name
  if (!lex.eat("{")) throw ValidationError("DOT: expected '{'");

  std::vector<std::string> names;
  std::unordered_map<std::string, VertexId> ids;
  auto intern = [&](const std::string& name) -> VertexId {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    VertexId v = static_cast<VertexId>(names.size());
    names.push_back(name);
    ids.emplace(name, v);
    return v;
  };

  std::vector<std::pair<VertexId, VertexId>> edges;
  while (true) {
    if (lex.eat("}")) break;
    std::string a = lex.ident();
    if (a.empty()) throw ValidationError("DOT: expected node id or '}'");
    VertexId u = intern(a);
    // A statement is either a lone node or a chain a -> b -> c.
    while (lex.eat("->")) {
      std::string b = lex.ident();
      if (b.empty()) throw ValidationError("DOT: expected node id after '->'");
      VertexId v = intern(b);
      edges.emplace_back(u, v);
      u = v;
    }
    lex.eat(";");
  }

  Graph g(static_cast<VertexId>(names.size()));
  for (auto [u, v] : edges)
    if (!g.has_edge(u, v)) g.add_edge(u, v);  // DOT repeats are tolerated
  for (VertexId v = 0; v < names.size(); ++v)
    if (names[v] != std::to_string(v)) g.set_label(v, names[v]);
  return g;
}

Graph load_graph(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? graph_from_json(text) : graph_from_dot(text);
  }
  throw ValidationError("empty graph input");
}

}  // namespace pcsym

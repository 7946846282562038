#include "pcsym/icfg.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pcsym/graph_io.hpp"

namespace pcsym {

using nlohmann::json;

namespace {

const std::pair<NodeKind, const char*> kKindNames[] = {
    {NodeKind::kEntry, "entry"},        {NodeKind::kExit, "exit"},
    {NodeKind::kCall, "call"},          {NodeKind::kReturnSite, "return-site"},
    {NodeKind::kBranch, "branch"},      {NodeKind::kPlain, "plain"},
    {NodeKind::kVirtual, "virtual"},
};

std::string edge_str(const Edge& e) {
  std::ostringstream os;
  os << "(" << e.first << ", " << e.second << ")";
  return os.str();
}

}  // namespace

std::string to_string(NodeKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  throw ValidationError("unknown node kind value");
}

NodeKind node_kind_from_string(const std::string& text) {
  for (const auto& [kind, name] : kKindNames) {
    if (text == name) return kind;
  }
  throw ValidationError("unknown node kind name: " + text);
}

void check_icfg(const ICfg& icfg) {
  const VertexId n = icfg.vertex_count();
  if (icfg.kinds.size() != n) {
    throw ValidationError("icfg kinds list does not match the vertex count");
  }
  if (icfg.function_of.size() != n) {
    throw ValidationError("icfg function list does not match the vertex count");
  }

  const EdgeSet* sets[] = {&icfg.call_edges, &icfg.return_edges, &icfg.back_edges};
  const char* set_names[] = {"call", "return", "back"};
  for (int i = 0; i < 3; ++i) {
    for (const Edge& e : *sets[i]) {
      if (e.first >= n || e.second >= n || !icfg.graph.has_edge(e.first, e.second)) {
        throw ValidationError(std::string(set_names[i]) + " edge " + edge_str(e) +
                              " is not a graph edge");
      }
    }
    for (int j = i + 1; j < 3; ++j) {
      for (const Edge& e : *sets[i]) {
        if (sets[j]->count(e)) {
          throw ValidationError("edge " + edge_str(e) + " is tagged both " +
                                set_names[i] + " and " + set_names[j]);
        }
      }
    }
  }

  for (const Edge& e : icfg.back_edges) {
    if (icfg.function_of[e.first] != icfg.function_of[e.second]) {
      throw ValidationError("back edge " + edge_str(e) + " crosses functions");
    }
  }

  // Exactly one entry vertex per function that owns vertices.
  std::map<std::uint32_t, int> entries;
  for (VertexId v = 0; v < n; ++v) entries[icfg.function_of[v]] += icfg.kinds[v] == NodeKind::kEntry;
  for (const auto& [fn, count] : entries) {
    if (count != 1) {
      throw ValidationError("function " + std::to_string(fn) + " has " +
                            std::to_string(count) + " entry vertices, expected 1");
    }
  }

  for (const Edge& e : icfg.call_edges) {
    if (icfg.kinds[e.first] != NodeKind::kCall) {
      throw ValidationError("call edge " + edge_str(e) + " does not start at a call vertex");
    }
    if (icfg.kinds[e.second] != NodeKind::kEntry) {
      throw ValidationError("call edge " + edge_str(e) + " does not target a function entry");
    }
  }
  for (const Edge& e : icfg.return_edges) {
    if (icfg.kinds[e.first] != NodeKind::kExit && icfg.kinds[e.first] != NodeKind::kVirtual) {
      throw ValidationError("return edge " + edge_str(e) + " does not start at an exit vertex");
    }
    if (icfg.kinds[e.second] != NodeKind::kReturnSite) {
      throw ValidationError("return edge " + edge_str(e) + " does not target a return site");
    }
  }

  for (VertexId v = 0; v < n; ++v) {
    if (icfg.kinds[v] == NodeKind::kCall) {
      const auto& succ = icfg.graph.successors(v);
      if (succ.size() != 1 || !icfg.call_edges.count({v, succ[0]})) {
        throw ValidationError("call vertex " + std::to_string(v) +
                              " must have exactly one out-edge, a call edge");
      }
    }
    if (icfg.kinds[v] == NodeKind::kReturnSite) {
      for (VertexId u : icfg.graph.predecessors(v)) {
        if (!icfg.return_edges.count({u, v})) {
          throw ValidationError("return site " + std::to_string(v) +
                                " has a non-return in-edge from " + std::to_string(u));
        }
      }
    }
    if (icfg.kinds[v] == NodeKind::kExit) {
      for (VertexId w : icfg.graph.successors(v)) {
        if (!icfg.return_edges.count({v, w})) {
          throw ValidationError("exit vertex " + std::to_string(v) +
                                " has a non-return out-edge to " + std::to_string(w));
        }
      }
    }
  }

  // Call sites and return sites of each callee must pair up 1:1.
  for (std::uint32_t fn : function_ids(icfg)) {
    call_sites_of(icfg, fn);
  }
}

std::vector<std::uint32_t> function_ids(const ICfg& icfg) {
  std::vector<std::uint32_t> ids(icfg.function_of.begin(), icfg.function_of.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

VertexId function_entry(const ICfg& icfg, std::uint32_t function) {
  VertexId found = kNoVertex;
  for (VertexId v = 0; v < icfg.vertex_count(); ++v) {
    if (icfg.function_of[v] != function || icfg.kinds[v] != NodeKind::kEntry) continue;
    if (found != kNoVertex) {
      throw ValidationError("function " + std::to_string(function) + " has two entry vertices");
    }
    found = v;
  }
  if (found == kNoVertex) {
    throw ValidationError("function " + std::to_string(function) + " has no entry vertex");
  }
  return found;
}

std::vector<VertexId> function_exits(const ICfg& icfg, std::uint32_t function) {
  std::vector<VertexId> exits;
  for (VertexId v = 0; v < icfg.vertex_count(); ++v) {
    if (icfg.function_of[v] == function && icfg.kinds[v] == NodeKind::kExit) exits.push_back(v);
  }
  return exits;
}

std::vector<Edge> call_sites_of(const ICfg& icfg, std::uint32_t callee) {
  std::vector<VertexId> calls;
  std::set<VertexId> sites;
  for (const Edge& e : icfg.call_edges) {
    if (icfg.function_of[e.second] == callee) calls.push_back(e.first);
  }
  for (const Edge& e : icfg.return_edges) {
    if (icfg.function_of[e.first] == callee) sites.insert(e.second);
  }
  std::sort(calls.begin(), calls.end());
  if (calls.size() != sites.size()) {
    throw ValidationError("function " + std::to_string(callee) + " has " +
                          std::to_string(calls.size()) + " call sites but " +
                          std::to_string(sites.size()) + " return sites");
  }
  std::vector<Edge> out;
  auto it = sites.begin();
  for (VertexId c : calls) out.emplace_back(c, *it++);
  return out;
}

namespace {

EdgeSet edge_set_from_json(const json& j, const char* key, VertexId n) {
  EdgeSet out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw ValidationError(std::string("\"") + key + "\" must be an array");
  for (const auto& item : j[key]) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_unsigned() ||
        !item[1].is_number_unsigned()) {
      throw ValidationError(std::string("\"") + key + "\" entries must be [u, v] pairs");
    }
    VertexId u = item[0].get<VertexId>();
    VertexId v = item[1].get<VertexId>();
    if (u >= n || v >= n) {
      throw ValidationError(std::string("\"") + key + "\" references vertex out of range");
    }
    out.insert({u, v});
  }
  return out;
}

json edge_set_to_json(const EdgeSet& edges) {
  json out = json::array();
  for (const Edge& e : edges) out.push_back({e.first, e.second});
  return out;
}

}  // namespace

ICfg icfg_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad icfg JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("icfg JSON must be an object");

  ICfg icfg;
  icfg.graph = graph_from_json(text);
  const VertexId n = icfg.graph.vertex_count();

  if (!j.contains("kinds") || !j["kinds"].is_array() || j["kinds"].size() != n) {
    throw ValidationError("\"kinds\" must list one kind per vertex");
  }
  for (const auto& item : j["kinds"]) {
    if (!item.is_string()) throw ValidationError("\"kinds\" entries must be strings");
    icfg.kinds.push_back(node_kind_from_string(item.get<std::string>()));
  }

  if (!j.contains("functions") || !j["functions"].is_array() || j["functions"].size() != n) {
    throw ValidationError("\"functions\" must list one function id per vertex");
  }
  for (const auto& item : j["functions"]) {
    if (!item.is_number_unsigned()) throw ValidationError("\"functions\" entries must be ids");
    icfg.function_of.push_back(item.get<std::uint32_t>());
  }

  icfg.call_edges = edge_set_from_json(j, "call_edges", n);
  icfg.return_edges = edge_set_from_json(j, "return_edges", n);
  icfg.back_edges = edge_set_from_json(j, "back_edges", n);

  check_icfg(icfg);
  return icfg;
}

std::string icfg_to_json(const ICfg& icfg) {
  json j = json::parse(graph_to_json(icfg.graph));
  json kinds = json::array();
  for (NodeKind k : icfg.kinds) kinds.push_back(to_string(k));
  j["kinds"] = std::move(kinds);
  j["functions"] = icfg.function_of;
  j["call_edges"] = edge_set_to_json(icfg.call_edges);
  j["return_edges"] = edge_set_to_json(icfg.return_edges);
  if (!icfg.back_edges.empty()) j["back_edges"] = edge_set_to_json(icfg.back_edges);
  return j.dump(2) + "\n";
}

}  // namespace pcsym

#pragma once

#include <string>

#include "pcsym/graph.hpp"

namespace pcsym {

/// Graph JSON: {"vertices": N, "edges": [[u,v],...], "labels": {"0": "entry", ...}}.
/// "labels" is optional on input and omitted on output when empty.
Graph graph_from_json(const std::string& text);
std::string graph_to_json(const Graph& g);

/// GraphViz-DOT subset: `digraph name { a -> b; b -> c }` with bare
/// identifiers or integers as node ids. Ids are assigned densely in order of
/// first appearance; the original token is kept as the vertex label when it
/// is not the same decimal number.
Graph graph_from_dot(const std::string& text);

/// Dispatch on content: leading '{' means JSON, otherwise DOT.
Graph load_graph(const std::string& text);

}  // namespace pcsym

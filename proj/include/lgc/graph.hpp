#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lgc/core.hpp"

namespace lgc {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CyclicGraph : GraphError {
    std::vector<int> cycle;
    explicit CyclicGraph(std::vector<int> c)
        : GraphError("cyclic graph"), cycle(std::move(c)) {}
};
struct NodeOutOfRange : GraphError {
    NodeOutOfRange(int node, int n)
        : GraphError("node " + std::to_string(node) + " out of range [0," +
                     std::to_string(n) + ")") {}
};
struct SelfLoop : GraphError {
    explicit SelfLoop(int node)
        : GraphError("self-loop at node " + std::to_string(node)) {}
};

// Edge (i, j): agent j conditions its action on agent i's action.
struct DependencyGraph {
    int n = 0;
    std::set<std::pair<int, int>> edges;
};

struct AdjacencyMatrix {
    int n = 0;
    std::vector<std::vector<int>> m;  // m[i][j] == 1 iff edge i -> j

    static AdjacencyMatrix zero(int n) {
        AdjacencyMatrix a;
        a.n = n;
        a.m.assign(n, std::vector<int>(n, 0));
        return a;
    }
    friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;
};

namespace detail {
// DFS cycle finder; returns a witness cycle [v, ..., v] if one exists.
inline bool find_cycle(int u, const std::vector<std::vector<int>>& adj,
                       std::vector<int>& color, std::vector<int>& stack,
                       std::vector<int>& cycle) {
    color[u] = 1;
    stack.push_back(u);
    for (int v = 0; v < static_cast<int>(adj.size()); ++v) {
        if (!adj[u][v]) continue;
        if (color[v] == 1) {
            auto it = std::find(stack.begin(), stack.end(), v);
            cycle.assign(it, stack.end());
            cycle.push_back(v);
            return true;
        }
        if (color[v] == 0 && find_cycle(v, adj, color, stack, cycle)) return true;
    }
    stack.pop_back();
    color[u] = 2;
    return false;
}
}  // namespace detail

inline DependencyGraph validate_dag(int n, const std::set<std::pair<int, int>>& edges) {
    for (auto [i, j] : edges) {
        if (i < 0 || i >= n) throw NodeOutOfRange(i, n);
        if (j < 0 || j >= n) throw NodeOutOfRange(j, n);
        if (i == j) throw SelfLoop(i);
    }
    std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
    for (auto [i, j] : edges) adj[i][j] = 1;
    std::vector<int> color(n, 0), stack, cycle;
    for (int u = 0; u < n; ++u) {
        if (color[u] == 0 && detail::find_cycle(u, adj, color, stack, cycle))
            throw CyclicGraph(cycle);
    }
    return DependencyGraph{n, edges};
}

inline AdjacencyMatrix to_adjacency(const DependencyGraph& g) {
    AdjacencyMatrix a = AdjacencyMatrix::zero(g.n);
    for (auto [i, j] : g.edges) a.m[i][j] = 1;
    return a;
}

// Parents precede children; incomparable agents ordered by ascending index.
inline std::vector<AgentId> topo_order(const AdjacencyMatrix& m) {
    const int n = m.n;
    std::vector<int> indeg(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) indeg[j] += m.m[i][j];
    std::vector<AgentId> order;
    std::vector<bool> emitted(n, false);
    order.reserve(n);
    while (static_cast<int>(order.size()) < n) {
        int pick = -1;
        for (int i = 0; i < n; ++i) {
            if (!emitted[i] && indeg[i] == 0) { pick = i; break; }
        }
        if (pick < 0) throw CyclicGraph({});  // unreachable for validated input
        emitted[pick] = true;
        order.push_back(pick);
        for (int j = 0; j < n; ++j) indeg[j] -= m.m[pick][j];
    }
    return order;
}

inline std::set<AgentId> parents(const AdjacencyMatrix& m, AgentId i) {
    std::set<AgentId> out;
    for (int j = 0; j < m.n; ++j)
        if (m.m[j][i]) out.insert(j);
    return out;
}

// Parses "i->j" edge lines (blank lines and an optional "GRAPH:" header
// are skipped). Throws GraphError on anything else.
inline std::set<std::pair<int, int>> parse_edge_list(const std::string& text) {
    std::set<std::pair<int, int>> edges;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
        ++lineno;
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line == "GRAPH:" || line == "(none)") continue;
        int i, j;
        char extra;
        if (std::sscanf(line.c_str(), "%d->%d %c", &i, &j, &extra) == 2 ||
            std::sscanf(line.c_str(), "%d -> %d %c", &i, &j, &extra) == 2) {
            edges.emplace(i, j);
        } else {
            throw GraphError("bad edge line " + std::to_string(lineno) + ": " + line);
        }
    }
    return edges;
}

inline std::string edge_list_to_text(const DependencyGraph& g) {
    std::string out;
    for (auto [i, j] : g.edges)
        out += std::to_string(i) + "->" + std::to_string(j) + "\n";
    if (out.empty()) out = "(none)\n";
    return out;
}

}  // namespace lgc

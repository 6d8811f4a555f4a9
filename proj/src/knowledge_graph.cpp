/*
 * Copyright 2026 The xmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "xmpc/knowledge_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <stdexcept>

namespace xmpc {

const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::State: return "state";
        case NodeRole::Input: return "input";
        case NodeRole::Disturbance: return "disturbance";
    }
    return "unknown";
}

const char* to_string(EdgeSign s) {
    switch (s) {
        case EdgeSign::Positive: return "+";
        case EdgeSign::Negative: return "-";
        case EdgeSign::Conditional: return "conditional";
    }
    return "?";
}

const char* to_string(ChainSign s) {
    switch (s) {
        case ChainSign::Positive: return "+";
        case ChainSign::Negative: return "-";
        case ChainSign::Indeterminate: return "indeterminate";
    }
    return "?";
}

SignedKnowledgeGraph::SignedKnowledgeGraph(std::vector<KgNode> nodes,
                                           std::vector<KgEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    std::set<std::string> names;
    for (const auto& n : nodes_) {
        if (n.name.empty())
            throw std::invalid_argument("knowledge graph: empty node name");
        if (!names.insert(n.name).second)
            throw std::invalid_argument("knowledge graph: duplicate node \"" +
                                        n.name + "\"");
    }
    for (const auto& e : edges_) {
        if (e.src == e.dst)
            throw std::invalid_argument("knowledge graph: self-loop on \"" +
                                        e.src + "\"");
        if (!names.count(e.src))
            throw std::invalid_argument(
                "knowledge graph: dangling endpoint \"" + e.src + "\"");
        if (!names.count(e.dst))
            throw std::invalid_argument(
                "knowledge graph: dangling endpoint \"" + e.dst + "\"");
        if (e.sign == EdgeSign::Conditional && e.condition.empty())
            throw std::invalid_argument(
                "knowledge graph: conditional edge " + e.src + "->" + e.dst +
                " without condition");
    }
    // Canonical ordering makes traversal output independent of how the
    // document listed nodes and edges.
    std::sort(nodes_.begin(), nodes_.end(),
              [](const KgNode& a, const KgNode& b) { return a.name < b.name; });
    std::sort(edges_.begin(), edges_.end(), [](const KgEdge& a, const KgEdge& b) {
        if (a.src != b.src) return a.src < b.src;
        if (a.dst != b.dst) return a.dst < b.dst;
        return a.condition < b.condition;
    });
}

bool SignedKnowledgeGraph::has_node(const std::string& name) const {
    return role(name).has_value();
}

std::optional<NodeRole> SignedKnowledgeGraph::role(const std::string& name) const {
    for (const auto& n : nodes_)
        if (n.name == name) return n.role;
    return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

// Conditions are comparisons "A < B" over variable names or literals.
std::optional<bool> evaluate_condition(const std::string& cond,
                                       const ConditionContext* ctx) {
    if (!ctx) return std::nullopt;
    size_t pos = cond.find_first_of("<>");
    if (pos == std::string::npos) return std::nullopt;
    bool less = cond[pos] == '<';
    size_t rhs_start = pos + 1;
    if (rhs_start < cond.size() && cond[rhs_start] == '=') ++rhs_start;
    auto resolve = [&](const std::string& tok) -> std::optional<double> {
        auto it = ctx->find(tok);
        if (it != ctx->end()) return it->second;
        try {
            size_t used = 0;
            double v = std::stod(tok, &used);
            if (used == tok.size()) return v;
        } catch (...) {
        }
        return std::nullopt;
    };
    auto lhs = resolve(trim(cond.substr(0, pos)));
    auto rhs = resolve(trim(cond.substr(rhs_start)));
    if (!lhs || !rhs) return std::nullopt;
    return less ? (*lhs < *rhs) : (*lhs > *rhs);
}

// Effective sign of one edge under the query context. A conditional edge
// carries its declared sign only inside the stated regime; outside it (or
// without a resolvable context) the influence is indeterminate.
std::optional<bool> edge_negative(const KgEdge& e, const ConditionContext* ctx) {
    if (e.sign == EdgeSign::Positive) return false;
    if (e.sign == EdgeSign::Negative) return true;
    auto holds = evaluate_condition(e.condition, ctx);
    if (!holds || !*holds) return std::nullopt;
    return e.negative_when_true;
}

ChainSign combine(ChainSign a, ChainSign b) {
    if (a == ChainSign::Indeterminate || b == ChainSign::Indeterminate)
        return ChainSign::Indeterminate;
    return a == b ? ChainSign::Positive : ChainSign::Negative;
}

struct Dfs {
    const SignedKnowledgeGraph& g;
    const ConditionContext* ctx;
    int max_depth;
    std::vector<CausalChain> out;
    std::vector<std::string> path;
    std::vector<KgEdge> edges;
    std::set<std::string> visited;

    void emit() {
        CausalChain chain;
        chain.path = path;
        chain.edge_refs = edges;
        ChainSign sign = ChainSign::Positive;
        for (const auto& e : edges) {
            auto neg = edge_negative(e, ctx);
            if (!neg) {
                sign = ChainSign::Indeterminate;
                break;
            }
            sign = combine(sign, *neg ? ChainSign::Negative : ChainSign::Positive);
        }
        chain.composite_sign = sign;
        out.push_back(std::move(chain));
    }

    void run(const std::string& node, const std::function<bool(const std::string&)>& is_goal) {
        if (static_cast<int>(edges.size()) >= max_depth) return;
        for (const auto& e : g.edges()) {
            if (e.src != node || visited.count(e.dst)) continue;
            path.push_back(e.dst);
            edges.push_back(e);
            visited.insert(e.dst);
            if (is_goal(e.dst)) emit();
            run(e.dst, is_goal);
            visited.erase(e.dst);
            edges.pop_back();
            path.pop_back();
        }
    }
};

void sort_chains(std::vector<CausalChain>& chains) {
    std::sort(chains.begin(), chains.end(),
              [](const CausalChain& a, const CausalChain& b) {
                  return a.path < b.path;
              });
}

}  // namespace

std::vector<CausalChain> forward_trace(const SignedKnowledgeGraph& g,
                                       const std::vector<std::string>& sources,
                                       int max_depth,
                                       const ConditionContext* ctx) {
    std::vector<CausalChain> all;
    for (const auto& s : sources) {
        if (!g.has_node(s))
            throw std::invalid_argument("forward_trace: unknown source \"" + s +
                                        "\"");
        Dfs dfs{g, ctx, max_depth};
        dfs.path = {s};
        dfs.visited = {s};
        dfs.run(s, [&](const std::string& n) {
            return g.role(n) == NodeRole::State;
        });
        all.insert(all.end(), dfs.out.begin(), dfs.out.end());
    }
    sort_chains(all);
    return all;
}

std::vector<CausalChain> backward_trace(const SignedKnowledgeGraph& g,
                                        const std::string& target, int max_depth,
                                        const ConditionContext* ctx) {
    if (!g.has_node(target))
        throw std::invalid_argument("backward_trace: unknown target \"" + target +
                                    "\"");
    std::vector<CausalChain> all;
    for (const auto& n : g.nodes()) {
        if (n.name == target) continue;
        if (n.role != NodeRole::Disturbance && n.role != NodeRole::Input) continue;
        Dfs dfs{g, ctx, max_depth};
        dfs.path = {n.name};
        dfs.visited = {n.name};
        dfs.run(n.name, [&](const std::string& m) { return m == target; });
        // Keep only paths actually ending at the target (run() also emits
        // nothing else because the goal test is the target).
        all.insert(all.end(), dfs.out.begin(), dfs.out.end());
    }
    sort_chains(all);
    return all;
}

CausalChain concat_chains(const CausalChain& a, const CausalChain& b) {
    if (a.path.empty() || b.path.empty() || a.path.back() != b.path.front())
        throw std::invalid_argument("concat_chains: endpoints do not match");
    CausalChain out;
    out.path = a.path;
    out.path.insert(out.path.end(), b.path.begin() + 1, b.path.end());
    out.edge_refs = a.edge_refs;
    out.edge_refs.insert(out.edge_refs.end(), b.edge_refs.begin(),
                         b.edge_refs.end());
    out.composite_sign = combine(a.composite_sign, b.composite_sign);
    return out;
}

SignedKnowledgeGraph perturb(const SignedKnowledgeGraph& g, PerturbOp op,
                             double p, unsigned seed) {
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("perturb: p must lie in [0,1]");
    std::vector<KgEdge> edges = g.edges();
    const size_t count =
        static_cast<size_t>(std::ceil(p * static_cast<double>(edges.size())));
    std::mt19937 rng(seed);

    if (op == PerturbOp::RemoveFraction) {
        std::vector<size_t> idx(edges.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        std::set<size_t> doomed(idx.begin(),
                                idx.begin() + std::min(count, idx.size()));
        std::vector<KgEdge> kept;
        for (size_t i = 0; i < edges.size(); ++i)
            if (!doomed.count(i)) kept.push_back(edges[i]);
        return SignedKnowledgeGraph(g.nodes(), std::move(kept));
    }

    // FlipFraction: negate signs of ceil(p*|E|) non-conditional edges.
    std::vector<size_t> eligible;
    for (size_t i = 0; i < edges.size(); ++i)
        if (edges[i].sign != EdgeSign::Conditional) eligible.push_back(i);
    std::shuffle(eligible.begin(), eligible.end(), rng);
    const size_t flips = std::min(count, eligible.size());
    for (size_t j = 0; j < flips; ++j) {
        KgEdge& e = edges[eligible[j]];
        e.sign = e.sign == EdgeSign::Positive ? EdgeSign::Negative
                                              : EdgeSign::Positive;
    }
    return SignedKnowledgeGraph(g.nodes(), std::move(edges));
}

}  // namespace xmpc

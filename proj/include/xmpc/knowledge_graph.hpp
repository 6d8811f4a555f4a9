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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xmpc {

enum class NodeRole { State, Input, Disturbance };
enum class EdgeSign { Positive, Negative, Conditional };
enum class ChainSign { Positive, Negative, Indeterminate };

const char* to_string(NodeRole r);
const char* to_string(EdgeSign s);
const char* to_string(ChainSign s);

struct KgNode {
    std::string name;
    NodeRole role = NodeRole::State;
};

/// Directed signed influence: an increase in src tends to increase (+) or
/// decrease (-) dst. Conditional edges carry a predicate description like
/// "H_out < Hm" that resolves against current variable values when known.
struct KgEdge {
    std::string src;
    std::string dst;
    EdgeSign sign = EdgeSign::Positive;
    std::string condition;       // non-empty iff sign == Conditional
    bool negative_when_true = true;  // effective sign when the condition holds
};

/// Signed directed physics graph over named variables. Immutable after
/// construction; traversals are read-only.
class SignedKnowledgeGraph {
public:
    SignedKnowledgeGraph() = default;
    /// Validates and canonicalizes (sorts nodes and edges); throws
    /// std::invalid_argument on self-loops, duplicate node names, dangling
    /// endpoints, or conditional edges without a condition.
    SignedKnowledgeGraph(std::vector<KgNode> nodes, std::vector<KgEdge> edges);

    const std::vector<KgNode>& nodes() const { return nodes_; }
    const std::vector<KgEdge>& edges() const { return edges_; }
    bool has_node(const std::string& name) const;
    std::optional<NodeRole> role(const std::string& name) const;

private:
    std::vector<KgNode> nodes_;
    std::vector<KgEdge> edges_;
};

/// A simple path through the graph with the product of its edge signs.
/// Any conditional edge that cannot be resolved makes the chain
/// indeterminate.
struct CausalChain {
    std::vector<std::string> path;  // node names, length >= 2
    ChainSign composite_sign = ChainSign::Indeterminate;
    std::vector<KgEdge> edge_refs;
};

/// Variable values a conditional edge may consult ("A < B" style
/// conditions over these names).
using ConditionContext = std::map<std::string, double>;

/// All simple paths from any source node to any state node, depth (edge
/// count) <= max_depth, ordered lexicographically by node sequence.
std::vector<CausalChain> forward_trace(const SignedKnowledgeGraph& g,
                                       const std::vector<std::string>& sources,
                                       int max_depth = 4,
                                       const ConditionContext* ctx = nullptr);

/// All simple paths ending at `target` that originate from a disturbance
/// or input node. Throws on an unknown target.
std::vector<CausalChain> backward_trace(const SignedKnowledgeGraph& g,
                                        const std::string& target,
                                        int max_depth = 4,
                                        const ConditionContext* ctx = nullptr);

/// Concatenate two chains sharing an endpoint; signs multiply.
CausalChain concat_chains(const CausalChain& a, const CausalChain& b);

enum class PerturbOp { RemoveFraction, FlipFraction };

/// Deterministic structural perturbation for robustness experiments:
/// remove deletes ceil(p*|E|) uniformly chosen edges; flip negates the
/// signs of ceil(p*|E|) non-conditional edges.
SignedKnowledgeGraph perturb(const SignedKnowledgeGraph& g, PerturbOp op,
                             double p, unsigned seed);

}  // namespace xmpc

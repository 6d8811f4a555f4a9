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

#include <optional>
#include <string>
#include <vector>

#include "xmpc/forensics.hpp"
#include "xmpc/knowledge_graph.hpp"
#include "xmpc/ocp.hpp"
#include "xmpc/solver.hpp"
#include "xmpc/temporal.hpp"

namespace xmpc {

/// Ordered candidate explanations; the first supported one is selected.
enum class HypothesisKind { Safety, Optimization, Prediction, Economics, History };

constexpr HypothesisKind kHypothesisOrder[] = {
    HypothesisKind::Safety, HypothesisKind::Optimization,
    HypothesisKind::Prediction, HypothesisKind::Economics,
    HypothesisKind::History};

const char* to_string(HypothesisKind h);

/// Fixed calibrated confidence values; selection additionally requires
/// confidence >= 0.5 as a guard against future recalibration.
double hypothesis_confidence(HypothesisKind h, bool hard_path);

enum class EvidenceSource { CurrentState, Kkt, Counterfactual, Forecast, Pcmci, Kg, Meta };

const char* to_string(EvidenceSource s);

struct TaggedStatement {
    std::string text;
    EvidenceSource tag = EvidenceSource::Meta;
};

struct PreventedViolation {
    ConstraintId id;
    int stage = 0;
    double value = 0.0;  // evaluator value on the neutral-input rollout
};

struct AlternativeScan {
    int total = 0;
    int infeasible = 0;
    double fraction() const { return total ? static_cast<double>(infeasible) / total : 0.0; }
};

struct EconomicsEvidence {
    double j_star = 0.0;
    double j_zero = 0.0;
    double saving_fraction = 0.0;
};

struct EvidenceBundle {
    std::optional<ActiveEntry> kkt_primary;
    std::vector<ActiveEntry> kkt_active;
    std::optional<CounterfactualResult> counterfactual;
    std::optional<PreventedViolation> prevented;
    std::optional<AlternativeScan> alternatives;
    std::optional<EconomicsEvidence> economics;
    std::vector<DeviationFlag> pcmci_flags;
    std::vector<CausalChain> kg_chains;
    std::vector<std::string> uncertainty_flags;
    std::vector<std::string> evidence_tags;  // "KKT", "CFT", "PRED", "ECON", "PCMCI"
};

struct ObservedEffect {
    std::string actuator;
    double delta = 0.0;  // u*_0 - neutral
    // Directly influenced variables with the chain sign and the implied
    // direction of the effect (+1 up, -1 down, 0 unresolved).
    struct Effect {
        std::string variable;
        ChainSign sign = ChainSign::Indeterminate;
        int direction = 0;
    };
    std::vector<Effect> effects;
};

struct ExplanationRecord {
    std::optional<HypothesisKind> selected;
    double confidence = 0.0;
    EvidenceBundle evidence;
    std::vector<CausalChain> supporting_context;
    std::vector<ObservedEffect> observed_effects;
    std::vector<TaggedStatement> statements;
    std::string narrative;
    std::string scenario_ref;
    bool degraded_mode = false;

    /// Ranked causal-factor labels (constraint ids, disturbance names,
    /// "economic_optimization") used by the evaluation harness.
    std::vector<std::string> predicted_factors;
};

/// Artifacts and toggles the abduction pipeline draws evidence from.
/// Null artifacts (and use_kkt = false) degrade gracefully: the affected
/// hypotheses are skipped with an uncertainty flag.
struct PipelineArtifacts {
    const SignedKnowledgeGraph* kg = nullptr;
    const LaggedCausalGraph* causal = nullptr;
    const LagBaseline* baselines = nullptr;
    ThresholdTable thresholds = ThresholdTable::with_family_defaults();
    CostThresholds costs;
    bool use_kkt = true;
    int kg_max_depth = 4;
};

struct HypothesisOutcome {
    EvidenceBundle evidence;
    double confidence = 0.0;
};

/// Test one hypothesis against the evidence sources at a single decision
/// instant. Returns nullopt when unsupported (or its evidence source is
/// unavailable, recorded in flags_sink when given).
std::optional<HypothesisOutcome> evaluate_hypothesis(
    HypothesisKind kind, const OcpSpec& spec, const DecisionContext& ctx,
    const OcpSolution& sol, const PipelineArtifacts& art, const SolverConfig& cfg,
    std::vector<std::string>* flags_sink = nullptr);

/// Ordered evaluation with first-supported selection, deeper-context
/// assembly (forward/backward graph traversal), observed-effects analysis,
/// factor ranking, and narrative rendering. Total over valid inputs; a run
/// with no supported hypothesis yields a fallback record.
ExplanationRecord generate_explanation(const OcpSpec& spec,
                                       const DecisionContext& ctx,
                                       const OcpSolution& sol,
                                       const PipelineArtifacts& art,
                                       const SolverConfig& cfg,
                                       const std::string& scenario_ref = "");

struct Narrative {
    std::string text;
    std::vector<TaggedStatement> statements;
};

/// Deterministic four-part template (byte-identical for identical
/// records); numbers carry four significant digits. Every statement is
/// tagged with its evidence source for the faithfulness metric.
Narrative render_narrative(const ExplanationRecord& record);

/// Four significant digits, used everywhere narrative numbers appear.
std::string format_number(double v);

}  // namespace xmpc

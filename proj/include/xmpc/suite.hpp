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

#include "xmpc/greenhouse.hpp"
#include "xmpc/hypothesis.hpp"
#include "xmpc/metrics.hpp"
#include "xmpc/temporal.hpp"

namespace xmpc {

/// One annotated decision instant. Scenarios are generated from a known
/// cause (a planted disturbance or binding constraint), so the ground
/// truth is exact by construction.
struct Scenario {
    std::string id;
    std::string domain;  // "greenhouse", "thermal", "reactor"
    GreenhouseParams params;  // greenhouse scenarios only
    TestbedKind testbed = TestbedKind::ThermalZone;
    int horizon = 16;
    DecisionContext ctx;
    GroundTruthAnnotation truth;
};

/// The synthetic greenhouse corpus (>= 20 scenarios across five cause
/// classes) or one of the hard-constrained testbed corpora (>= 10 each).
std::vector<Scenario> build_scenario_suite(const std::string& domain,
                                           unsigned seed);

/// Offline artifacts shared by a suite run: the domain knowledge graph,
/// a lagged causal graph discovered from synthetic operational history,
/// and the matching lag baselines.
struct SuiteArtifacts {
    SignedKnowledgeGraph kg;
    LaggedCausalGraph causal;
    LagBaseline baselines;
    bool has_causal = false;
};

/// Deterministic synthetic operational history for the greenhouse domain
/// (planted lagged actuator responses; one month at 15-minute sampling).
TimeSeriesTable synth_operation_history(int samples, unsigned seed);

SuiteArtifacts build_suite_artifacts(const std::string& domain, unsigned seed);

struct KgPerturbation {
    PerturbOp op = PerturbOp::RemoveFraction;
    double p = 0.0;
    unsigned seed = 0;
};

struct SuiteConfig {
    std::string domain = "greenhouse";
    unsigned seed = 0;
    bool drop_kg = false;
    bool drop_pcmci = false;
    bool drop_kkt = false;
    std::optional<KgPerturbation> kg_perturb;
    double threshold_scale = 1.0;
    std::string tag = "full";
};

enum class FailureCategory { None, MissingEvidence, ThresholdSensitivity, TemporalMismatch };

const char* to_string(FailureCategory c);

struct ScenarioResult {
    std::string id;
    std::string selected;  // hypothesis name or "none"
    double confidence = 0.0;
    bool degraded = false;
    RankingScores scores;
    double rouge = 0.0;
    double faith = 0.0;
    FailureCategory failure = FailureCategory::None;
    std::string error;  // nonempty if the scenario failed to execute
};

struct MetricReport {
    std::string tag;
    std::string domain;
    unsigned seed = 0;
    std::vector<ScenarioResult> rows;
    RankingScores aggregate;
    double rouge = 0.0;
    double faith = 0.0;
    int failures = 0;
};

/// Execute the full pipeline per scenario under the configuration and
/// aggregate the metrics. Per-scenario failures are recorded with a
/// failure-mode category and never abort the suite; fixed seeds make the
/// report reproducible byte for byte.
MetricReport run_suite(const SuiteConfig& config);

/// Build the OCP for one scenario (exposed for per-scenario tooling).
OcpSpec scenario_spec(const Scenario& sc);

/// Pipeline solver settings used by suite and CLI runs.
SolverConfig pipeline_solver_config();

}  // namespace xmpc

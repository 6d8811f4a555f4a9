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

#include "xmpc/ocp.hpp"
#include "xmpc/solver.hpp"

namespace xmpc {

/// Per-constraint (or per-family) multiplier thresholds. Lookup order:
/// exact constraint id, then the constraint's family, then the global
/// default. Family defaults follow the calibrated values for temperature
/// (1e-6), power (1e-7) and pressure (1e-8) systems.
struct ThresholdTable {
    enum class Provenance { Default, Calibrated };
    struct Entry {
        double tau = 1e-6;
        Provenance provenance = Provenance::Default;
    };
    std::map<std::string, Entry> by_id;
    std::map<std::string, Entry> by_family;
    double default_tau = 1e-6;
    double scale = 1.0;  // robustness experiments scale every threshold

    static ThresholdTable with_family_defaults();
    double lookup(const ConstraintDef& def) const;
    double lookup(const std::string& id, const std::string& family) const;
};

struct CostThresholds {
    double tau_cost = 0.006;   // violation-cost threshold
    double epsilon_j = 0.0006; // economic-significance threshold
};

struct ActiveEntry {
    ConstraintId id;
    int stage = 0;
    double lambda = 0.0;
};

/// Thresholded active set {(i,k) : lambda_ik > tau(i)} plus the entries
/// whose multiplier falls within +-20% of the threshold ("uncertain",
/// reported regardless of which side they fall on). Refuses non-optimal
/// solutions: stale multipliers must not drive explanations.
struct ActiveSet {
    std::vector<ActiveEntry> entries;
    std::vector<ActiveEntry> uncertain;
    bool empty() const { return entries.empty(); }
};

ActiveSet detect_active_set(const OcpSpec& spec, const OcpSolution& sol,
                            const ThresholdTable& thresholds);

/// Largest normalized multiplier lambda / tau; ties resolved toward the
/// earlier stage, then the lexicographically smaller id. Throws on an
/// empty set.
ActiveEntry primary_driver(const ActiveSet& active, const OcpSpec& spec,
                           const ThresholdTable& thresholds);

/// Soft constraints ordered by descending penalty-gradient norm at x;
/// zero-gradient ties keep declaration order.
std::vector<ConstraintId> rank_soft_constraints(const OcpSpec& spec, const Vec& x);

struct SoftIdentification {
    std::optional<ConstraintId> id;
    int resolves_used = 0;
    std::vector<std::string> warnings;
    OcpSolution relaxed;            // re-solve that exposed the violation
    double max_violation_cost = 0.0;
    int violation_stage = -1;
};

/// Ranked removal re-solves until one exposes a predicted violation of the
/// removed band (penalty above epsilon along the relaxed trajectory).
/// Failing re-solves are skipped with a warning.
SoftIdentification identify_soft_constraint(const OcpSpec& spec,
                                            const DecisionContext& ctx,
                                            const SolverConfig& cfg,
                                            double epsilon);

enum class CauseClass { ConstraintDriven, EconomicDriven, NotCausal };

const char* to_string(CauseClass c);

struct CounterfactualResult {
    ConstraintId constraint;
    bool u_changed = false;
    bool violation_found = false;
    std::optional<int> violation_stage;
    double delta_j = 0.0;  // J_relaxed - J_nominal (<= 0 for widenings)
    double violation_cost = 0.0;  // soft: max penalty along the relaxed path
    bool soft = false;
    CauseClass classification = CauseClass::NotCausal;
};

/// Classification rule: constraint-driven iff the optimizer changed and
/// the relaxed trajectory violates the constraint (for soft constraints
/// additionally the violation penalty exceeds tau_cost); economic-driven
/// iff no violation but delta-J < -epsilon_j; else not-causal.
CounterfactualResult classify(CounterfactualResult raw, const CostThresholds& costs);

/// Run the full counterfactual for one constraint: relax (remove) it on
/// all stages, re-solve, compare trajectories, classify.
CounterfactualResult run_counterfactual(const OcpSpec& spec,
                                        const DecisionContext& ctx,
                                        const OcpSolution& nominal,
                                        const ConstraintId& id,
                                        const SolverConfig& cfg,
                                        const CostThresholds& costs);

struct CalibrationReport {
    double threshold = 0.0;
    double calibration_accuracy = 0.0;  // on the calibration split
    double holdout_accuracy = 0.0;      // on the disjoint held-out split
    int calibration_samples = 0;
    int holdout_samples = 0;
};

/// ROC sweep over log-spaced candidate thresholds maximizing balanced
/// accuracy on a calibration split; accuracy is reported on a disjoint
/// held-out split (deterministic stratified interleave). Throws when only
/// one class is present.
CalibrationReport calibrate_kkt_thresholds(
    const std::vector<std::pair<double, bool>>& labeled_multipliers,
    double calibration_fraction = 0.125, double holdout_fraction = 0.125);

/// tau_cost = 5% of the mean stage cost; epsilon_j = 2% of the standard
/// deviation of counterfactual cost deltas (>= 100 trials). A degenerate
/// zero sigma falls back to the 1e-9 floor.
CostThresholds calibrate_cost_thresholds(const std::vector<double>& stage_costs,
                                         const std::vector<double>& cost_deltas);

}  // namespace xmpc

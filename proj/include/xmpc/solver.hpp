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

#include <functional>
#include <string>
#include <vector>

#include "xmpc/ocp.hpp"

namespace xmpc {

/// SQP settings. The KKT residual is scale-normalized:
///   max( |grad L|_inf / (1 + |grad f|_inf),  feasibility_inf,
///        |lambda_i g_i|_inf / (1 + |lambda|_inf) )
struct SolverConfig {
    int max_iterations = 200;
    double kkt_tolerance = 1e-8;
    double step_tolerance = 1e-10;
    double finite_difference_step = 1e-6;  // first-order FD (Jacobians, gradients)
    double hessian_fd_step = 1e-4;         // second-order FD (stage-cost Hessians)
    double regularization = 1e-8;          // initial Hessian shift, grows on demand

    /// Optional line-oriented trace sink; receives one line per iteration
    /// (iterate norm, KKT residual, active set).
    std::function<void(const std::string&)> trace;
};

/// Relax or remove one constraint, optionally on a subset of its stages.
struct RelaxationDirective {
    enum class Mode { Remove, ShiftBound };
    ConstraintId target;
    Mode mode = Mode::Remove;
    std::vector<int> stages;  // empty = all stages of the constraint
    double delta = 0.0;       // bound shift for ShiftBound
};

/// Solve the OCP by direct transcription (inputs and states both decision
/// variables, dynamics as equality constraints) with an SQP / dual
/// active-set method. Multipliers are populated for every hard constraint
/// at every stage in its range; inactive entries are exactly zero.
///
/// Throws std::invalid_argument when validate_spec is nonempty or the
/// context dimensions do not match.
OcpSolution solve(const OcpSpec& spec, const DecisionContext& ctx,
                  const SolverConfig& cfg = {});

/// Solve with the listed constraints relaxed. The input spec is never
/// mutated; bound shifts must widen the feasible set (a tightening
/// directive throws). Removing a soft constraint drops its penalty from
/// the cost.
OcpSolution resolve_relaxed(const OcpSpec& spec, const DecisionContext& ctx,
                            const std::vector<RelaxationDirective>& directives,
                            const SolverConfig& cfg = {});

/// Returns a copy of the spec with the directives applied (exposed for
/// counterfactual trajectory analysis).
OcpSpec apply_directives(const OcpSpec& spec,
                         const std::vector<RelaxationDirective>& directives,
                         bool enforce_widening = true);

struct SensitivityCheck {
    double lambda_reported = 0.0;   // sum of the constraint's stage multipliers
    double dj_dc_estimated = 0.0;   // central difference of J* over bound +-dc
    bool active = false;
};

/// Compare the reported multiplier against a finite-difference estimate of
/// dJ*/dc obtained by re-solving with the constraint's bound shifted by
/// +-dc on all of its stages. Requires the constraint to expose
/// make_evaluator. An inactive constraint returns (0, ~0) rather than
/// erroring.
SensitivityCheck multiplier_sensitivity_check(const OcpSpec& spec,
                                              const DecisionContext& ctx,
                                              const ConstraintId& id, double dc,
                                              const SolverConfig& cfg = {});

/// Total cost of a trajectory under the spec's stage/terminal costs
/// including soft penalties (the objective the solver minimizes).
double trajectory_cost(const OcpSpec& spec, const Mat& states, const Mat& inputs,
                       const Mat& disturbances);

}  // namespace xmpc

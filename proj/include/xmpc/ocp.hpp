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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace xmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ConstraintId = std::string;

enum class ConstraintKind {
    HardInequality,  // participates in the KKT multiplier vector
    SoftPenalty,     // cost term only; never carries a multiplier
};

/// One inequality constraint (hard) or penalty term (soft) of the problem.
///
/// Hard constraints are feasible iff evaluator(x, u, d) <= 0. Soft
/// constraints return their (nonnegative) penalty contribution to the
/// stage cost instead, and require a penalty gradient so they can be
/// ranked by local pressure.
struct ConstraintDef {
    ConstraintId id;
    ConstraintKind kind = ConstraintKind::HardInequality;

    /// Stage indices this constraint applies to. Path constraints live on
    /// 0..H-1; terminal constraints on stage H. Empty is invalid.
    std::vector<int> stages;

    /// g(x, u, d): <= 0 feasible for hard, penalty value for soft.
    std::function<double(const Vec&, const Vec&, const Vec&)> evaluator;

    /// The relaxable level c the constraint is written against.
    double bound = 0.0;

    /// Optional factory producing the evaluator for a shifted bound c'.
    /// Needed for bound-shift relaxations and multiplier sensitivity
    /// probes; when absent, bound shifts fall back to subtracting the
    /// shift from the evaluator value.
    std::function<std::function<double(const Vec&, const Vec&, const Vec&)>(double)>
        make_evaluator;

    /// Soft constraints only: gradient of the penalty w.r.t. the state.
    std::function<Vec(const Vec&)> penalty_gradient;

    /// Threshold family tag ("temperature", "power", "pressure", ...).
    std::string family;

    /// Name of the physical variable this constraint bounds, when it maps
    /// onto one (used for graph traversal and narratives).
    std::string variable;
};

/// Finite-horizon optimal control problem:
///
///   min  sum_k l(x_k, u_k) + l_T(x_H)
///   s.t. x_0 = x_meas,  x_{k+1} = f(x_k, u_k, d_k),
///        hard path/terminal constraints <= 0,  u in input bounds.
///
/// Soft-penalty constraints contribute their evaluator value to the stage
/// cost at every stage they cover; stage_cost itself excludes them.
struct OcpSpec {
    int horizon = 0;  // H >= 1
    int state_dim = 0;
    int input_dim = 0;
    int disturbance_dim = 0;
    double sampling_minutes = 15.0;

    std::function<Vec(const Vec&, const Vec&, const Vec&)> dynamics;
    std::function<double(const Vec&, const Vec&)> stage_cost;
    std::function<double(const Vec&)> terminal_cost;

    std::vector<ConstraintDef> path_constraints;      // stages within 0..H-1
    std::vector<ConstraintDef> terminal_constraints;  // stage H only

    Mat input_bounds;   // input_dim x 2, columns [lo, hi]
    Vec neutral_input;  // resting value per actuator; zeros if empty

    /// Variable names used by narratives, graphs and file formats.
    std::vector<std::string> state_names;
    std::vector<std::string> input_names;
    std::vector<std::string> disturbance_names;

    std::vector<const ConstraintDef*> all_constraints() const;
    const ConstraintDef* find_constraint(const ConstraintId& id) const;
    bool unconstrained() const {
        return path_constraints.empty() && terminal_constraints.empty();
    }
};

/// Everything known at one decision instant.
struct DecisionContext {
    Vec measured_state;
    Mat disturbance_forecast;  // H x disturbance_dim
    std::string timestamp;     // wall-clock tag, ISO-8601

    /// Optional recent disturbance observations, oldest first, newest =
    /// the sample just before `timestamp`. Required only by the lagged
    /// 2-sigma deviation checks; absent history disables that evidence.
    Mat disturbance_history;  // n_hist x disturbance_dim (may be 0 x 0)
};

enum class SolverStatus { Optimal, MaxIterations, Infeasible };

inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Optimal: return "optimal";
        case SolverStatus::MaxIterations: return "max-iter";
        case SolverStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

/// Primal trajectories plus per-constraint, per-stage KKT multipliers.
///
/// Multipliers exist for hard constraints only. Dual feasibility
/// (lambda >= 0) and complementarity |lambda * g| <= tol hold whenever
/// status == Optimal.
struct OcpSolution {
    Mat inputs;  // H x input_dim
    Mat states;  // (H+1) x state_dim
    std::map<std::pair<ConstraintId, int>, double> multipliers;
    double total_cost = 0.0;
    SolverStatus status = SolverStatus::MaxIterations;
    double kkt_residual = 0.0;
    int iterations = 0;

    double multiplier(const ConstraintId& id, int stage) const {
        auto it = multipliers.find({id, stage});
        return it == multipliers.end() ? 0.0 : it->second;
    }
    /// Sum of a constraint's multipliers over its stages: the sensitivity
    /// of J* to a uniform shift of that constraint's bound.
    double multiplier_sum(const ConstraintId& id) const;
};

struct Violation {
    std::string code;     // "duplicate-id", "missing-gradient", ...
    std::string message;  // human-readable detail
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Structural checks: dimensions, bounds ordering, unique constraint ids,
/// stage ranges, soft-penalty gradients. Empty report iff the spec is
/// usable by the solver.
ValidationReport validate_spec(const OcpSpec& spec);

/// Iterate the dynamics from x0 under the given inputs/disturbances.
/// Returns the (H+1) x state_dim trajectory. Deterministic; throws
/// std::invalid_argument on dimension mismatch.
Mat rollout(const OcpSpec& spec, const Vec& x0, const Mat& inputs,
            const Mat& disturbances);

}  // namespace xmpc

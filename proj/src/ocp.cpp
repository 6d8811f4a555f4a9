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

#include "xmpc/ocp.hpp"

#include <set>
#include <stdexcept>

namespace xmpc {

std::vector<const ConstraintDef*> OcpSpec::all_constraints() const {
    std::vector<const ConstraintDef*> out;
    out.reserve(path_constraints.size() + terminal_constraints.size());
    for (const auto& c : path_constraints) out.push_back(&c);
    for (const auto& c : terminal_constraints) out.push_back(&c);
    return out;
}

const ConstraintDef* OcpSpec::find_constraint(const ConstraintId& id) const {
    for (const auto* c : all_constraints())
        if (c->id == id) return c;
    return nullptr;
}

double OcpSolution::multiplier_sum(const ConstraintId& id) const {
    double s = 0.0;
    for (const auto& [key, lam] : multipliers)
        if (key.first == id) s += lam;
    return s;
}

ValidationReport validate_spec(const OcpSpec& spec) {
    ValidationReport report;
    auto add = [&](std::string code, std::string msg) {
        report.violations.push_back({std::move(code), std::move(msg)});
    };

    if (spec.horizon < 1) add("bad-horizon", "horizon must be >= 1");
    if (spec.state_dim < 1) add("bad-dimension", "state_dim must be positive");
    if (spec.input_dim < 1) add("bad-dimension", "input_dim must be positive");
    if (spec.disturbance_dim < 1)
        add("bad-dimension", "disturbance_dim must be positive");
    if (!(spec.sampling_minutes > 0.0))
        add("bad-sampling", "sampling_interval must be positive");
    if (!spec.dynamics) add("missing-handle", "dynamics handle not set");
    if (!spec.stage_cost) add("missing-handle", "stage_cost handle not set");
    if (!spec.terminal_cost) add("missing-handle", "terminal_cost handle not set");

    if (spec.input_bounds.rows() != spec.input_dim || spec.input_bounds.cols() != 2) {
        add("bad-dimension", "input_bounds must be input_dim x 2");
    } else {
        for (int i = 0; i < spec.input_dim; ++i)
            if (!(spec.input_bounds(i, 0) <= spec.input_bounds(i, 1)))
                add("bad-bounds", "input bound lo > hi at index " + std::to_string(i));
    }
    if (spec.neutral_input.size() != 0 && spec.neutral_input.size() != spec.input_dim)
        add("bad-dimension", "neutral_input length must equal input_dim");

    auto check_names = [&](const std::vector<std::string>& names, int dim,
                           const char* what) {
        if (!names.empty() && static_cast<int>(names.size()) != dim)
            add("bad-dimension", std::string(what) + " names do not match dimension");
    };
    check_names(spec.state_names, spec.state_dim, "state");
    check_names(spec.input_names, spec.input_dim, "input");
    check_names(spec.disturbance_names, spec.disturbance_dim, "disturbance");

    std::set<ConstraintId> seen;
    auto check_constraint = [&](const ConstraintDef& c, bool terminal) {
        if (c.id.empty()) add("empty-id", "constraint with empty id");
        if (!seen.insert(c.id).second)
            add("duplicate-id", "duplicate constraint id \"" + c.id + "\"");
        if (!c.evaluator)
            add("missing-handle", "constraint \"" + c.id + "\" has no evaluator");
        if (c.stages.empty())
            add("empty-stages", "constraint \"" + c.id + "\" covers no stages");
        for (int k : c.stages) {
            // Path constraints may cover any stage 0..H (stage H entries are
            // evaluated on the terminal state); the terminal list is H only.
            const bool in_range = terminal ? (k == spec.horizon)
                                           : (k >= 0 && k <= spec.horizon);
            if (!in_range) {
                add("bad-stage", "constraint \"" + c.id + "\" references stage " +
                                     std::to_string(k) + " outside its range");
                break;
            }
        }
        if (c.kind == ConstraintKind::SoftPenalty && !c.penalty_gradient)
            add("missing-gradient",
                "soft constraint \"" + c.id + "\" lacks penalty_gradient");
    };
    for (const auto& c : spec.path_constraints) check_constraint(c, false);
    for (const auto& c : spec.terminal_constraints) check_constraint(c, true);

    return report;
}

Mat rollout(const OcpSpec& spec, const Vec& x0, const Mat& inputs,
            const Mat& disturbances) {
    if (x0.size() != spec.state_dim)
        throw std::invalid_argument("rollout: x0 dimension mismatch");
    if (inputs.rows() != spec.horizon || inputs.cols() != spec.input_dim)
        throw std::invalid_argument("rollout: inputs must be H x input_dim");
    if (disturbances.rows() != spec.horizon ||
        disturbances.cols() != spec.disturbance_dim)
        throw std::invalid_argument("rollout: disturbances must be H x disturbance_dim");

    Mat traj(spec.horizon + 1, spec.state_dim);
    traj.row(0) = x0.transpose();
    Vec x = x0;
    for (int k = 0; k < spec.horizon; ++k) {
        x = spec.dynamics(x, inputs.row(k).transpose(), disturbances.row(k).transpose());
        if (x.size() != spec.state_dim)
            throw std::invalid_argument("rollout: dynamics returned wrong dimension");
        traj.row(k + 1) = x.transpose();
    }
    return traj;
}

}  // namespace xmpc

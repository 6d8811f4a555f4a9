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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "oracle.hpp"
#include "xmpc/solver.hpp"

using namespace xmpc;
using xmpc::testing::qp_as_ocp;
using xmpc::testing::random_regular_qp;
using xmpc::testing::unit_context;

namespace {

// min (u - 1)^2 over one step, no constraints.
OcpSpec unconstrained_scalar() {
    OcpSpec spec;
    spec.horizon = 1;
    spec.state_dim = 1;
    spec.input_dim = 1;
    spec.disturbance_dim = 1;
    spec.dynamics = [](const Vec& x, const Vec&, const Vec&) { return x; };
    spec.stage_cost = [](const Vec&, const Vec& u) {
        return (u(0) - 1.0) * (u(0) - 1.0);
    };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(1, 2);
    spec.input_bounds << -100.0, 100.0;
    return spec;
}

// min u^2 s.t. c - u <= 0 (u >= c), default c = 0.5.
OcpSpec bounded_scalar(double c = 0.5) {
    OcpSpec spec = unconstrained_scalar();
    spec.stage_cost = [](const Vec&, const Vec& u) { return u(0) * u(0); };
    ConstraintDef def;
    def.id = "u_floor";
    def.kind = ConstraintKind::HardInequality;
    def.stages = {0};
    def.bound = c;
    def.make_evaluator = [](double bb) {
        return [bb](const Vec&, const Vec& u, const Vec&) { return bb - u(0); };
    };
    def.evaluator = def.make_evaluator(c);
    def.family = "qp";
    spec.path_constraints.push_back(def);
    return spec;
}

}  // namespace

TEST_CASE("unconstrained scalar problem reaches stationarity") {
    OcpSpec spec = unconstrained_scalar();
    auto sol = solve(spec, unit_context(spec));
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.inputs(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.total_cost == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(sol.multipliers.empty());
}

TEST_CASE("binding scalar constraint yields lambda = 1") {
    OcpSpec spec = bounded_scalar();
    auto sol = solve(spec, unit_context(spec));
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.inputs(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(sol.multiplier("u_floor", 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.total_cost == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("random convex QP matches enumeration oracle active set") {
    int checked = 0;
    for (unsigned seed = 200; seed < 230; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 5, 5);
        OcpSpec spec = qp_as_ocp(d);
        auto sol = solve(spec, unit_context(spec));
        REQUIRE(sol.status == SolverStatus::Optimal);
        for (int i = 0; i < d.A.rows(); ++i) {
            const bool oracle_active = oracle.binding.count(i) > 0;
            const bool solver_active =
                sol.multiplier("qp_" + std::to_string(i), 0) > 1e-8;
            CHECK(oracle_active == solver_active);
        }
        CHECK((sol.inputs.row(0).transpose() - oracle.u).norm() < 1e-6);
        ++checked;
    }
    CHECK(checked == 30);
}

TEST_CASE("solution invariants: dual feasibility and complementarity") {
    xmpc::testing::OracleSolution oracle;
    auto d = random_regular_qp(42, &oracle);
    OcpSpec spec = qp_as_ocp(d);
    auto sol = solve(spec, unit_context(spec));
    REQUIRE(sol.status == SolverStatus::Optimal);
    for (const auto& [key, lam] : sol.multipliers) {
        CHECK(lam >= 0.0);
        const ConstraintDef* def = spec.find_constraint(key.first);
        double g = def->evaluator(Vec::Zero(1), sol.inputs.row(0).transpose(),
                                  Vec::Zero(1));
        CHECK(std::abs(lam * g) < 1e-6);
    }
}

TEST_CASE("removing the binding constraint frees the optimum") {
    OcpSpec spec = bounded_scalar();
    DecisionContext ctx = unit_context(spec);
    RelaxationDirective dir;
    dir.target = "u_floor";
    dir.mode = RelaxationDirective::Mode::Remove;
    auto sol = resolve_relaxed(spec, ctx, {dir});
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.inputs(0, 0) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(sol.total_cost == doctest::Approx(0.0).epsilon(1e-10));
    // The original spec still carries its constraint.
    CHECK(spec.path_constraints.size() == 1);
}

TEST_CASE("relaxing an inactive constraint leaves the optimum unchanged") {
    for (unsigned seed = 300; seed < 310; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 5, 5);
        OcpSpec spec = qp_as_ocp(d);
        DecisionContext ctx = unit_context(spec);
        auto nominal = solve(spec, ctx);
        REQUIRE(nominal.status == SolverStatus::Optimal);
        for (int i = 0; i < d.A.rows(); ++i) {
            if (oracle.binding.count(i)) continue;
            RelaxationDirective dir;
            dir.target = "qp_" + std::to_string(i);
            dir.mode = RelaxationDirective::Mode::Remove;
            auto relaxed = resolve_relaxed(spec, ctx, {dir});
            REQUIRE(relaxed.status == SolverStatus::Optimal);
            CHECK((relaxed.inputs - nominal.inputs).cwiseAbs().maxCoeff() <
                  10 * SolverConfig{}.step_tolerance);
        }
    }
}

TEST_CASE("removing an active constraint never increases the cost") {
    for (unsigned seed = 400; seed < 410; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 5, 5);
        OcpSpec spec = qp_as_ocp(d);
        DecisionContext ctx = unit_context(spec);
        auto nominal = solve(spec, ctx);
        for (int i : oracle.binding) {
            RelaxationDirective dir;
            dir.target = "qp_" + std::to_string(i);
            dir.mode = RelaxationDirective::Mode::Remove;
            auto relaxed = resolve_relaxed(spec, ctx, {dir});
            REQUIRE(relaxed.status == SolverStatus::Optimal);
            CHECK(relaxed.total_cost <= nominal.total_cost + 1e-9);
        }
    }
}

TEST_CASE("tightening bound-shift directives are rejected") {
    OcpSpec spec = bounded_scalar();
    DecisionContext ctx = unit_context(spec);
    RelaxationDirective dir;
    dir.target = "u_floor";
    dir.mode = RelaxationDirective::Mode::ShiftBound;
    dir.delta = +0.1;  // raises the floor: tightens
    CHECK_THROWS_AS(resolve_relaxed(spec, ctx, {dir}), std::invalid_argument);
    dir.delta = -0.1;  // lowers the floor: widens
    auto sol = resolve_relaxed(spec, ctx, {dir});
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.inputs(0, 0) == doctest::Approx(0.4).epsilon(1e-7));
}

TEST_CASE("solver is deterministic bitwise") {
    xmpc::testing::OracleSolution oracle;
    auto d = random_regular_qp(77, &oracle);
    OcpSpec spec = qp_as_ocp(d);
    DecisionContext ctx = unit_context(spec);
    auto a = solve(spec, ctx);
    auto b = solve(spec, ctx);
    CHECK(std::memcmp(a.inputs.data(), b.inputs.data(),
                      sizeof(double) * a.inputs.size()) == 0);
    CHECK(std::memcmp(a.states.data(), b.states.data(),
                      sizeof(double) * a.states.size()) == 0);
    CHECK(a.total_cost == b.total_cost);
}

TEST_CASE("sensitivity check: lambda matches dJ/dc on the scalar problem") {
    OcpSpec spec = bounded_scalar(0.5);
    DecisionContext ctx = unit_context(spec);
    auto s = multiplier_sensitivity_check(spec, ctx, "u_floor", 1e-4);
    CHECK(s.active);
    CHECK(s.lambda_reported == doctest::Approx(1.0).epsilon(1e-6));
    // J*(c) = c^2 -> dJ/dc = 2c = 1.
    CHECK(s.dj_dc_estimated == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("sensitivity check: inactive constraint reports (0, ~0)") {
    OcpSpec spec = bounded_scalar(-5.0);  // floor far below the optimum at 0
    DecisionContext ctx = unit_context(spec);
    auto s = multiplier_sensitivity_check(spec, ctx, "u_floor", 1e-4);
    CHECK_FALSE(s.active);
    CHECK(s.lambda_reported == doctest::Approx(0.0));
    CHECK(std::abs(s.dj_dc_estimated) < 1e-8);
}

TEST_CASE("sensitivity check agrees on random QP actives") {
    int tested = 0;
    for (unsigned seed = 500; seed < 512 && tested < 8; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 5, 4);
        if (oracle.binding.empty()) continue;
        OcpSpec spec = qp_as_ocp(d);
        DecisionContext ctx = unit_context(spec);
        int i = *oracle.binding.begin();
        auto s = multiplier_sensitivity_check(spec, ctx,
                                              "qp_" + std::to_string(i), 1e-4);
        CHECK(s.active);
        double rel = std::abs(s.lambda_reported - s.dj_dc_estimated) /
                     std::max(1.0, std::abs(s.lambda_reported));
        CHECK(rel < 1e-2);
        ++tested;
    }
    CHECK(tested >= 5);
}

TEST_CASE("returned states obey the dynamics recursion") {
    xmpc::testing::OracleSolution oracle;
    auto d = random_regular_qp(55, &oracle);
    OcpSpec spec = qp_as_ocp(d);
    DecisionContext ctx = unit_context(spec);
    auto sol = solve(spec, ctx);
    REQUIRE(sol.status == SolverStatus::Optimal);
    Mat replay = rollout(spec, ctx.measured_state, sol.inputs,
                         ctx.disturbance_forecast);
    CHECK((replay - sol.states).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("the trace sink receives one line per iteration") {
    OcpSpec spec = bounded_scalar();
    DecisionContext ctx = unit_context(spec);
    SolverConfig cfg;
    std::vector<std::string> lines;
    cfg.trace = [&](const std::string& line) { lines.push_back(line); };
    auto sol = solve(spec, ctx, cfg);
    REQUIRE(sol.status == SolverStatus::Optimal);
    REQUIRE_FALSE(lines.empty());
    CHECK(lines.front().find("kkt=") != std::string::npos);
    CHECK(lines.back().find("active=[u_floor@0]") != std::string::npos);
}

TEST_CASE("infeasible hard constraints are reported") {
    OcpSpec spec = bounded_scalar(0.5);
    // Add u <= -1, contradicting u >= 0.5.
    ConstraintDef def;
    def.id = "u_ceiling";
    def.kind = ConstraintKind::HardInequality;
    def.stages = {0};
    def.bound = -1.0;
    def.evaluator = [](const Vec&, const Vec& u, const Vec&) {
        return u(0) + 1.0;
    };
    spec.path_constraints.push_back(def);
    auto sol = solve(spec, unit_context(spec));
    CHECK(sol.status == SolverStatus::Infeasible);
}

TEST_CASE("per-stage relaxation only affects the selected stages") {
    // Two-step problem with a floor on u at both stages; removing only
    // stage 1 keeps the stage-0 constraint binding.
    OcpSpec spec;
    spec.horizon = 2;
    spec.state_dim = 1;
    spec.input_dim = 1;
    spec.disturbance_dim = 1;
    spec.dynamics = [](const Vec& x, const Vec&, const Vec&) { return x; };
    spec.stage_cost = [](const Vec&, const Vec& u) { return u(0) * u(0); };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(1, 2);
    spec.input_bounds << -10.0, 10.0;
    ConstraintDef def;
    def.id = "floor";
    def.kind = ConstraintKind::HardInequality;
    def.stages = {0, 1};
    def.bound = 0.5;
    def.make_evaluator = [](double bb) {
        return [bb](const Vec&, const Vec& u, const Vec&) { return bb - u(0); };
    };
    def.evaluator = def.make_evaluator(0.5);
    spec.path_constraints.push_back(def);

    DecisionContext ctx = unit_context(spec);
    auto nominal = solve(spec, ctx);
    REQUIRE(nominal.status == SolverStatus::Optimal);
    CHECK(nominal.inputs(1, 0) == doctest::Approx(0.5).epsilon(1e-7));

    RelaxationDirective dir;
    dir.target = "floor";
    dir.mode = RelaxationDirective::Mode::Remove;
    dir.stages = {1};
    auto relaxed = resolve_relaxed(spec, ctx, {dir});
    REQUIRE(relaxed.status == SolverStatus::Optimal);
    CHECK(relaxed.inputs(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(relaxed.inputs(1, 0) == doctest::Approx(0.0).epsilon(1e-7));
}

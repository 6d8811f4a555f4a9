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

#include "xmpc/ocp.hpp"

using namespace xmpc;

namespace {

OcpSpec scalar_integrator(int horizon) {
    OcpSpec spec;
    spec.horizon = horizon;
    spec.state_dim = 1;
    spec.input_dim = 1;
    spec.disturbance_dim = 1;
    spec.dynamics = [](const Vec& x, const Vec& u, const Vec&) {
        Vec next(1);
        next(0) = x(0) + u(0);
        return next;
    };
    spec.stage_cost = [](const Vec&, const Vec& u) { return u.squaredNorm(); };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(1, 2);
    spec.input_bounds << -10.0, 10.0;
    return spec;
}

ConstraintDef hard_constraint(const std::string& id, int stage) {
    ConstraintDef def;
    def.id = id;
    def.kind = ConstraintKind::HardInequality;
    def.stages = {stage};
    def.evaluator = [](const Vec& x, const Vec&, const Vec&) { return x(0) - 1.0; };
    return def;
}

}  // namespace

TEST_CASE("validate_spec accepts a well-formed spec") {
    OcpSpec spec = scalar_integrator(3);
    spec.path_constraints.push_back(hard_constraint("x_upper", 1));
    CHECK(validate_spec(spec).ok());
}

TEST_CASE("validate_spec flags duplicate constraint ids") {
    OcpSpec spec = scalar_integrator(3);
    spec.path_constraints.push_back(hard_constraint("T_min", 0));
    spec.path_constraints.push_back(hard_constraint("T_min", 1));
    auto report = validate_spec(spec);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "duplicate-id");
    CHECK(report.violations[0].message.find("T_min") != std::string::npos);
}

TEST_CASE("validate_spec flags a soft constraint without gradient") {
    OcpSpec spec = scalar_integrator(3);
    ConstraintDef soft;
    soft.id = "comfort";
    soft.kind = ConstraintKind::SoftPenalty;
    soft.stages = {0, 1, 2};
    soft.evaluator = [](const Vec&, const Vec&, const Vec&) { return 0.0; };
    spec.path_constraints.push_back(soft);
    auto report = validate_spec(spec);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "missing-gradient");
}

TEST_CASE("validate_spec flags reversed input bounds and bad stages") {
    OcpSpec spec = scalar_integrator(2);
    spec.input_bounds << 1.0, -1.0;
    spec.path_constraints.push_back(hard_constraint("late", 5));
    auto report = validate_spec(spec);
    CHECK(report.violations.size() == 2);
}

TEST_CASE("rollout of x+ = x + u with unit input") {
    OcpSpec spec = scalar_integrator(3);
    Mat inputs = Mat::Ones(3, 1);
    Mat dist = Mat::Zero(3, 1);
    Vec x0 = Vec::Zero(1);
    Mat traj = rollout(spec, x0, inputs, dist);
    REQUIRE(traj.rows() == 4);
    CHECK(traj(0, 0) == doctest::Approx(0.0));
    CHECK(traj(1, 0) == doctest::Approx(1.0));
    CHECK(traj(2, 0) == doctest::Approx(2.0));
    CHECK(traj(3, 0) == doctest::Approx(3.0));
}

TEST_CASE("zero-input rollout of a stable system matches matrix powers") {
    // x+ = A x with spectral radius < 1; independent oracle: A^k x0.
    Mat A(2, 2);
    A << 0.8, 0.1, -0.05, 0.7;
    OcpSpec spec;
    spec.horizon = 12;
    spec.state_dim = 2;
    spec.input_dim = 1;
    spec.disturbance_dim = 1;
    spec.dynamics = [A](const Vec& x, const Vec& u, const Vec&) {
        return Vec(A * x + Vec::Constant(2, u(0) * 0.0));
    };
    spec.stage_cost = [](const Vec&, const Vec&) { return 0.0; };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(1, 2);
    spec.input_bounds << -1.0, 1.0;

    Vec x0(2);
    x0 << 3.0, -2.0;
    Mat traj = rollout(spec, x0, Mat::Zero(12, 1), Mat::Zero(12, 1));

    Mat Ak = Mat::Identity(2, 2);
    for (int k = 0; k <= 12; ++k) {
        Vec expect = Ak * x0;
        CHECK((traj.row(k).transpose() - expect).norm() < 1e-12);
        Ak = A * Ak;
    }
    CHECK(traj.row(12).norm() < traj.row(0).norm());
}

TEST_CASE("rollout is deterministic bitwise") {
    OcpSpec spec = scalar_integrator(5);
    Mat inputs(5, 1);
    inputs << 0.3, -0.7, 0.11, 0.0, 2.5;
    Mat dist = Mat::Zero(5, 1);
    Vec x0 = Vec::Constant(1, 0.123456789);
    Mat a = rollout(spec, x0, inputs, dist);
    Mat b = rollout(spec, x0, inputs, dist);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("rollout rejects dimension mismatches") {
    OcpSpec spec = scalar_integrator(3);
    CHECK_THROWS_AS(rollout(spec, Vec::Zero(2), Mat::Ones(3, 1), Mat::Zero(3, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(rollout(spec, Vec::Zero(1), Mat::Ones(2, 1), Mat::Zero(3, 1)),
                    std::invalid_argument);
}

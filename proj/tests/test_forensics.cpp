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

#include <random>

#include "oracle.hpp"
#include "xmpc/forensics.hpp"
#include "xmpc/greenhouse.hpp"

using namespace xmpc;
using xmpc::testing::qp_as_ocp;
using xmpc::testing::random_regular_qp;
using xmpc::testing::unit_context;

namespace {

DecisionContext cold_night_context(int horizon) {
    DecisionContext ctx;
    ctx.measured_state = Vec(4);
    ctx.measured_state << 21.9, 680.0, 75.0, 1.0;
    ctx.disturbance_forecast =
        synth_disturbances(DisturbanceProfile::ColdNight, horizon, 11);
    ctx.timestamp = "2011-05-12T07:45:00";
    return ctx;
}

OcpSolution fake_solution(const std::vector<std::tuple<std::string, int, double>>& lams) {
    OcpSolution sol;
    sol.status = SolverStatus::Optimal;
    for (const auto& [id, stage, lam] : lams) sol.multipliers[{id, stage}] = lam;
    return sol;
}

OcpSpec spec_with_families() {
    OcpSpec spec;
    spec.horizon = 4;
    spec.state_dim = 1;
    spec.input_dim = 1;
    spec.disturbance_dim = 1;
    spec.dynamics = [](const Vec& x, const Vec&, const Vec&) { return x; };
    spec.stage_cost = [](const Vec&, const Vec&) { return 0.0; };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(1, 2);
    spec.input_bounds << 0, 1;
    auto add = [&](const std::string& id, const std::string& family) {
        ConstraintDef def;
        def.id = id;
        def.kind = ConstraintKind::HardInequality;
        def.stages = {0, 1, 2, 3};
        def.family = family;
        def.evaluator = [](const Vec&, const Vec&, const Vec&) { return -1.0; };
        spec.path_constraints.push_back(def);
    };
    add("T_room_upper", "temperature");
    add("P_max", "power");
    add("tank_pressure", "pressure");
    return spec;
}

}  // namespace

TEST_CASE("family thresholds: 2e-6 beats the temperature default") {
    OcpSpec spec = spec_with_families();
    auto table = ThresholdTable::with_family_defaults();
    auto sol = fake_solution({{"T_room_upper", 1, 2e-6}});
    auto active = detect_active_set(spec, sol, table);
    REQUIRE(active.entries.size() == 1);
    CHECK(active.entries[0].id == "T_room_upper");
    CHECK(table.lookup("P_max", "power") == doctest::Approx(1e-7));
    CHECK(table.lookup("tank_pressure", "pressure") == doctest::Approx(1e-8));
    CHECK(table.lookup("unknown", "unknown") == doctest::Approx(1e-6));
}

TEST_CASE("all-zero multipliers give an empty active set") {
    OcpSpec spec = spec_with_families();
    auto table = ThresholdTable::with_family_defaults();
    auto sol = fake_solution(
        {{"T_room_upper", 0, 0.0}, {"P_max", 1, 0.0}, {"tank_pressure", 2, 0.0}});
    CHECK(detect_active_set(spec, sol, table).empty());
}

TEST_CASE("active set matches the enumeration oracle on convex QPs") {
    auto table = ThresholdTable::with_family_defaults();
    for (unsigned seed = 600; seed < 640; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 6, 6);
        OcpSpec spec = qp_as_ocp(d);
        auto sol = solve(spec, unit_context(spec));
        REQUIRE(sol.status == SolverStatus::Optimal);
        auto active = detect_active_set(spec, sol, table);
        std::set<int> detected;
        for (const auto& e : active.entries)
            detected.insert(std::stoi(e.id.substr(3)));
        CHECK(detected == oracle.binding);
    }
}

TEST_CASE("non-optimal solutions are refused") {
    OcpSpec spec = spec_with_families();
    auto table = ThresholdTable::with_family_defaults();
    auto sol = fake_solution({{"T_room_upper", 1, 1.0}});
    sol.status = SolverStatus::MaxIterations;
    CHECK_THROWS_AS(detect_active_set(spec, sol, table), std::invalid_argument);
}

TEST_CASE("near-threshold multipliers are flagged uncertain") {
    OcpSpec spec = spec_with_families();
    auto table = ThresholdTable::with_family_defaults();
    auto sol = fake_solution({{"T_room_upper", 0, 1.1e-6},
                              {"P_max", 0, 5e-7},
                              {"tank_pressure", 0, 0.9e-8}});
    auto active = detect_active_set(spec, sol, table);
    // 1.1e-6 is active and within 20% of tau; 0.9e-8 is inactive but close.
    REQUIRE(active.uncertain.size() == 2);
    CHECK(active.uncertain[0].id == "T_room_upper");
    CHECK(active.uncertain[1].id == "tank_pressure");
}

TEST_CASE("primary driver maximizes the normalized multiplier") {
    OcpSpec spec = spec_with_families();
    ThresholdTable table;
    table.by_id["a"] = {1e-6, ThresholdTable::Provenance::Default};
    table.by_id["b"] = {1e-7, ThresholdTable::Provenance::Default};
    ActiveSet active;
    active.entries.push_back({"a", 0, 2e-6});  // ratio 2
    active.entries.push_back({"b", 0, 5e-7});  // ratio 5
    auto drv = primary_driver(active, spec, table);
    CHECK(drv.id == "b");

    ActiveSet single;
    single.entries.push_back({"a", 3, 1e-5});
    CHECK(primary_driver(single, spec, table).id == "a");

    // Exact ratio tie at stages 3 and 1: the earlier stage wins.
    ActiveSet tie;
    tie.entries.push_back({"a", 3, 4e-6});
    tie.entries.push_back({"a", 1, 4e-6});
    CHECK(primary_driver(tie, spec, table).stage == 1);

    CHECK_THROWS_AS(primary_driver(ActiveSet{}, spec, table),
                    std::invalid_argument);
}

TEST_CASE("primary driver is invariant under uniform positive scaling") {
    OcpSpec spec = spec_with_families();
    ThresholdTable table;
    table.by_id["a"] = {1e-6, ThresholdTable::Provenance::Default};
    table.by_id["b"] = {3e-7, ThresholdTable::Provenance::Default};
    ActiveSet active;
    active.entries.push_back({"a", 2, 7e-6});
    active.entries.push_back({"b", 0, 4e-6});
    auto base = primary_driver(active, spec, table);
    for (double s : {0.1, 3.0, 250.0}) {
        ThresholdTable scaled = table;
        scaled.scale = s;
        ActiveSet scaled_active = active;
        for (auto& e : scaled_active.entries) e.lambda *= s;
        auto drv = primary_driver(scaled_active, spec, scaled);
        CHECK(drv.id == base.id);
        CHECK(drv.stage == base.stage);
    }
}

TEST_CASE("soft-constraint ranking follows the penalty gradients") {
    OcpSpec spec = build_greenhouse_ocp(GreenhouseParams{}, 8);

    // Deep inside all bands: declaration order.
    Vec inside(4);
    inside << 22.0, 700.0, 75.0, 1.0;
    auto order = rank_soft_constraints(spec, inside);
    REQUIRE(order.size() == 6);
    CHECK(order[0] == "T_comfort_low");
    CHECK(order[1] == "T_comfort_high");
    CHECK(order[5] == "H_comfort_high");

    // Below the 18 C edge: the T-lower band leads.
    Vec coldish(4);
    coldish << 17.0, 700.0, 75.0, 1.0;
    order = rank_soft_constraints(spec, coldish);
    CHECK(order[0] == "T_comfort_low");

    // Two violated bands: order matches an independent numeric gradient.
    Vec both(4);
    both << 16.0, 700.0, 95.0, 1.0;  // T 2 deg below, Hm 5 above
    order = rank_soft_constraints(spec, both);
    auto fd_norm = [&](const char* id) {
        const ConstraintDef* def = spec.find_constraint(id);
        double h = 1e-6;
        Vec g(4);
        for (int i = 0; i < 4; ++i) {
            Vec xp = both, xm = both;
            xp(i) += h;
            xm(i) -= h;
            g(i) = (def->evaluator(xp, Vec::Zero(4), Vec::Zero(4)) -
                    def->evaluator(xm, Vec::Zero(4), Vec::Zero(4))) /
                   (2 * h);
        }
        return g.norm();
    };
    double t_norm = fd_norm("T_comfort_low");
    double h_norm = fd_norm("H_comfort_high");
    CHECK(order[0] == (t_norm > h_norm ? "T_comfort_low" : "H_comfort_high"));
    CHECK(order[1] == (t_norm > h_norm ? "H_comfort_high" : "T_comfort_low"));
}

TEST_CASE("cold-night scenario identifies the T-lower comfort band") {
    const int horizon = 16;
    OcpSpec spec = build_greenhouse_ocp(GreenhouseParams{}, horizon);
    DecisionContext ctx = cold_night_context(horizon);
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-6;
    CostThresholds costs;
    auto found = identify_soft_constraint(spec, ctx, cfg, costs.tau_cost);
    REQUIRE(found.id.has_value());
    CHECK(*found.id == "T_comfort_low");
    CHECK(found.resolves_used <= 6);
    CHECK(found.max_violation_cost > costs.tau_cost);

    // With the band removed the first heating input changes and the
    // counterfactual trajectory dips below the 18 degC comfort bound.
    auto nominal = solve(spec, ctx, cfg);
    REQUIRE(nominal.status == SolverStatus::Optimal);
    CHECK(std::abs(found.relaxed.inputs(0, 2) - nominal.inputs(0, 2)) > 1e-3);
    CHECK(found.relaxed.states.col(0).minCoeff() < 18.0);
}

TEST_CASE("benign scenario identifies nothing") {
    GreenhouseParams p;
    OcpSpec spec = build_greenhouse_ocp(p, 8);
    DecisionContext ctx;
    ctx.measured_state = Vec(4);
    ctx.measured_state << 22.0, 700.0, 75.0, 1.0;
    ctx.disturbance_forecast = Mat(8, 4);
    for (int k = 0; k < 8; ++k)
        ctx.disturbance_forecast.row(k) << 22.0, 700.0, 75.0, 0.0;
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-6;
    auto found = identify_soft_constraint(spec, ctx, cfg, CostThresholds{}.tau_cost);
    CHECK_FALSE(found.id.has_value());
    CHECK(found.resolves_used == 6);  // at most |soft constraints| re-solves
}

TEST_CASE("CO2 depletion scenario identifies the C-lower band") {
    GreenhouseParams p;
    p.w_co2 = 4e-4;  // grower cares strongly about CO2 enrichment
    OcpSpec spec = build_greenhouse_ocp(p, 12);
    DecisionContext ctx;
    ctx.measured_state = Vec(4);
    // CO2 already depleted below the 500 ppm band edge.
    ctx.measured_state << 22.0, 470.0, 75.0, 1.0;
    ctx.disturbance_forecast = Mat(12, 4);
    for (int k = 0; k < 12; ++k)
        ctx.disturbance_forecast.row(k) << 22.0, 400.0, 75.0, 500.0;
    ctx.timestamp = "2011-06-02T10:00:00";
    SolverConfig cfg;
    cfg.kkt_tolerance = 1e-6;
    auto sol = solve(spec, ctx, cfg);
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.inputs.col(1).maxCoeff() > 0.01);  // injection is on

    auto found = identify_soft_constraint(spec, ctx, cfg, CostThresholds{}.tau_cost);
    REQUIRE(found.id.has_value());
    CHECK(*found.id == "C_comfort_low");
    // Independent check: the relaxed trajectory dips below 500 ppm.
    CHECK(found.relaxed.states.col(1).minCoeff() < 500.0);
}

TEST_CASE("classification follows the violation/cost rule") {
    CostThresholds costs;
    costs.tau_cost = 0.006;
    costs.epsilon_j = 0.0006;

    // Heating scenario numbers: relaxed trajectory dips to 17.5 C (band
    // at 18), a clear violation with delta-J = -0.15.
    CounterfactualResult raw;
    raw.constraint = "T_comfort_low";
    raw.soft = true;
    raw.u_changed = true;
    raw.violation_found = true;
    raw.violation_cost = 0.1 * 0.5 * 0.5;  // w * (18 - 17.5)^2
    raw.violation_stage = 11;
    raw.delta_j = -0.15;
    auto res = classify(raw, costs);
    CHECK(res.classification == CauseClass::ConstraintDriven);

    // Unchanged optimizer and cost: not causal.
    CounterfactualResult none;
    none.u_changed = false;
    none.violation_found = false;
    none.delta_j = 0.0;
    CHECK(classify(none, costs).classification == CauseClass::NotCausal);

    // No violation but a significant saving: economic.
    CounterfactualResult econ;
    econ.u_changed = true;
    econ.violation_found = false;
    econ.delta_j = -0.10;
    CHECK(classify(econ, costs).classification == CauseClass::EconomicDriven);
}

TEST_CASE("classify never reports constraint-driven without a violation") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    CostThresholds costs;
    for (int i = 0; i < 500; ++i) {
        CounterfactualResult raw;
        raw.soft = U(rng) < 0.5;
        raw.u_changed = U(rng) < 0.5;
        raw.violation_found = U(rng) < 0.5;
        raw.violation_cost = U(rng) * 0.02;
        raw.delta_j = (U(rng) - 0.7) * 0.1;
        auto res = classify(raw, costs);
        if (res.classification == CauseClass::ConstraintDriven) {
            CHECK(res.violation_found);
            CHECK(res.u_changed);
        }
        if (res.classification == CauseClass::EconomicDriven)
            CHECK_FALSE(res.violation_found);
    }
}

TEST_CASE("counterfactual on the QP suite is sound") {
    CostThresholds costs;
    SolverConfig cfg;
    auto table = ThresholdTable::with_family_defaults();
    for (unsigned seed = 700; seed < 715; ++seed) {
        xmpc::testing::OracleSolution oracle;
        auto d = random_regular_qp(seed, &oracle, 5, 5);
        OcpSpec spec = qp_as_ocp(d);
        DecisionContext ctx = unit_context(spec);
        auto nominal = solve(spec, ctx, cfg);
        REQUIRE(nominal.status == SolverStatus::Optimal);
        for (int i = 0; i < d.A.rows(); ++i) {
            auto res = run_counterfactual(spec, ctx, nominal,
                                          "qp_" + std::to_string(i), cfg, costs);
            if (oracle.binding.count(i)) {
                CHECK(res.u_changed);
                CHECK(res.delta_j <= 1e-9);
            } else {
                CHECK_FALSE(res.u_changed);
                CHECK(res.classification == CauseClass::NotCausal);
            }
        }
    }
}

TEST_CASE("threshold calibration separates bimodal multipliers") {
    std::mt19937 rng(12);
    std::lognormal_distribution<double> act(std::log(1e-4), 0.5);
    std::lognormal_distribution<double> inact(std::log(1e-10), 0.5);
    std::vector<std::pair<double, bool>> labeled;
    for (int i = 0; i < 1000; ++i) labeled.push_back({act(rng), true});
    for (int i = 0; i < 1000; ++i) labeled.push_back({inact(rng), false});
    auto report = calibrate_kkt_thresholds(labeled);
    CHECK(report.holdout_accuracy >= 0.96);
    CHECK(report.threshold > 1e-10);
    CHECK(report.threshold < 1e-4);
    CHECK(report.calibration_samples > 0);
    CHECK(report.holdout_samples > 0);
}

TEST_CASE("perfect separation reaches accuracy 1.0") {
    std::vector<std::pair<double, bool>> labeled;
    for (int i = 0; i < 200; ++i) {
        labeled.push_back({1e-3 * (1 + i % 7), true});
        labeled.push_back({1e-9 * (1 + i % 5), false});
    }
    auto report = calibrate_kkt_thresholds(labeled);
    CHECK(report.holdout_accuracy == doctest::Approx(1.0));
}

TEST_CASE("single-class calibration input is rejected") {
    std::vector<std::pair<double, bool>> labeled;
    for (int i = 0; i < 100; ++i) labeled.push_back({1e-4, true});
    CHECK_THROWS_AS(calibrate_kkt_thresholds(labeled), std::invalid_argument);
}

TEST_CASE("cost thresholds follow the 5% / 2% formulas") {
    std::vector<double> stage_costs(40, 0.12);
    std::vector<double> deltas(120);
    std::mt19937 rng(3);
    std::normal_distribution<double> g(0.0, 0.03);
    for (auto& d : deltas) d = g(rng);
    auto costs = calibrate_cost_thresholds(stage_costs, deltas);
    CHECK(costs.tau_cost == doctest::Approx(0.006));
    CHECK(costs.epsilon_j == doctest::Approx(0.02 * 0.03).epsilon(0.2));

    // Degenerate all-zero deltas fall back to the floor.
    std::vector<double> zeros(120, 0.0);
    auto floor = calibrate_cost_thresholds(stage_costs, zeros);
    CHECK(floor.epsilon_j == doctest::Approx(1e-9));

    std::vector<double> few(50, 0.01);
    CHECK_THROWS_AS(calibrate_cost_thresholds(stage_costs, few),
                    std::invalid_argument);
}

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

#include "xmpc/greenhouse.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace xmpc {

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Saturating photosynthesis rate in [0,1).
double photo_rate(const GreenhouseParams& p, double q_rad, double temp, double co2) {
    double fq = q_rad / (q_rad + p.k_q);
    double ft = logistic((temp - p.t_center) / p.t_scale);
    double fc = co2 > 0.0 ? co2 / (co2 + p.k_c) : 0.0;
    return fq * ft * fc;
}

double hinge_sq(double v) { return v > 0.0 ? v * v : 0.0; }
double hinge_grad(double v) { return v > 0.0 ? 2.0 * v : 0.0; }

}  // namespace

std::map<std::string, double> GreenhouseParams::to_map() const {
    return {
        {"a_leak", a_leak},       {"a_vent", a_vent},
        {"a_rad", a_rad},         {"a_heat", a_heat},
        {"a_cool", a_cool},       {"c_leak", c_leak},
        {"c_vent", c_vent},       {"c_inj", c_inj},
        {"c_photo", c_photo},     {"h_leak", h_leak},
        {"h_vent", h_vent},       {"h_transp", h_transp},
        {"k_q", k_q},             {"k_c", k_c},
        {"t_center", t_center},   {"t_scale", t_scale},
        {"b_grow", b_grow},       {"price_heat", price_heat},
        {"price_cool", price_cool}, {"price_vent", price_vent},
        {"price_co2", price_co2}, {"price_biomass", price_biomass},
        {"wear", wear},           {"w_temp", w_temp},
        {"w_co2", w_co2},         {"w_hum", w_hum},
        {"substeps", static_cast<double>(substeps)},
    };
}

GreenhouseParams GreenhouseParams::from_map(
    const std::map<std::string, double>& kv) {
    GreenhouseParams p;
    auto get = [&](const char* key, double* dst) {
        auto it = kv.find(key);
        if (it != kv.end()) *dst = it->second;
    };
    get("a_leak", &p.a_leak);
    get("a_vent", &p.a_vent);
    get("a_rad", &p.a_rad);
    get("a_heat", &p.a_heat);
    get("a_cool", &p.a_cool);
    get("c_leak", &p.c_leak);
    get("c_vent", &p.c_vent);
    get("c_inj", &p.c_inj);
    get("c_photo", &p.c_photo);
    get("h_leak", &p.h_leak);
    get("h_vent", &p.h_vent);
    get("h_transp", &p.h_transp);
    get("k_q", &p.k_q);
    get("k_c", &p.k_c);
    get("t_center", &p.t_center);
    get("t_scale", &p.t_scale);
    get("b_grow", &p.b_grow);
    get("price_heat", &p.price_heat);
    get("price_cool", &p.price_cool);
    get("price_vent", &p.price_vent);
    get("price_co2", &p.price_co2);
    get("price_biomass", &p.price_biomass);
    get("wear", &p.wear);
    get("w_temp", &p.w_temp);
    get("w_co2", &p.w_co2);
    get("w_hum", &p.w_hum);
    double sub = p.substeps;
    get("substeps", &sub);
    p.substeps = static_cast<int>(sub);
    return p;
}

Vec greenhouse_step(const GreenhouseParams& p, double dt_hours, const Vec& x,
                    const Vec& u, const Vec& d) {
    Vec s = x;
    const int n = std::max(1, p.substeps);
    const double h = dt_hours / n;
    for (int i = 0; i < n; ++i) {
        const double T = s(0), C = s(1), Hm = s(2), B = s(3);
        const double uV = u(0), uC = u(1), uQh = u(2), uQc = u(3);
        const double Tout = d(0), Cout = d(1), Hout = d(2), Q = d(3);
        const double phi = photo_rate(p, Q, T, C);

        const double dT = p.a_leak * (Tout - T) + p.a_vent * uV * (Tout - T) +
                          p.a_rad * Q + p.a_heat * uQh - p.a_cool * uQc;
        const double dC = p.c_inj * uC + (p.c_leak + p.c_vent * uV) * (Cout - C) -
                          p.c_photo * phi;
        const double dH = p.h_transp * (Q / (Q + p.k_q)) +
                          (p.h_leak + p.h_vent * uV) * (Hout - Hm);
        const double dB = p.b_grow * phi;

        s(0) = T + h * dT;
        s(1) = C + h * dC;
        s(2) = Hm + h * dH;
        s(3) = B + h * dB;
    }
    return s;
}

GreenhouseBounds greenhouse_bounds() { return {}; }

OcpSpec build_greenhouse_ocp(const GreenhouseParams& params, int horizon) {
    if (horizon < 1) throw std::invalid_argument("greenhouse: horizon must be >= 1");
    const GreenhouseBounds bd = greenhouse_bounds();
    OcpSpec spec;
    spec.horizon = horizon;
    spec.state_dim = 4;
    spec.input_dim = 4;
    spec.disturbance_dim = 4;
    spec.sampling_minutes = 15.0;
    spec.state_names = {"T", "C", "Hm", "B"};
    spec.input_names = {"u_V", "u_C", "u_Qh", "u_Qc"};
    spec.disturbance_names = {"T_out", "C_out", "H_out", "Q_rad"};

    const GreenhouseParams p = params;
    const double dt = 0.25;  // 15 min in hours
    spec.dynamics = [p, dt](const Vec& x, const Vec& u, const Vec& d) {
        return greenhouse_step(p, dt, x, u, d);
    };
    spec.stage_cost = [p](const Vec&, const Vec& u) {
        return p.price_vent * u(0) + p.price_co2 * u(1) + p.price_heat * u(2) +
               p.price_cool * u(3) + p.wear * u.squaredNorm();
    };
    spec.terminal_cost = [p](const Vec& x) { return -p.price_biomass * x(3); };

    spec.input_bounds = Mat(4, 2);
    spec.input_bounds << 0, 1, 0, 1, 0, 1, 0, 1;
    spec.neutral_input = Vec::Zero(4);

    std::vector<int> stages;
    for (int k = 1; k <= horizon; ++k) stages.push_back(k);

    auto hard_lower = [&](const std::string& id, int state_idx, double bound,
                          const std::string& family) {
        ConstraintDef def;
        def.id = id;
        def.kind = ConstraintKind::HardInequality;
        def.stages = stages;
        def.bound = bound;
        def.family = family;
        def.variable = spec.state_names[state_idx];
        def.make_evaluator = [state_idx](double b) {
            return [state_idx, b](const Vec& x, const Vec&, const Vec&) {
                return b - x(state_idx);
            };
        };
        def.evaluator = def.make_evaluator(bound);
        return def;
    };
    auto hard_upper = [&](const std::string& id, int state_idx, double bound,
                          const std::string& family) {
        ConstraintDef def;
        def.id = id;
        def.kind = ConstraintKind::HardInequality;
        def.stages = stages;
        def.bound = bound;
        def.family = family;
        def.variable = spec.state_names[state_idx];
        def.make_evaluator = [state_idx](double b) {
            return [state_idx, b](const Vec& x, const Vec&, const Vec&) {
                return x(state_idx) - b;
            };
        };
        def.evaluator = def.make_evaluator(bound);
        return def;
    };

    spec.path_constraints.push_back(
        hard_lower("T_hard_lower", 0, bd.t_hard_lo, "temperature"));
    spec.path_constraints.push_back(
        hard_upper("T_hard_upper", 0, bd.t_hard_hi, "temperature"));
    spec.path_constraints.push_back(
        hard_lower("C_hard_lower", 1, bd.c_hard_lo, "concentration"));
    spec.path_constraints.push_back(
        hard_upper("C_hard_upper", 1, bd.c_hard_hi, "concentration"));
    spec.path_constraints.push_back(
        hard_lower("H_hard_lower", 2, bd.h_hard_lo, "humidity"));
    spec.path_constraints.push_back(
        hard_upper("H_hard_upper", 2, bd.h_hard_hi, "humidity"));

    // Smooth quadratic hinge penalties: zero inside the comfort band, so the
    // required penalty gradient exists everywhere.
    auto soft_band = [&](const std::string& id, int state_idx, double edge,
                         bool lower, double weight, const std::string& family) {
        ConstraintDef def;
        def.id = id;
        def.kind = ConstraintKind::SoftPenalty;
        def.stages = stages;
        def.bound = edge;
        def.family = family;
        def.variable = spec.state_names[state_idx];
        def.make_evaluator = [state_idx, lower, weight](double b) {
            return [state_idx, lower, weight, b](const Vec& x, const Vec&,
                                                 const Vec&) {
                double v = lower ? b - x(state_idx) : x(state_idx) - b;
                return weight * hinge_sq(v);
            };
        };
        def.evaluator = def.make_evaluator(edge);
        def.penalty_gradient = [state_idx, lower, weight, edge](const Vec& x) {
            Vec g = Vec::Zero(4);
            double v = lower ? edge - x(state_idx) : x(state_idx) - edge;
            double dv = weight * hinge_grad(v);
            g(state_idx) = lower ? -dv : dv;
            return g;
        };
        return def;
    };

    spec.path_constraints.push_back(
        soft_band("T_comfort_low", 0, bd.t_soft_lo, true, p.w_temp, "temperature"));
    spec.path_constraints.push_back(
        soft_band("T_comfort_high", 0, bd.t_soft_hi, false, p.w_temp, "temperature"));
    spec.path_constraints.push_back(
        soft_band("C_comfort_low", 1, bd.c_soft_lo, true, p.w_co2, "concentration"));
    spec.path_constraints.push_back(
        soft_band("C_comfort_high", 1, bd.c_soft_hi, false, p.w_co2, "concentration"));
    spec.path_constraints.push_back(
        soft_band("H_comfort_low", 2, bd.h_soft_lo, true, p.w_hum, "humidity"));
    spec.path_constraints.push_back(
        soft_band("H_comfort_high", 2, bd.h_soft_hi, false, p.w_hum, "humidity"));

    return spec;
}

Mat synth_disturbances(DisturbanceProfile profile, int horizon, unsigned seed) {
    if (horizon < 1) throw std::invalid_argument("synth: horizon must be >= 1");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    Mat d(horizon, 4);
    const double span = std::max(1, horizon - 1);
    for (int k = 0; k < horizon; ++k) {
        const double frac = horizon == 1 ? 1.0 : static_cast<double>(k) / span;
        switch (profile) {
            case DisturbanceProfile::ColdNight: {
                // Descends to exactly 5 degC, no radiation at night.
                double t_out = std::max(5.0, 10.0 - 10.0 * frac);
                if (k == horizon - 1) t_out = 5.0;
                d(k, 0) = t_out;
                d(k, 1) = 420.0 + 5.0 * jitter(rng);
                d(k, 2) = 70.0 + 2.0 * jitter(rng);
                d(k, 3) = 0.0;
                break;
            }
            case DisturbanceProfile::SunnyDay: {
                double bell = std::sin(M_PI * frac);
                d(k, 0) = 18.0 + 8.0 * bell;
                d(k, 1) = 420.0 + 5.0 * jitter(rng);
                d(k, 2) = 60.0 + 2.0 * jitter(rng);
                d(k, 3) = 800.0 * bell * bell;
                break;
            }
            case DisturbanceProfile::HumidSpell: {
                d(k, 0) = 18.0 + 0.5 * jitter(rng);
                d(k, 1) = 420.0 + 5.0 * jitter(rng);
                d(k, 2) = 70.0 + 25.0 * frac;
                d(k, 3) = 200.0;
                break;
            }
        }
    }
    return d;
}

DisturbanceProfile parse_profile(const std::string& name) {
    if (name == "cold-night") return DisturbanceProfile::ColdNight;
    if (name == "sunny-day") return DisturbanceProfile::SunnyDay;
    if (name == "humid-spell") return DisturbanceProfile::HumidSpell;
    throw std::invalid_argument("unknown disturbance profile \"" + name + "\"");
}

SignedKnowledgeGraph greenhouse_knowledge_graph() {
    std::vector<KgNode> nodes = {
        {"T", NodeRole::State},        {"C", NodeRole::State},
        {"Hm", NodeRole::State},       {"B", NodeRole::State},
        {"u_V", NodeRole::Input},      {"u_C", NodeRole::Input},
        {"u_Qh", NodeRole::Input},     {"u_Qc", NodeRole::Input},
        {"T_out", NodeRole::Disturbance}, {"C_out", NodeRole::Disturbance},
        {"H_out", NodeRole::Disturbance}, {"Q_rad", NodeRole::Disturbance},
    };
    std::vector<KgEdge> edges = {
        {"Q_rad", "T", EdgeSign::Positive, "", true},
        {"Q_rad", "Hm", EdgeSign::Positive, "", true},
        {"Q_rad", "B", EdgeSign::Positive, "", true},
        {"Q_rad", "C", EdgeSign::Negative, "", true},
        {"T_out", "T", EdgeSign::Positive, "", true},
        {"C_out", "C", EdgeSign::Positive, "", true},
        {"H_out", "Hm", EdgeSign::Positive, "", true},
        {"u_Qh", "T", EdgeSign::Positive, "", true},
        {"u_Qc", "T", EdgeSign::Negative, "", true},
        {"u_C", "C", EdgeSign::Positive, "", true},
        // Ventilation under the nominal regime (greenhouse warmer, richer,
        // moister than outside); humidity and CO2 exchange flip with the
        // gradient direction and are marked conditional.
        {"u_V", "T", EdgeSign::Negative, "", true},
        {"u_V", "Hm", EdgeSign::Conditional, "H_out < Hm", true},
        {"u_V", "C", EdgeSign::Conditional, "C_out < C", true},
        // Crop response; active only with light.
        {"T", "B", EdgeSign::Conditional, "Q_rad > 0", false},
        {"C", "B", EdgeSign::Conditional, "Q_rad > 0", false},
    };
    return SignedKnowledgeGraph(std::move(nodes), std::move(edges));
}

OcpSpec build_hardconstrained_testbed(TestbedKind kind, int horizon) {
    if (horizon < 1) throw std::invalid_argument("testbed: horizon must be >= 1");
    OcpSpec spec;
    spec.horizon = horizon;
    spec.sampling_minutes = 15.0;
    const double dt = 0.25;

    std::vector<int> state_stages;
    for (int k = 1; k <= horizon; ++k) state_stages.push_back(k);
    std::vector<int> input_stages;
    for (int k = 0; k < horizon; ++k) input_stages.push_back(k);

    if (kind == TestbedKind::ThermalZone) {
        spec.state_dim = 3;
        spec.input_dim = 2;
        spec.disturbance_dim = 1;
        spec.state_names = {"zone1_T", "zone2_T", "zone3_T"};
        spec.input_names = {"heater1", "heater3"};
        spec.disturbance_names = {"T_out"};

        const double kx = 0.8, ko = 0.4, gain = 12.0;
        spec.dynamics = [dt, kx, ko, gain](const Vec& x, const Vec& u, const Vec& d) {
            Vec n(3);
            const double tout = d(0);
            n(0) = x(0) + dt * (kx * (x(1) - x(0)) + ko * (tout - x(0)) + gain * u(0));
            n(1) = x(1) + dt * (kx * (x(0) - x(1)) + kx * (x(2) - x(1)) +
                                ko * (tout - x(1)));
            n(2) = x(2) + dt * (kx * (x(1) - x(2)) + ko * (tout - x(2)) + gain * u(1));
            return n;
        };
        spec.stage_cost = [](const Vec&, const Vec& u) {
            return 0.2 * (u(0) + u(1)) + 0.05 * u.squaredNorm();
        };
        spec.terminal_cost = [](const Vec&) { return 0.0; };
        spec.input_bounds = Mat(2, 2);
        spec.input_bounds << 0, 1, 0, 1;
        spec.neutral_input = Vec::Zero(2);

        for (int i = 0; i < 3; ++i) {
            ConstraintDef lo;
            lo.id = "zone" + std::to_string(i + 1) + "_T_lower";
            lo.kind = ConstraintKind::HardInequality;
            lo.stages = state_stages;
            lo.bound = 19.0;
            lo.family = "temperature";
            lo.variable = spec.state_names[i];
            lo.make_evaluator = [i](double b) {
                return [i, b](const Vec& x, const Vec&, const Vec&) {
                    return b - x(i);
                };
            };
            lo.evaluator = lo.make_evaluator(lo.bound);
            spec.path_constraints.push_back(lo);

            ConstraintDef hi;
            hi.id = "zone" + std::to_string(i + 1) + "_T_upper";
            hi.kind = ConstraintKind::HardInequality;
            hi.stages = state_stages;
            hi.bound = 26.0;
            hi.family = "temperature";
            hi.variable = spec.state_names[i];
            hi.make_evaluator = [i](double b) {
                return [i, b](const Vec& x, const Vec&, const Vec&) {
                    return x(i) - b;
                };
            };
            hi.evaluator = hi.make_evaluator(hi.bound);
            spec.path_constraints.push_back(hi);
        }
        ConstraintDef power;
        power.id = "power_budget";
        power.kind = ConstraintKind::HardInequality;
        power.stages = input_stages;
        power.bound = 1.5;
        power.family = "power";
        power.make_evaluator = [](double b) {
            return [b](const Vec&, const Vec& u, const Vec&) {
                return u(0) + u(1) - b;
            };
        };
        power.evaluator = power.make_evaluator(power.bound);
        spec.path_constraints.push_back(power);
        return spec;
    }

    // ReactorChain: six tanks in series, feed inputs at tanks 1 and 4,
    // pressure caps along the chain.
    spec.state_dim = 6;
    spec.input_dim = 2;
    spec.disturbance_dim = 1;
    spec.state_names = {"tank1_p", "tank2_p", "tank3_p",
                        "tank4_p", "tank5_p", "tank6_p"};
    spec.input_names = {"feed1", "feed4"};
    spec.disturbance_names = {"inflow"};

    const double kf = 1.2, bgain = 8.0;
    spec.dynamics = [dt, kf, bgain](const Vec& x, const Vec& u, const Vec& d) {
        Vec n(6);
        n(0) = x(0) + dt * (-kf * x(0) + bgain * u(0) + d(0));
        for (int i = 1; i < 6; ++i) {
            double feed = (i == 3) ? bgain * u(1) : 0.0;
            n(i) = x(i) + dt * (kf * x(i - 1) - kf * x(i) + feed);
        }
        return n;
    };
    // Track a setpoint above the cap so the pressure bounds engage.
    spec.stage_cost = [](const Vec& x, const Vec& u) {
        double c = 0.05 * u.squaredNorm();
        for (int i = 0; i < 6; ++i) {
            double e = x(i) - 6.0;
            c += 0.02 * e * e;
        }
        return c;
    };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Mat(2, 2);
    spec.input_bounds << 0, 1, 0, 1;
    spec.neutral_input = Vec::Zero(2);

    for (int i : {2, 5}) {
        ConstraintDef cap;
        cap.id = "tank" + std::to_string(i + 1) + "_pressure_upper";
        cap.kind = ConstraintKind::HardInequality;
        cap.stages = state_stages;
        cap.bound = 5.0;
        cap.family = "pressure";
        cap.variable = spec.state_names[i];
        cap.make_evaluator = [i](double b) {
            return [i, b](const Vec& x, const Vec&, const Vec&) {
                return x(i) - b;
            };
        };
        cap.evaluator = cap.make_evaluator(cap.bound);
        spec.path_constraints.push_back(cap);
    }
    return spec;
}

DecisionContext testbed_binding_context(TestbedKind kind, int horizon) {
    DecisionContext ctx;
    ctx.timestamp = "2026-02-01T06:00:00";
    if (kind == TestbedKind::ThermalZone) {
        ctx.measured_state = Vec::Constant(3, 20.0);
        ctx.disturbance_forecast = Mat::Constant(horizon, 1, 10.0);  // cold pull
    } else {
        ctx.measured_state = Vec::Constant(6, 4.5);
        ctx.disturbance_forecast = Mat::Constant(horizon, 1, 5.0);  // high feed
    }
    return ctx;
}

}  // namespace xmpc

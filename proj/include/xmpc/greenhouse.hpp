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
#include <string>

#include "xmpc/knowledge_graph.hpp"
#include "xmpc/ocp.hpp"

namespace xmpc {

// Greenhouse climate/crop model: 4 states [T, C, Hm, B], 4 inputs
// [u_V, u_C, u_Qh, u_Qc] each in [0,1], 4 disturbances
// [T_out, C_out, H_out, Q_rad]. First-principles balance terms with rates
// per hour, integrated with fixed-step explicit substeps over the 15-min
// sampling interval.

struct GreenhouseParams {
    // Heat balance [1/h, degC/h scales]
    double a_leak = 0.3;    // envelope exchange rate
    double a_vent = 2.0;    // additional exchange at full ventilation
    double a_rad = 0.010;   // radiation gain per W/m^2
    // Heater authority is deliberately modest: it can hold the hard floor
    // but not the comfort band against a deep cold pull, which makes
    // preemptive heat banking optimal under cold-night forecasts.
    double a_heat = 3.0;
    double a_cool = 6.0;    // cooler authority at u_Qc = 1
    // CO2 balance [ppm/h scales]
    double c_leak = 0.2;
    double c_vent = 2.0;
    double c_inj = 400.0;
    double c_photo = 200.0;  // photosynthetic drawdown at full light
    // Humidity balance [%/h scales]
    double h_leak = 0.2;
    double h_vent = 2.0;
    double h_transp = 10.0;  // crop transpiration at full light
    // Photosynthesis shape
    double k_q = 250.0;      // half-saturation radiation [W/m^2]
    double k_c = 400.0;      // half-saturation CO2 [ppm]
    double t_center = 18.0;  // logistic temperature response center [degC]
    double t_scale = 6.0;
    double b_grow = 0.02;    // biomass gain at full photosynthesis [kg/m^2/h]
    // Economics
    double price_heat = 0.05;
    double price_cool = 0.05;
    double price_vent = 0.01;
    double price_co2 = 0.02;
    double price_biomass = 50.0;  // terminal reward per kg/m^2
    double wear = 0.01;           // quadratic actuation smoothing weight
    // Comfort penalty weights (quadratic hinge outside the band)
    double w_temp = 0.1;
    double w_co2 = 1e-5;
    double w_hum = 0.002;
    // Integration
    int substeps = 5;

    std::map<std::string, double> to_map() const;
    static GreenhouseParams from_map(const std::map<std::string, double>& kv);
};

/// One 15-min discrete dynamics step.
Vec greenhouse_step(const GreenhouseParams& p, double dt_hours, const Vec& x,
                    const Vec& u, const Vec& d);

/// Greenhouse OCP: dt = 15 min; hard safety bounds T in [14,30] degC,
/// C in [300,1000] ppm, Hm in [10,100] %; soft comfort bands T in [18,26],
/// C in [500,900], Hm in [60,90] as penalty constraints with gradients;
/// inputs boxed to [0,1]^4; stage cost = resource prices + actuation
/// smoothing + comfort penalties; terminal cost rewards biomass.
OcpSpec build_greenhouse_ocp(const GreenhouseParams& params, int horizon);

/// Hard/soft bound levels used by the greenhouse spec.
struct GreenhouseBounds {
    double t_hard_lo = 14.0, t_hard_hi = 30.0;
    double c_hard_lo = 300.0, c_hard_hi = 1000.0;
    double h_hard_lo = 10.0, h_hard_hi = 100.0;
    double t_soft_lo = 18.0, t_soft_hi = 26.0;
    double c_soft_lo = 500.0, c_soft_hi = 900.0;
    double h_soft_lo = 60.0, h_soft_hi = 90.0;
};
GreenhouseBounds greenhouse_bounds();

enum class DisturbanceProfile { ColdNight, SunnyDay, HumidSpell };

/// Reproducible synthetic forecasts (H x 4, columns T_out, C_out, H_out,
/// Q_rad). Cold-night descends to exactly 5 degC with zero radiation;
/// sunny-day peaks midday; humid-spell ramps outdoor humidity.
Mat synth_disturbances(DisturbanceProfile profile, int horizon, unsigned seed);

DisturbanceProfile parse_profile(const std::string& name);

/// The default physics graph for the greenhouse model. Edge signs agree
/// with the finite-difference signs of greenhouse_step across the
/// operating envelope (conditional edges under their conditions).
SignedKnowledgeGraph greenhouse_knowledge_graph();

enum class TestbedKind { ThermalZone, ReactorChain };

/// Synthetic hard-constrained systems (no soft constraints), exercising
/// multiplier-threshold calibration: a 3-state thermal zone network with
/// temperature and power-budget constraints, and a 6-state reactor chain
/// with pressure caps.
OcpSpec build_hardconstrained_testbed(TestbedKind kind, int horizon);

/// A context in which the testbed provably has binding constraints
/// (cold outdoor pull for the thermal zone; high feed for the reactor).
DecisionContext testbed_binding_context(TestbedKind kind, int horizon);

}  // namespace xmpc

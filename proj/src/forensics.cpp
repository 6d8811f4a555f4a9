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

#include "xmpc/forensics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xmpc {

ThresholdTable ThresholdTable::with_family_defaults() {
    ThresholdTable t;
    t.by_family["temperature"] = {1e-6, Provenance::Default};
    t.by_family["power"] = {1e-7, Provenance::Default};
    t.by_family["pressure"] = {1e-8, Provenance::Default};
    return t;
}

double ThresholdTable::lookup(const std::string& id,
                              const std::string& family) const {
    auto it = by_id.find(id);
    if (it != by_id.end()) return it->second.tau * scale;
    auto fit = by_family.find(family);
    if (fit != by_family.end()) return fit->second.tau * scale;
    return default_tau * scale;
}

double ThresholdTable::lookup(const ConstraintDef& def) const {
    return lookup(def.id, def.family);
}

ActiveSet detect_active_set(const OcpSpec& spec, const OcpSolution& sol,
                            const ThresholdTable& thresholds) {
    if (sol.status != SolverStatus::Optimal)
        throw std::invalid_argument(
            "detect_active_set: solution status is not optimal; multipliers "
            "are unreliable");
    ActiveSet out;
    for (const auto& [key, lam] : sol.multipliers) {
        const ConstraintDef* def = spec.find_constraint(key.first);
        if (!def || def->kind != ConstraintKind::HardInequality) continue;
        const double tau = thresholds.lookup(*def);
        if (lam > tau) out.entries.push_back({key.first, key.second, lam});
        if (lam > 0.8 * tau && lam < 1.2 * tau)
            out.uncertain.push_back({key.first, key.second, lam});
    }
    return out;
}

ActiveEntry primary_driver(const ActiveSet& active, const OcpSpec& spec,
                           const ThresholdTable& thresholds) {
    if (active.empty())
        throw std::invalid_argument("primary_driver: active set is empty");
    const ActiveEntry* best = nullptr;
    double best_ratio = -1.0;
    for (const auto& e : active.entries) {
        const ConstraintDef* def = spec.find_constraint(e.id);
        const double tau =
            def ? thresholds.lookup(*def) : thresholds.lookup(e.id, "");
        const double ratio = e.lambda / tau;
        bool better = ratio > best_ratio;
        if (!better && ratio == best_ratio && best) {
            if (e.stage != best->stage) better = e.stage < best->stage;
            else better = e.id < best->id;
        }
        if (better) {
            best = &e;
            best_ratio = ratio;
        }
    }
    return *best;
}

std::vector<ConstraintId> rank_soft_constraints(const OcpSpec& spec,
                                                const Vec& x) {
    struct Ranked {
        ConstraintId id;
        double norm;
        size_t order;
    };
    std::vector<Ranked> ranked;
    size_t order = 0;
    for (const auto& def : spec.path_constraints) {
        if (def.kind != ConstraintKind::SoftPenalty) continue;
        if (!def.penalty_gradient)
            throw std::invalid_argument("rank_soft_constraints: \"" + def.id +
                                        "\" lacks penalty_gradient");
        ranked.push_back({def.id, def.penalty_gradient(x).norm(), order++});
    }
    for (const auto& def : spec.terminal_constraints) {
        if (def.kind != ConstraintKind::SoftPenalty) continue;
        if (!def.penalty_gradient)
            throw std::invalid_argument("rank_soft_constraints: \"" + def.id +
                                        "\" lacks penalty_gradient");
        ranked.push_back({def.id, def.penalty_gradient(x).norm(), order++});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) {
                         if (a.norm != b.norm) return a.norm > b.norm;
                         return a.order < b.order;
                     });
    std::vector<ConstraintId> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) out.push_back(r.id);
    return out;
}

namespace {

// Max penalty of one soft constraint along a trajectory; returns the stage
// of the worst violation.
std::pair<double, int> max_soft_penalty(const OcpSpec& spec,
                                        const ConstraintDef& def,
                                        const Mat& states, const Mat& inputs,
                                        const Mat& disturbances) {
    double worst = 0.0;
    int worst_stage = -1;
    for (int k : def.stages) {
        const Vec x = states.row(k).transpose();
        Vec u = Vec::Zero(spec.input_dim);
        Vec d = Vec::Zero(spec.disturbance_dim);
        if (k < spec.horizon) {
            u = inputs.row(k).transpose();
            d = disturbances.row(k).transpose();
        }
        const double v = def.evaluator(x, u, d);
        if (v > worst) {
            worst = v;
            worst_stage = k;
        }
    }
    return {worst, worst_stage};
}

std::pair<double, int> max_hard_violation(const OcpSpec& spec,
                                          const ConstraintDef& def,
                                          const Mat& states, const Mat& inputs,
                                          const Mat& disturbances) {
    return max_soft_penalty(spec, def, states, inputs, disturbances);
}

}  // namespace

SoftIdentification identify_soft_constraint(const OcpSpec& spec,
                                            const DecisionContext& ctx,
                                            const SolverConfig& cfg,
                                            double epsilon) {
    SoftIdentification out;
    auto ranked = rank_soft_constraints(spec, ctx.measured_state);
    for (const auto& id : ranked) {
        RelaxationDirective dir;
        dir.target = id;
        dir.mode = RelaxationDirective::Mode::Remove;
        OcpSolution relaxed;
        try {
            relaxed = resolve_relaxed(spec, ctx, {dir}, cfg);
            ++out.resolves_used;
        } catch (const std::exception& err) {
            out.warnings.push_back("re-solve with \"" + id +
                                   "\" removed failed: " + err.what());
            continue;
        }
        if (relaxed.status == SolverStatus::Infeasible) {
            out.warnings.push_back("re-solve with \"" + id +
                                   "\" removed was infeasible");
            continue;
        }
        const ConstraintDef* def = spec.find_constraint(id);
        auto [viol, stage] = max_soft_penalty(spec, *def, relaxed.states,
                                              relaxed.inputs,
                                              ctx.disturbance_forecast);
        if (viol > epsilon) {
            out.id = id;
            out.relaxed = relaxed;
            out.max_violation_cost = viol;
            out.violation_stage = stage;
            return out;
        }
    }
    return out;
}

const char* to_string(CauseClass c) {
    switch (c) {
        case CauseClass::ConstraintDriven: return "constraint-driven";
        case CauseClass::EconomicDriven: return "economic-driven";
        case CauseClass::NotCausal: return "not-causal";
    }
    return "unknown";
}

CounterfactualResult classify(CounterfactualResult raw,
                              const CostThresholds& costs) {
    const bool costly_violation =
        raw.violation_found && (!raw.soft || raw.violation_cost > costs.tau_cost);
    if (raw.u_changed && costly_violation) {
        raw.classification = CauseClass::ConstraintDriven;
    } else if (!raw.violation_found && raw.delta_j < -costs.epsilon_j) {
        raw.classification = CauseClass::EconomicDriven;
    } else {
        raw.classification = CauseClass::NotCausal;
    }
    return raw;
}

CounterfactualResult run_counterfactual(const OcpSpec& spec,
                                        const DecisionContext& ctx,
                                        const OcpSolution& nominal,
                                        const ConstraintId& id,
                                        const SolverConfig& cfg,
                                        const CostThresholds& costs) {
    const ConstraintDef* def = spec.find_constraint(id);
    if (!def) throw std::invalid_argument("run_counterfactual: unknown \"" + id + "\"");

    RelaxationDirective dir;
    dir.target = id;
    dir.mode = RelaxationDirective::Mode::Remove;
    OcpSolution relaxed = resolve_relaxed(spec, ctx, {dir}, cfg);

    CounterfactualResult res;
    res.constraint = id;
    res.soft = def->kind == ConstraintKind::SoftPenalty;
    if (relaxed.status == SolverStatus::Infeasible) {
        // Removing a constraint cannot shrink the feasible set; an
        // infeasible relaxation means the nominal problem was already
        // infeasible and nothing causal can be concluded.
        res.classification = CauseClass::NotCausal;
        return res;
    }
    res.u_changed = (relaxed.inputs - nominal.inputs).cwiseAbs().maxCoeff() >
                    10.0 * cfg.step_tolerance;
    res.delta_j = relaxed.total_cost - nominal.total_cost;

    auto [viol, stage] = res.soft
                             ? max_soft_penalty(spec, *def, relaxed.states,
                                                relaxed.inputs,
                                                ctx.disturbance_forecast)
                             : max_hard_violation(spec, *def, relaxed.states,
                                                  relaxed.inputs,
                                                  ctx.disturbance_forecast);
    const double hard_tol = 1e-7;
    res.violation_found = res.soft ? viol > 0.0 : viol > hard_tol;
    res.violation_cost = res.soft ? viol : 0.0;
    if (res.violation_found && stage >= 0) res.violation_stage = stage;
    return classify(res, costs);
}

CalibrationReport calibrate_kkt_thresholds(
    const std::vector<std::pair<double, bool>>& labeled, double calibration_fraction,
    double holdout_fraction) {
    if (calibration_fraction <= 0.0 || holdout_fraction <= 0.0 ||
        calibration_fraction + holdout_fraction > 1.0)
        throw std::invalid_argument("calibrate: invalid split fractions");

    // Deterministic stratified interleave: within each class, samples cycle
    // through calibration / holdout / rest by index.
    std::vector<std::pair<double, bool>> calib, holdout;
    size_t pos_seen = 0, neg_seen = 0;
    for (const auto& s : labeled) {
        size_t& seen = s.second ? pos_seen : neg_seen;
        const double frac = static_cast<double>(seen % 1000) / 1000.0;
        if (frac < calibration_fraction) calib.push_back(s);
        else if (frac < calibration_fraction + holdout_fraction)
            holdout.push_back(s);
        ++seen;
    }
    auto has_both = [](const std::vector<std::pair<double, bool>>& v) {
        bool pos = false, neg = false;
        for (const auto& s : v) (s.second ? pos : neg) = true;
        return pos && neg;
    };
    if (!has_both(calib) || !has_both(holdout))
        throw std::invalid_argument(
            "calibrate: both classes are required in every split");

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& s : calib) {
        if (s.first > 0.0) lo = std::min(lo, s.first);
        hi = std::max(hi, s.first);
    }
    if (!(hi > 0.0)) throw std::invalid_argument("calibrate: no positive multipliers");
    lo = std::max(lo * 0.5, 1e-300);
    hi = hi * 2.0;

    auto balanced_accuracy = [](const std::vector<std::pair<double, bool>>& v,
                                double tau) {
        double tp = 0, fn = 0, tn = 0, fp = 0;
        for (const auto& s : v) {
            const bool pred = s.first > tau;
            if (s.second && pred) ++tp;
            else if (s.second) ++fn;
            else if (pred) ++fp;
            else ++tn;
        }
        const double sens = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double spec = tn + fp > 0 ? tn / (tn + fp) : 0.0;
        return 0.5 * (sens + spec);
    };
    auto plain_accuracy = [](const std::vector<std::pair<double, bool>>& v,
                             double tau) {
        double correct = 0;
        for (const auto& s : v)
            if ((s.first > tau) == s.second) ++correct;
        return v.empty() ? 0.0 : correct / static_cast<double>(v.size());
    };

    // Sweep log-spaced candidates; when a band of thresholds ties at the
    // best balanced accuracy, take its geometric midpoint.
    const int kCandidates = 200;
    const double log_lo = std::log10(lo), log_hi = std::log10(hi);
    CalibrationReport report;
    double best = -1.0;
    double band_lo = lo, band_hi = lo;
    for (int i = 0; i < kCandidates; ++i) {
        const double tau =
            std::pow(10.0, log_lo + (log_hi - log_lo) * i / (kCandidates - 1.0));
        const double acc = balanced_accuracy(calib, tau);
        if (acc > best) {
            best = acc;
            band_lo = band_hi = tau;
        } else if (acc == best) {
            band_hi = tau;
        }
    }
    report.threshold = std::sqrt(band_lo * band_hi);
    if (balanced_accuracy(calib, report.threshold) < best)
        report.threshold = band_lo;  // ties were not contiguous
    report.calibration_accuracy = best;
    report.holdout_accuracy = plain_accuracy(holdout, report.threshold);
    report.calibration_samples = static_cast<int>(calib.size());
    report.holdout_samples = static_cast<int>(holdout.size());
    return report;
}

CostThresholds calibrate_cost_thresholds(const std::vector<double>& stage_costs,
                                         const std::vector<double>& cost_deltas) {
    if (stage_costs.empty())
        throw std::invalid_argument("calibrate_cost: no stage-cost samples");
    if (cost_deltas.size() < 100)
        throw std::invalid_argument(
            "calibrate_cost: at least 100 counterfactual trials required");
    double mean = 0.0;
    for (double c : stage_costs) mean += c;
    mean /= static_cast<double>(stage_costs.size());

    double dm = 0.0;
    for (double d : cost_deltas) dm += d;
    dm /= static_cast<double>(cost_deltas.size());
    double var = 0.0;
    for (double d : cost_deltas) var += (d - dm) * (d - dm);
    var /= static_cast<double>(cost_deltas.size());

    CostThresholds out;
    out.tau_cost = 0.05 * mean;
    out.epsilon_j = 0.02 * std::sqrt(var);
    if (!(out.epsilon_j > 0.0)) out.epsilon_j = 1e-9;  // degenerate floor
    return out;
}

}  // namespace xmpc

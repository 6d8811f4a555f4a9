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

#include "xmpc/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace xmpc {

const char* to_string(HypothesisKind h) {
    switch (h) {
        case HypothesisKind::Safety: return "Safety";
        case HypothesisKind::Optimization: return "Optimization";
        case HypothesisKind::Prediction: return "Prediction";
        case HypothesisKind::Economics: return "Economics";
        case HypothesisKind::History: return "History";
    }
    return "unknown";
}

const char* to_string(EvidenceSource s) {
    switch (s) {
        case EvidenceSource::CurrentState: return "current-state";
        case EvidenceSource::Kkt: return "kkt";
        case EvidenceSource::Counterfactual: return "counterfactual";
        case EvidenceSource::Forecast: return "forecast";
        case EvidenceSource::Pcmci: return "pcmci";
        case EvidenceSource::Kg: return "kg";
        case EvidenceSource::Meta: return "meta";
    }
    return "unknown";
}

double hypothesis_confidence(HypothesisKind h, bool hard_path) {
    switch (h) {
        case HypothesisKind::Safety: return hard_path ? 0.95 : 0.92;
        case HypothesisKind::Optimization: return 0.88;
        case HypothesisKind::Prediction: return 0.90;
        case HypothesisKind::Economics: return 0.85;
        case HypothesisKind::History: return 0.82;
    }
    return 0.0;
}

std::string format_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

namespace {

Vec neutral_input_of(const OcpSpec& spec) {
    if (spec.neutral_input.size() == spec.input_dim) return spec.neutral_input;
    return Vec::Zero(spec.input_dim);
}

// Actuator with the largest scaled departure from its resting value.
std::optional<int> dominant_actuator(const OcpSpec& spec, const OcpSolution& sol) {
    const Vec neutral = neutral_input_of(spec);
    int best = -1;
    double best_mag = 1e-6;
    for (int i = 0; i < spec.input_dim; ++i) {
        double range = 1.0;
        if (std::isfinite(spec.input_bounds(i, 0)) &&
            std::isfinite(spec.input_bounds(i, 1)))
            range = std::max(1e-9, spec.input_bounds(i, 1) - spec.input_bounds(i, 0));
        const double mag = std::abs(sol.inputs(0, i) - neutral(i)) / range;
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    if (best < 0) return std::nullopt;
    return best;
}

std::string input_name(const OcpSpec& spec, int i) {
    if (static_cast<int>(spec.input_names.size()) == spec.input_dim)
        return spec.input_names[i];
    return "u" + std::to_string(i);
}

std::string disturbance_name(const OcpSpec& spec, int i) {
    if (static_cast<int>(spec.disturbance_names.size()) == spec.disturbance_dim)
        return spec.disturbance_names[i];
    return "d" + std::to_string(i);
}

bool kkt_available(const OcpSolution& sol, const PipelineArtifacts& art) {
    return art.use_kkt && sol.status == SolverStatus::Optimal;
}

bool pcmci_available(const DecisionContext& ctx, const PipelineArtifacts& art) {
    return art.causal != nullptr && art.baselines != nullptr;
}

// Worst violation along a trajectory for every constraint, hard (value
// above tolerance) or soft (penalty above epsilon).
struct TrajViolation {
    ConstraintId id;
    int stage = -1;
    double value = 0.0;
};

std::vector<TrajViolation> trajectory_violations(const OcpSpec& spec,
                                                 const Mat& states,
                                                 const Mat& inputs,
                                                 const Mat& disturbances,
                                                 double soft_epsilon) {
    std::vector<TrajViolation> out;
    for (const auto* def : spec.all_constraints()) {
        const double tol =
            def->kind == ConstraintKind::HardInequality ? 1e-7 : soft_epsilon;
        TrajViolation worst;
        worst.id = def->id;
        for (int k : def->stages) {
            if (k < 1) continue;  // the measured state is not a prediction
            const Vec x = states.row(k).transpose();
            Vec u = Vec::Zero(spec.input_dim);
            Vec d = Vec::Zero(spec.disturbance_dim);
            if (k < spec.horizon) {
                u = inputs.row(k).transpose();
                d = disturbances.row(k).transpose();
            }
            const double v = def->evaluator(x, u, d);
            if (v > worst.value) {
                worst.value = v;
                worst.stage = k;
            }
        }
        if (worst.stage >= 0 && worst.value > tol) out.push_back(worst);
    }
    return out;
}

// Per-disturbance forecast z-scores against the lag-0 baselines; used to
// decide which disturbances count as perturbed.
std::map<std::string, double> forecast_z_scores(const OcpSpec& spec,
                                                const DecisionContext& ctx,
                                                const PipelineArtifacts& art) {
    std::map<std::string, double> z;
    if (!art.baselines) return z;
    for (int j = 0; j < spec.disturbance_dim; ++j) {
        const std::string name = disturbance_name(spec, j);
        const int bj = art.baselines->index_of(name);
        if (bj < 0) continue;
        const double mu = art.baselines->mu(bj, 0);
        const double sd = art.baselines->sigma(bj, 0);
        double worst = 0.0;
        for (int k = 0; k < ctx.disturbance_forecast.rows(); ++k) {
            const double dev = ctx.disturbance_forecast(k, j) - mu;
            const double zz = sd > 0.0 ? dev / sd
                                       : (dev == 0.0 ? 0.0
                                                     : std::copysign(
                                                           std::numeric_limits<
                                                               double>::infinity(),
                                                           dev));
            if (std::abs(zz) > std::abs(worst)) worst = zz;
        }
        z[name] = worst;
    }
    return z;
}

std::optional<HypothesisOutcome> eval_safety(const OcpSpec& spec,
                                             const DecisionContext& ctx,
                                             const OcpSolution& sol,
                                             const PipelineArtifacts& art,
                                             const SolverConfig& cfg,
                                             std::vector<std::string>* flags) {
    EvidenceBundle ev;
    // Hard path: thresholded multipliers plus counterfactual confirmation.
    if (kkt_available(sol, art)) {
        ActiveSet active = detect_active_set(spec, sol, art.thresholds);
        for (const auto& u : active.uncertain)
            ev.uncertainty_flags.push_back("near-threshold:" + u.id + "@" +
                                           std::to_string(u.stage));
        if (!active.empty()) {
            ActiveEntry drv = primary_driver(active, spec, art.thresholds);
            CounterfactualResult cf =
                run_counterfactual(spec, ctx, sol, drv.id, cfg, art.costs);
            if (cf.u_changed && cf.violation_found) {
                ev.kkt_primary = drv;
                ev.kkt_active = active.entries;
                ev.counterfactual = cf;
                ev.evidence_tags = {"KKT", "CFT"};
                return HypothesisOutcome{
                    ev, hypothesis_confidence(HypothesisKind::Safety, true)};
            }
            ev.uncertainty_flags.push_back("kkt-unconfirmed:" + drv.id);
        }
    } else if (flags) {
        flags->push_back("kkt-unavailable");
    }

    // Soft path: ranked penalty removals until one exposes a violation.
    bool has_soft = false;
    for (const auto* def : spec.all_constraints())
        if (def->kind == ConstraintKind::SoftPenalty) has_soft = true;
    if (!has_soft) return std::nullopt;

    SoftIdentification ident =
        identify_soft_constraint(spec, ctx, cfg, art.costs.tau_cost);
    for (const auto& w : ident.warnings) ev.uncertainty_flags.push_back(w);
    if (!ident.id) return std::nullopt;

    CounterfactualResult cf;
    cf.constraint = *ident.id;
    cf.soft = true;
    cf.u_changed = (ident.relaxed.inputs - sol.inputs).cwiseAbs().maxCoeff() >
                   10.0 * cfg.step_tolerance;
    cf.violation_found = true;
    cf.violation_cost = ident.max_violation_cost;
    cf.violation_stage = ident.violation_stage;
    cf.delta_j = ident.relaxed.total_cost - sol.total_cost;
    cf = classify(cf, art.costs);
    if (cf.classification != CauseClass::ConstraintDriven) return std::nullopt;
    ev.counterfactual = cf;
    ev.evidence_tags = {"CFT"};
    return HypothesisOutcome{ev,
                             hypothesis_confidence(HypothesisKind::Safety, false)};
}

std::optional<HypothesisOutcome> eval_optimization(const OcpSpec& spec,
                                                   const DecisionContext& ctx,
                                                   const OcpSolution& sol,
                                                   const PipelineArtifacts& art,
                                                   const SolverConfig& cfg) {
    // Alternatives: +-10% of each actuator's range applied to the first
    // input; a candidate is infeasible when it leaves the input box or its
    // rollout breaks a hard constraint.
    AlternativeScan scan;
    for (int i = 0; i < spec.input_dim; ++i) {
        double range = 1.0;
        if (std::isfinite(spec.input_bounds(i, 0)) &&
            std::isfinite(spec.input_bounds(i, 1)))
            range = spec.input_bounds(i, 1) - spec.input_bounds(i, 0);
        for (double side : {-1.0, 1.0}) {
            ++scan.total;
            Mat inputs = sol.inputs;
            inputs(0, i) += side * 0.1 * range;
            if (inputs(0, i) < spec.input_bounds(i, 0) - 1e-12 ||
                inputs(0, i) > spec.input_bounds(i, 1) + 1e-12) {
                ++scan.infeasible;
                continue;
            }
            Mat traj = rollout(spec, ctx.measured_state, inputs,
                               ctx.disturbance_forecast);
            bool infeasible = false;
            for (const auto* def : spec.all_constraints()) {
                if (def->kind != ConstraintKind::HardInequality) continue;
                for (int k : def->stages) {
                    if (k < 1) continue;
                    const Vec x = traj.row(k).transpose();
                    Vec u = Vec::Zero(spec.input_dim);
                    Vec d = Vec::Zero(spec.disturbance_dim);
                    if (k < spec.horizon) {
                        u = inputs.row(k).transpose();
                        d = ctx.disturbance_forecast.row(k).transpose();
                    }
                    if (def->evaluator(x, u, d) > 1e-7) {
                        infeasible = true;
                        break;
                    }
                }
                if (infeasible) break;
            }
            if (infeasible) ++scan.infeasible;
        }
    }
    if (scan.fraction() <= 0.7) return std::nullopt;
    EvidenceBundle ev;
    ev.alternatives = scan;
    ev.evidence_tags = {"CFT"};
    return HypothesisOutcome{
        ev, hypothesis_confidence(HypothesisKind::Optimization, false)};
}

std::optional<HypothesisOutcome> eval_prediction(const OcpSpec& spec,
                                                 const DecisionContext& ctx,
                                                 const OcpSolution& sol,
                                                 const PipelineArtifacts& art) {
    const Vec neutral = neutral_input_of(spec);
    Mat rest_inputs = neutral.transpose().replicate(spec.horizon, 1);
    Mat rest_traj =
        rollout(spec, ctx.measured_state, rest_inputs, ctx.disturbance_forecast);
    auto rest_viol = trajectory_violations(spec, rest_traj, rest_inputs,
                                           ctx.disturbance_forecast,
                                           art.costs.tau_cost);
    if (rest_viol.empty()) return std::nullopt;

    // The chosen action must prevent the violation: the planned trajectory
    // stays clear of the same constraint.
    auto plan_viol = trajectory_violations(spec, sol.states, sol.inputs,
                                           ctx.disturbance_forecast,
                                           art.costs.tau_cost);
    std::set<ConstraintId> planned;
    for (const auto& v : plan_viol) planned.insert(v.id);
    for (const auto& v : rest_viol) {
        if (planned.count(v.id)) continue;
        EvidenceBundle ev;
        ev.prevented = PreventedViolation{v.id, v.stage, v.value};
        ev.evidence_tags = {"PRED"};
        return HypothesisOutcome{
            ev, hypothesis_confidence(HypothesisKind::Prediction, false)};
    }
    return std::nullopt;
}

std::optional<HypothesisOutcome> eval_economics(const OcpSpec& spec,
                                                const DecisionContext& ctx,
                                                const OcpSolution& sol) {
    const Vec neutral = neutral_input_of(spec);
    Mat rest_inputs = neutral.transpose().replicate(spec.horizon, 1);
    Mat rest_traj =
        rollout(spec, ctx.measured_state, rest_inputs, ctx.disturbance_forecast);
    EconomicsEvidence econ;
    econ.j_star = sol.total_cost;
    econ.j_zero =
        trajectory_cost(spec, rest_traj, rest_inputs, ctx.disturbance_forecast);
    econ.saving_fraction =
        (econ.j_zero - econ.j_star) / std::max(1e-12, std::abs(econ.j_zero));
    if (econ.saving_fraction <= 0.05) return std::nullopt;
    EvidenceBundle ev;
    ev.economics = econ;
    ev.evidence_tags = {"ECON"};
    return HypothesisOutcome{ev,
                             hypothesis_confidence(HypothesisKind::Economics, false)};
}

std::optional<HypothesisOutcome> eval_history(const OcpSpec& spec,
                                              const DecisionContext& ctx,
                                              const OcpSolution& sol,
                                              const PipelineArtifacts& art,
                                              std::vector<std::string>* flags) {
    if (!pcmci_available(ctx, art)) {
        if (flags) flags->push_back("pcmci-unavailable");
        return std::nullopt;
    }
    auto dom = dominant_actuator(spec, sol);
    if (!dom) return std::nullopt;
    const std::string actuator = input_name(spec, *dom);
    if (std::find(art.causal->variables.begin(), art.causal->variables.end(),
                  actuator) == art.causal->variables.end()) {
        if (flags) flags->push_back("no-causal-node:" + actuator);
        return std::nullopt;
    }
    auto parents = query_parents(*art.causal, actuator);
    if (parents.empty()) return std::nullopt;

    // Flags are computable only for parents covered by the carried
    // disturbance history; the rest count as inactive.
    EvidenceBundle ev;
    std::vector<ParentRef> coverable;
    std::set<std::string> columns;
    for (int j = 0; j < spec.disturbance_dim; ++j)
        columns.insert(disturbance_name(spec, j));
    int rows = static_cast<int>(ctx.disturbance_history.rows());
    for (const auto& p : parents) {
        if (columns.count(p.source) && p.lag < rows &&
            art.baselines->index_of(p.source) >= 0 &&
            p.lag <= art.baselines->tau_max) {
            coverable.push_back(p);
        } else {
            ev.uncertainty_flags.push_back("no-history:" + p.source + "@" +
                                           std::to_string(p.lag));
        }
    }
    std::vector<std::string> history_cols;
    for (int j = 0; j < spec.disturbance_dim; ++j)
        history_cols.push_back(disturbance_name(spec, j));
    if (!coverable.empty() && rows > 0) {
        ev.pcmci_flags = deviation_flags(*art.baselines, ctx.disturbance_history,
                                         history_cols, coverable);
    } else if (rows == 0) {
        if (flags) flags->push_back("history-unavailable");
        return std::nullopt;
    }
    int active = 0;
    for (const auto& f : ev.pcmci_flags)
        if (f.active) ++active;
    const double fraction = static_cast<double>(active) /
                            static_cast<double>(parents.size());
    if (!(fraction > 0.5)) return std::nullopt;
    ev.evidence_tags = {"PCMCI"};
    return HypothesisOutcome{ev,
                             hypothesis_confidence(HypothesisKind::History, false)};
}

}  // namespace

std::optional<HypothesisOutcome> evaluate_hypothesis(
    HypothesisKind kind, const OcpSpec& spec, const DecisionContext& ctx,
    const OcpSolution& sol, const PipelineArtifacts& art, const SolverConfig& cfg,
    std::vector<std::string>* flags_sink) {
    std::optional<HypothesisOutcome> out;
    switch (kind) {
        case HypothesisKind::Safety:
            out = eval_safety(spec, ctx, sol, art, cfg, flags_sink);
            break;
        case HypothesisKind::Optimization:
            out = eval_optimization(spec, ctx, sol, art, cfg);
            break;
        case HypothesisKind::Prediction:
            out = eval_prediction(spec, ctx, sol, art);
            break;
        case HypothesisKind::Economics:
            out = eval_economics(spec, ctx, sol);
            break;
        case HypothesisKind::History:
            out = eval_history(spec, ctx, sol, art, flags_sink);
            break;
    }
    // Guard: a supported hypothesis below 0.5 confidence is rejected.
    if (out && out->confidence < 0.5) return std::nullopt;
    return out;
}

ExplanationRecord generate_explanation(const OcpSpec& spec,
                                       const DecisionContext& ctx,
                                       const OcpSolution& sol,
                                       const PipelineArtifacts& art,
                                       const SolverConfig& cfg,
                                       const std::string& scenario_ref) {
    ExplanationRecord rec;
    rec.scenario_ref = scenario_ref;

    std::vector<std::string> availability_flags;
    for (HypothesisKind kind : kHypothesisOrder) {
        auto outcome =
            evaluate_hypothesis(kind, spec, ctx, sol, art, cfg, &availability_flags);
        if (outcome) {
            rec.selected = kind;
            rec.confidence = outcome->confidence;
            rec.evidence = std::move(outcome->evidence);
            break;  // first supported hypothesis is selected
        }
    }
    for (const auto& f : availability_flags)
        rec.evidence.uncertainty_flags.push_back(f);

    const bool kkt_ok = kkt_available(sol, art);
    const bool kg_ok = art.kg != nullptr;
    const bool pcmci_ok = pcmci_available(ctx, art);
    rec.degraded_mode = !kkt_ok || !kg_ok || !pcmci_ok || !rec.selected;

    // Historical-pattern context accompanies every explanation when the
    // lagged causal evidence exists, not only History selections.
    if (pcmci_ok && rec.evidence.pcmci_flags.empty() &&
        ctx.disturbance_history.rows() > 0) {
        auto dom = dominant_actuator(spec, sol);
        if (dom) {
            const std::string actuator = input_name(spec, *dom);
            if (std::find(art.causal->variables.begin(),
                          art.causal->variables.end(),
                          actuator) != art.causal->variables.end()) {
                std::vector<std::string> cols;
                for (int j = 0; j < spec.disturbance_dim; ++j)
                    cols.push_back(disturbance_name(spec, j));
                std::vector<ParentRef> coverable;
                for (const auto& p : query_parents(*art.causal, actuator)) {
                    if (std::find(cols.begin(), cols.end(), p.source) !=
                            cols.end() &&
                        p.lag < ctx.disturbance_history.rows() &&
                        art.baselines->index_of(p.source) >= 0 &&
                        p.lag <= art.baselines->tau_max)
                        coverable.push_back(p);
                }
                if (!coverable.empty())
                    rec.evidence.pcmci_flags = deviation_flags(
                        *art.baselines, ctx.disturbance_history, cols, coverable);
            }
        }
    }

    // The constraint the explanation pivots on, when there is one.
    std::optional<ConstraintId> pivot;
    if (rec.evidence.kkt_primary) pivot = rec.evidence.kkt_primary->id;
    else if (rec.evidence.counterfactual)
        pivot = rec.evidence.counterfactual->constraint;
    else if (rec.evidence.prevented) pivot = rec.evidence.prevented->id;

    // Deeper context: forward traversal from perturbed disturbances (all
    // of them when no baselines can say which are unusual) and backward
    // traversal from the pivot constraint's variable.
    auto zmap = forecast_z_scores(spec, ctx, art);
    ConditionContext cond;
    for (int i = 0; i < spec.state_dim &&
                    static_cast<int>(spec.state_names.size()) == spec.state_dim;
         ++i)
        cond[spec.state_names[i]] = ctx.measured_state(i);
    for (int j = 0; j < spec.disturbance_dim; ++j)
        cond[disturbance_name(spec, j)] = ctx.disturbance_forecast(0, j);

    std::vector<std::string> perturbed;
    if (art.kg) {
        for (int j = 0; j < spec.disturbance_dim; ++j) {
            const std::string name = disturbance_name(spec, j);
            if (!art.kg->has_node(name)) continue;
            auto it = zmap.find(name);
            if (it == zmap.end() || std::abs(it->second) > 2.0)
                perturbed.push_back(name);
        }
        if (perturbed.empty()) {
            // Nothing unusual in the forecast: trace every disturbance so
            // the physical context is still reported.
            for (int j = 0; j < spec.disturbance_dim; ++j) {
                const std::string name = disturbance_name(spec, j);
                if (art.kg->has_node(name)) perturbed.push_back(name);
            }
        }
        rec.supporting_context =
            forward_trace(*art.kg, perturbed, art.kg_max_depth, &cond);
        if (pivot) {
            const ConstraintDef* def = spec.find_constraint(*pivot);
            if (def && !def->variable.empty() && art.kg->has_node(def->variable)) {
                auto back =
                    backward_trace(*art.kg, def->variable, art.kg_max_depth, &cond);
                for (auto& c : back) rec.supporting_context.push_back(std::move(c));
            }
        }
    }

    // Observed effects: the sign of each actuator change and its direct
    // graph-predicted state effects.
    const Vec neutral = neutral_input_of(spec);
    for (int i = 0; i < spec.input_dim; ++i) {
        const double delta = sol.inputs(0, i) - neutral(i);
        if (std::abs(delta) < 1e-6) continue;
        ObservedEffect oe;
        oe.actuator = input_name(spec, i);
        oe.delta = delta;
        if (art.kg) {
            auto chains = forward_trace(*art.kg, {oe.actuator}, 1, &cond);
            for (const auto& c : chains) {
                ObservedEffect::Effect e;
                e.variable = c.path.back();
                e.sign = c.composite_sign;
                if (c.composite_sign == ChainSign::Indeterminate) e.direction = 0;
                else {
                    const int s = c.composite_sign == ChainSign::Positive ? 1 : -1;
                    e.direction = delta > 0 ? s : -s;
                }
                oe.effects.push_back(e);
            }
        }
        rec.observed_effects.push_back(std::move(oe));
    }

    // Ranked causal factors: the pivot constraint (or the economics label)
    // first, then disturbance drivers ordered by deviation evidence.
    if (rec.selected == HypothesisKind::Economics) {
        rec.predicted_factors.push_back("economic_optimization");
    }
    if (pivot) rec.predicted_factors.push_back(*pivot);

    struct Driver {
        std::string name;
        double z_mag = 0.0;
        bool in_kg = false;
    };
    std::map<std::string, Driver> drivers;
    auto note_driver = [&](const std::string& name, double z, bool in_kg) {
        auto& d = drivers[name];
        d.name = name;
        d.z_mag = std::max(d.z_mag, std::abs(z));
        d.in_kg = d.in_kg || in_kg;
    };
    for (const auto& c : rec.supporting_context) {
        const std::string& origin = c.path.front();
        if (art.kg && art.kg->role(origin) == NodeRole::Disturbance) {
            auto it = zmap.find(origin);
            note_driver(origin, it != zmap.end() ? it->second : 0.0, true);
        }
    }
    for (const auto& f : rec.evidence.pcmci_flags)
        if (f.active) note_driver(f.source, f.z_score, false);
    if (rec.selected == HypothesisKind::History) {
        // Parents themselves are the story; surface them even when the
        // graph lacks a matching chain.
        for (const auto& f : rec.evidence.pcmci_flags)
            note_driver(f.source, f.z_score, false);
    }
    std::vector<Driver> ranked;
    for (auto& [name, d] : drivers) ranked.push_back(d);
    std::sort(ranked.begin(), ranked.end(), [](const Driver& a, const Driver& b) {
        if (a.z_mag != b.z_mag) return a.z_mag > b.z_mag;
        return a.name < b.name;
    });
    for (const auto& d : ranked) rec.predicted_factors.push_back(d.name);

    Narrative n = render_narrative(rec);
    rec.narrative = std::move(n.text);
    rec.statements = std::move(n.statements);
    return rec;
}

namespace {

void add_statement(Narrative& n, std::string text, EvidenceSource tag) {
    n.statements.push_back({text, tag});
    n.text += text;
    n.text += "\n";
}

}  // namespace

Narrative render_narrative(const ExplanationRecord& rec) {
    Narrative n;
    if (!rec.selected) {
        n.text = "Primary Reason:\n";
        add_statement(n,
                      "Insufficient evidence: no hypothesis is supported by the "
                      "available sources at this decision instant.",
                      EvidenceSource::Meta);
        if (!rec.evidence.uncertainty_flags.empty()) {
            std::string f = "Unavailable or uncertain evidence:";
            for (const auto& u : rec.evidence.uncertainty_flags) f += " " + u + ";";
            add_statement(n, f, EvidenceSource::Meta);
        }
        return n;
    }

    const EvidenceBundle& ev = rec.evidence;

    n.text += "Primary Reason:\n";
    switch (*rec.selected) {
        case HypothesisKind::Safety:
            if (ev.counterfactual) {
                add_statement(
                    n,
                    "The action holds constraint \"" + ev.counterfactual->constraint +
                        "\" which would otherwise be violated over the horizon.",
                    EvidenceSource::Counterfactual);
            }
            break;
        case HypothesisKind::Optimization:
            add_statement(n,
                          "Cheaper alternative actions are largely infeasible; the "
                          "chosen action is the workable optimum.",
                          EvidenceSource::Counterfactual);
            break;
        case HypothesisKind::Prediction:
            if (ev.prevented)
                add_statement(n,
                              "The action preempts a predicted violation of \"" +
                                  ev.prevented->id + "\" at stage " +
                                  std::to_string(ev.prevented->stage) + ".",
                              EvidenceSource::Forecast);
            break;
        case HypothesisKind::Economics:
            if (ev.economics)
                add_statement(
                    n,
                    "The action reduces total cost by " +
                        format_number(100.0 * ev.economics->saving_fraction) +
                        "% against the no-action baseline.",
                    EvidenceSource::Counterfactual);
            break;
        case HypothesisKind::History:
            add_statement(n,
                          "The action matches historical causal patterns of this "
                          "actuator under similar disturbances.",
                          EvidenceSource::Pcmci);
            break;
    }
    add_statement(n,
                  "Selected hypothesis: " + std::string(to_string(*rec.selected)) +
                      " (confidence " + format_number(rec.confidence) + ").",
                  EvidenceSource::Meta);

    n.text += "\nMathematical Evidence:\n";
    if (ev.kkt_primary) {
        add_statement(n,
                      "Constraint \"" + ev.kkt_primary->id + "\" at stage " +
                          std::to_string(ev.kkt_primary->stage) +
                          " carries the largest normalized multiplier (lambda = " +
                          format_number(ev.kkt_primary->lambda) + ").",
                      EvidenceSource::Kkt);
        add_statement(n,
                      std::to_string(ev.kkt_active.size()) +
                          " constraint instance(s) exceed their calibrated "
                          "multiplier thresholds.",
                      EvidenceSource::Kkt);
    } else if (rec.selected == HypothesisKind::Safety && ev.counterfactual) {
        add_statement(n,
                      "The comfort band is enforced through penalty terms in the "
                      "stage cost; its removal changes the optimal plan (delta-J "
                      "= " + format_number(ev.counterfactual->delta_j) + ").",
                      EvidenceSource::Counterfactual);
    } else if (ev.alternatives) {
        add_statement(n,
                      format_number(100.0 * ev.alternatives->fraction()) +
                          "% of the discretized alternative actions are "
                          "infeasible (" + std::to_string(ev.alternatives->infeasible) +
                          " of " + std::to_string(ev.alternatives->total) + ").",
                      EvidenceSource::Counterfactual);
    } else if (ev.economics) {
        add_statement(n,
                      "Planned cost " + format_number(ev.economics->j_star) +
                          " versus baseline " + format_number(ev.economics->j_zero) +
                          ".",
                      EvidenceSource::Counterfactual);
    } else {
        add_statement(n, "No multiplier evidence is available for this decision.",
                      EvidenceSource::Meta);
    }

    n.text += "\nPredictive Justification:\n";
    if (ev.counterfactual && ev.counterfactual->violation_found) {
        std::string stage_txt =
            ev.counterfactual->violation_stage
                ? " (worst at stage " +
                      std::to_string(*ev.counterfactual->violation_stage) + ")"
                : "";
        add_statement(n,
                      "Re-solving with \"" + ev.counterfactual->constraint +
                          "\" relaxed changes the plan and the relaxed trajectory "
                          "violates it" + stage_txt + "; the action is causally "
                          "necessary (" + to_string(ev.counterfactual->classification) +
                          ").",
                      EvidenceSource::Counterfactual);
    } else if (ev.prevented) {
        add_statement(n,
                      "Without actuation the forecast trajectory violates \"" +
                          ev.prevented->id + "\" by " +
                          format_number(ev.prevented->value) + " at stage " +
                          std::to_string(ev.prevented->stage) +
                          "; the planned trajectory stays clear.",
                      EvidenceSource::Forecast);
    } else if (ev.economics) {
        add_statement(n,
                      "The no-action baseline costs " +
                          format_number(ev.economics->j_zero) +
                          "; acting is predicted to cost " +
                          format_number(ev.economics->j_star) + ".",
                      EvidenceSource::Forecast);
    } else {
        add_statement(n, "No counterfactual re-solve was required.",
                      EvidenceSource::Meta);
    }

    n.text += "\nPhysical & Historical Context:\n";
    bool any_context = false;
    std::set<std::string> seen_chains;
    for (const auto& c : rec.supporting_context) {
        if (c.path.size() < 2) continue;
        std::string key = c.path.front() + ">" + c.path.back();
        if (!seen_chains.insert(key).second) continue;
        std::string arrow;
        for (size_t i = 0; i < c.path.size(); ++i) {
            if (i) arrow += " -> ";
            arrow += c.path[i];
        }
        add_statement(n,
                      "Physics chain " + arrow + " (sign " +
                          to_string(c.composite_sign) + ").",
                      EvidenceSource::Kg);
        any_context = true;
        if (seen_chains.size() >= 6) break;
    }
    for (const auto& f : ev.pcmci_flags) {
        std::string z = std::isinf(f.z_score) ? (f.z_score > 0 ? "+inf" : "-inf")
                                              : format_number(f.z_score);
        add_statement(n,
                      "Learned parent " + f.source + " at lag " +
                          std::to_string(f.lag) + " deviates " + z +
                          " sigma from its historical mean (" +
                          (f.active ? "active" : "inactive") + ").",
                      EvidenceSource::Pcmci);
        any_context = true;
    }
    for (const auto& oe : rec.observed_effects) {
        std::string line = "Actuator " + oe.actuator + " moved by " +
                           format_number(oe.delta) + " from rest";
        if (!oe.effects.empty()) {
            line += ", pushing";
            for (size_t i = 0; i < oe.effects.size(); ++i) {
                const auto& e = oe.effects[i];
                line += std::string(i ? "," : "") + " " + e.variable +
                        (e.direction > 0 ? " up" : e.direction < 0 ? " down"
                                                                   : " (direction unresolved)");
            }
        }
        line += ".";
        add_statement(n, line, EvidenceSource::CurrentState);
        any_context = true;
    }
    if (!any_context)
        add_statement(n, "No physical or historical context is available.",
                      EvidenceSource::Meta);
    if (rec.degraded_mode)
        add_statement(n,
                      "Note: one or more evidence sources were unavailable; this "
                      "explanation runs in degraded mode.",
                      EvidenceSource::Meta);
    return n;
}

}  // namespace xmpc

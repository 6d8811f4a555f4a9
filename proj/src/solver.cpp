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

#include "xmpc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xmpc/qp.hpp"

namespace xmpc {
namespace {

// Decision vector layout: z = [u_0 .. u_{H-1}, x_1 .. x_H].
struct Transcription {
    const OcpSpec& spec;
    const DecisionContext& ctx;
    const SolverConfig& cfg;
    int H, nx, nu, nd, nz, neq;

    struct IneqRow {
        const ConstraintDef* def;  // null for input-bound rows
        int stage;
        int input_index;  // input-bound rows only
        bool upper;       // input-bound rows only
    };
    std::vector<IneqRow> rows;
    std::vector<const ConstraintDef*> terminal_soft;

    Transcription(const OcpSpec& s, const DecisionContext& c, const SolverConfig& f)
        : spec(s), ctx(c), cfg(f) {
        H = spec.horizon;
        nx = spec.state_dim;
        nu = spec.input_dim;
        nd = spec.disturbance_dim;
        nz = H * nu + H * nx;
        neq = H * nx;
        for (const auto& def : spec.path_constraints) {
            if (def.kind != ConstraintKind::HardInequality) continue;
            for (int k : def.stages) rows.push_back({&def, k, -1, false});
        }
        for (const auto& def : spec.terminal_constraints) {
            if (def.kind != ConstraintKind::HardInequality) continue;
            rows.push_back({&def, H, -1, false});
        }
        for (const auto& def : spec.path_constraints) {
            if (def.kind != ConstraintKind::SoftPenalty) continue;
            for (int k : def.stages)
                if (k == H) terminal_soft.push_back(&def);
        }
        for (const auto& def : spec.terminal_constraints)
            if (def.kind == ConstraintKind::SoftPenalty)
                terminal_soft.push_back(&def);
        for (int k = 0; k < H; ++k)
            for (int i = 0; i < nu; ++i) {
                if (std::isfinite(spec.input_bounds(i, 0)))
                    rows.push_back({nullptr, k, i, false});
                if (std::isfinite(spec.input_bounds(i, 1)))
                    rows.push_back({nullptr, k, i, true});
            }
    }

    int u_off(int k) const { return k * nu; }
    int x_off(int k) const { return H * nu + (k - 1) * nx; }  // k >= 1

    Vec state_at(const Vec& z, int k) const {
        if (k == 0) return ctx.measured_state;
        return z.segment(x_off(k), nx);
    }
    Vec input_at(const Vec& z, int k) const { return z.segment(u_off(k), nu); }
    Vec dist_at(int k) const { return ctx.disturbance_forecast.row(k).transpose(); }

    // Effective stage cost: declared stage cost plus soft penalties.
    double stage_eff(int k, const Vec& x, const Vec& u) const {
        double c = spec.stage_cost(x, u);
        const Vec d = dist_at(k);
        for (const auto& def : spec.path_constraints) {
            if (def.kind != ConstraintKind::SoftPenalty) continue;
            if (std::find(def.stages.begin(), def.stages.end(), k) ==
                def.stages.end())
                continue;
            c += def.evaluator(x, u, d);
        }
        return c;
    }

    double terminal_eff(const Vec& x) const {
        double c = spec.terminal_cost(x);
        const Vec u0 = Vec::Zero(nu);
        const Vec d0 = Vec::Zero(nd);
        for (const auto* def : terminal_soft) c += def->evaluator(x, u0, d0);
        return c;
    }

    double total_cost(const Vec& z) const {
        double c = 0.0;
        for (int k = 0; k < H; ++k) c += stage_eff(k, state_at(z, k), input_at(z, k));
        c += terminal_eff(state_at(z, H));
        return c;
    }

    Vec defects(const Vec& z) const {
        Vec e(neq);
        for (int k = 0; k < H; ++k) {
            Vec next = spec.dynamics(state_at(z, k), input_at(z, k), dist_at(k));
            e.segment(k * nx, nx) = state_at(z, k + 1) - next;
        }
        return e;
    }

    double ineq_value(const Vec& z, const IneqRow& row) const {
        if (row.def) {
            const Vec x = state_at(z, row.stage);
            const Vec u = row.stage < H ? input_at(z, row.stage) : Vec::Zero(nu);
            const Vec d = row.stage < H ? dist_at(row.stage) : Vec::Zero(nd);
            return row.def->evaluator(x, u, d);
        }
        double u = z(u_off(row.stage) + row.input_index);
        double lo = spec.input_bounds(row.input_index, 0);
        double hi = spec.input_bounds(row.input_index, 1);
        return row.upper ? u - hi : lo - u;
    }

    Vec ineq_values(const Vec& z) const {
        Vec g(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) g(i) = ineq_value(z, rows[i]);
        return g;
    }

    // Central differences with per-coordinate relative steps.
    Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& v) const {
        Vec g(v.size());
        Vec w = v;
        for (int i = 0; i < v.size(); ++i) {
            double h = cfg.finite_difference_step * (1.0 + std::abs(v(i)));
            w(i) = v(i) + h;
            double fp = f(w);
            w(i) = v(i) - h;
            double fm = f(w);
            w(i) = v(i);
            g(i) = (fp - fm) / (2.0 * h);
        }
        return g;
    }

    Mat fd_hess(const std::function<double(const Vec&)>& f, const Vec& v) const {
        const int n = static_cast<int>(v.size());
        Mat Hh(n, n);
        Vec w = v;
        const double f0 = f(v);
        Vec hs(n);
        for (int i = 0; i < n; ++i)
            hs(i) = cfg.hessian_fd_step * (1.0 + std::abs(v(i)));
        for (int i = 0; i < n; ++i) {
            w(i) = v(i) + hs(i);
            double fp = f(w);
            w(i) = v(i) - hs(i);
            double fm = f(w);
            w(i) = v(i);
            Hh(i, i) = (fp - 2.0 * f0 + fm) / (hs(i) * hs(i));
            for (int j = i + 1; j < n; ++j) {
                w(i) = v(i) + hs(i); w(j) = v(j) + hs(j);
                double fpp = f(w);
                w(j) = v(j) - hs(j);
                double fpm = f(w);
                w(i) = v(i) - hs(i);
                double fmm = f(w);
                w(j) = v(j) + hs(j);
                double fmp = f(w);
                w(i) = v(i); w(j) = v(j);
                Hh(i, j) = Hh(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hs(i) * hs(j));
            }
        }
        return Hh;
    }

    // Gradient of the total cost, assembled stage by stage.
    Vec cost_grad(const Vec& z) const {
        Vec g = Vec::Zero(nz);
        for (int k = 0; k < H; ++k) {
            const Vec x = state_at(z, k);
            const Vec u = input_at(z, k);
            if (k == 0) {
                auto fu = [&](const Vec& uu) { return stage_eff(0, x, uu); };
                g.segment(u_off(0), nu) += fd_grad(fu, u);
            } else {
                Vec xu(nx + nu);
                xu << x, u;
                auto fxu = [&](const Vec& v) {
                    return stage_eff(k, v.head(nx), v.tail(nu));
                };
                Vec gk = fd_grad(fxu, xu);
                g.segment(x_off(k), nx) += gk.head(nx);
                g.segment(u_off(k), nu) += gk.tail(nu);
            }
        }
        auto ft = [&](const Vec& xx) { return terminal_eff(xx); };
        g.segment(x_off(H), nx) += fd_grad(ft, state_at(z, H));
        return g;
    }

    // Block-diagonal Lagrangian Hessian: stage-cost curvature plus the
    // dynamics curvature weighted by the (lagged) equality duals. The
    // defect is x_{k+1} - f(x_k,u_k,d_k), so its curvature contribution on
    // the (x_k,u_k) block is -nu_k' d2f.
    Mat cost_hess(const Vec& z, const Vec& eq_duals) const {
        Mat Hc = Mat::Zero(nz, nz);
        for (int k = 0; k < H; ++k) {
            const Vec x = state_at(z, k);
            const Vec u = input_at(z, k);
            const Vec d = dist_at(k);
            Vec nu_k = Vec::Zero(nx);
            if (eq_duals.size() == neq) nu_k = eq_duals.segment(k * nx, nx);
            if (k == 0) {
                auto fu = [&](const Vec& uu) {
                    return stage_eff(0, x, uu) - nu_k.dot(spec.dynamics(x, uu, d));
                };
                Hc.block(u_off(0), u_off(0), nu, nu) += psd_project(fd_hess(fu, u));
            } else {
                Vec xu(nx + nu);
                xu << x, u;
                auto fxu = [&](const Vec& v) {
                    return stage_eff(k, v.head(nx), v.tail(nu)) -
                           nu_k.dot(spec.dynamics(v.head(nx), v.tail(nu), d));
                };
                Mat Hk = psd_project(fd_hess(fxu, xu));
                Hc.block(x_off(k), x_off(k), nx, nx) += Hk.topLeftCorner(nx, nx);
                Hc.block(x_off(k), u_off(k), nx, nu) += Hk.topRightCorner(nx, nu);
                Hc.block(u_off(k), x_off(k), nu, nx) += Hk.bottomLeftCorner(nu, nx);
                Hc.block(u_off(k), u_off(k), nu, nu) += Hk.bottomRightCorner(nu, nu);
            }
        }
        auto ft = [&](const Vec& xx) { return terminal_eff(xx); };
        Hc.block(x_off(H), x_off(H), nx, nx) +=
            psd_project(fd_hess(ft, state_at(z, H)));
        return Hc;
    }

    // Modified-Newton treatment per stage block: negative eigenvalues are
    // replaced by their magnitude, which keeps the curvature scale of
    // nonconvex directions instead of flattening them.
    static Mat psd_project(const Mat& Hk) {
        Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (Hk + Hk.transpose()));
        Vec vals = eig.eigenvalues();
        const double floor_val = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
        for (int i = 0; i < vals.size(); ++i)
            vals(i) = std::max(std::abs(vals(i)), floor_val);
        return eig.eigenvectors() * vals.asDiagonal() *
               eig.eigenvectors().transpose();
    }

    // Jacobian of the dynamics defects (equality constraints).
    Mat defect_jacobian(const Vec& z) const {
        Mat J = Mat::Zero(neq, nz);
        for (int k = 0; k < H; ++k) {
            const Vec x = state_at(z, k);
            const Vec u = input_at(z, k);
            const Vec d = dist_at(k);
            J.block(k * nx, x_off(k + 1), nx, nx) = Mat::Identity(nx, nx);
            Mat A(nx, nx), B(nx, nu);
            Vec w = x;
            for (int i = 0; i < nx; ++i) {
                double h = cfg.finite_difference_step * (1.0 + std::abs(x(i)));
                w(i) = x(i) + h;
                Vec fp = spec.dynamics(w, u, d);
                w(i) = x(i) - h;
                Vec fm = spec.dynamics(w, u, d);
                w(i) = x(i);
                A.col(i) = (fp - fm) / (2.0 * h);
            }
            Vec wu = u;
            for (int i = 0; i < nu; ++i) {
                double h = cfg.finite_difference_step * (1.0 + std::abs(u(i)));
                wu(i) = u(i) + h;
                Vec fp = spec.dynamics(x, wu, d);
                wu(i) = u(i) - h;
                Vec fm = spec.dynamics(x, wu, d);
                wu(i) = u(i);
                B.col(i) = (fp - fm) / (2.0 * h);
            }
            if (k >= 1) J.block(k * nx, x_off(k), nx, nx) = -A;
            J.block(k * nx, u_off(k), nx, nu) = -B;
        }
        return J;
    }

    Mat ineq_jacobian(const Vec& z) const {
        Mat J = Mat::Zero(static_cast<int>(rows.size()), nz);
        for (size_t r = 0; r < rows.size(); ++r) {
            const IneqRow& row = rows[r];
            if (!row.def) {
                int col = u_off(row.stage) + row.input_index;
                J(static_cast<int>(r), col) = row.upper ? 1.0 : -1.0;
                continue;
            }
            const int k = row.stage;
            const Vec x = state_at(z, k);
            const Vec u = k < H ? input_at(z, k) : Vec::Zero(nu);
            const Vec d = k < H ? dist_at(k) : Vec::Zero(nd);
            const auto& ev = row.def->evaluator;
            // d/dx
            if (k >= 1) {
                Vec w = x;
                for (int i = 0; i < nx; ++i) {
                    double h = cfg.finite_difference_step * (1.0 + std::abs(x(i)));
                    w(i) = x(i) + h;
                    double fp = ev(w, u, d);
                    w(i) = x(i) - h;
                    double fm = ev(w, u, d);
                    w(i) = x(i);
                    J(static_cast<int>(r), x_off(k) + i) = (fp - fm) / (2.0 * h);
                }
            }
            // d/du
            if (k < H) {
                Vec wu = u;
                for (int i = 0; i < nu; ++i) {
                    double h = cfg.finite_difference_step * (1.0 + std::abs(u(i)));
                    wu(i) = u(i) + h;
                    double fp = ev(x, wu, d);
                    wu(i) = u(i) - h;
                    double fm = ev(x, wu, d);
                    wu(i) = u(i);
                    J(static_cast<int>(r), u_off(k) + i) = (fp - fm) / (2.0 * h);
                }
            }
        }
        return J;
    }

    Vec initial_iterate() const {
        Vec u0 = spec.neutral_input.size() == nu ? spec.neutral_input
                                                 : Vec::Zero(nu);
        for (int i = 0; i < nu; ++i)
            u0(i) = std::clamp(u0(i), spec.input_bounds(i, 0), spec.input_bounds(i, 1));
        Mat inputs = u0.transpose().replicate(H, 1);
        Mat traj = rollout(spec, ctx.measured_state, inputs, ctx.disturbance_forecast);
        Vec z(nz);
        for (int k = 0; k < H; ++k) z.segment(u_off(k), nu) = u0;
        for (int k = 1; k <= H; ++k) z.segment(x_off(k), nx) = traj.row(k).transpose();
        return z;
    }

    // Characteristic magnitudes per decision variable, taken from the
    // measured state and the input box; the subproblem is solved in these
    // units so that regularization and steps are relative.
    Vec variable_scales() const {
        Vec s = Vec::Ones(nz);
        for (int i = 0; i < nu; ++i) {
            double m = 1.0;
            if (std::isfinite(spec.input_bounds(i, 0)))
                m = std::max(m, std::abs(spec.input_bounds(i, 0)));
            if (std::isfinite(spec.input_bounds(i, 1)))
                m = std::max(m, std::abs(spec.input_bounds(i, 1)));
            for (int k = 0; k < H; ++k) s(u_off(k) + i) = m;
        }
        for (int i = 0; i < nx; ++i) {
            const double m = std::max(1.0, std::abs(ctx.measured_state(i)));
            for (int k = 1; k <= H; ++k) s(x_off(k) + i) = m;
        }
        return s;
    }
};

double l1_violation(const Vec& eq, const Vec& ineq) {
    double v = eq.cwiseAbs().sum();
    for (int i = 0; i < ineq.size(); ++i) v += std::max(0.0, ineq(i));
    return v;
}

// Elastic fallback: minimize the QP objective plus a big-M slack penalty on
// the inequalities. Used to distinguish genuinely infeasible problems from
// transient linearization infeasibility.
QpResult solve_elastic(const QpProblem& qp, double big_m, double reg) {
    const int n = static_cast<int>(qp.H.rows());
    const int m = static_cast<int>(qp.A_in.rows());
    QpProblem ext;
    ext.H = Mat::Zero(n + m, n + m);
    ext.H.topLeftCorner(n, n) = qp.H;
    ext.H.bottomRightCorner(m, m) = reg * Mat::Identity(m, m);
    ext.g = Vec::Zero(n + m);
    ext.g.head(n) = qp.g;
    ext.g.tail(m).setConstant(big_m);
    ext.A_eq = Mat::Zero(qp.A_eq.rows(), n + m);
    ext.A_eq.leftCols(n) = qp.A_eq;
    ext.b_eq = qp.b_eq;
    ext.A_in = Mat::Zero(2 * m, n + m);
    ext.A_in.topLeftCorner(m, n) = qp.A_in;
    ext.A_in.topRightCorner(m, m) = -Mat::Identity(m, m);
    ext.A_in.bottomRightCorner(m, m) = -Mat::Identity(m, m);
    ext.b_in = Vec::Zero(2 * m);
    ext.b_in.head(m) = qp.b_in;
    return solve_qp(ext);
}

OcpSolution run_sqp(const OcpSpec& spec, const DecisionContext& ctx,
                    const SolverConfig& cfg) {
    auto report = validate_spec(spec);
    if (!report.ok())
        throw std::invalid_argument("solve: invalid spec: " +
                                    report.violations.front().message);
    if (ctx.measured_state.size() != spec.state_dim)
        throw std::invalid_argument("solve: measured_state dimension mismatch");
    if (ctx.disturbance_forecast.rows() != spec.horizon ||
        ctx.disturbance_forecast.cols() != spec.disturbance_dim)
        throw std::invalid_argument("solve: forecast must be H x disturbance_dim");

    Transcription tr(spec, ctx, cfg);
    Vec z = tr.initial_iterate();
    const Vec scales = tr.variable_scales();

    const int n_in = static_cast<int>(tr.rows.size());
    OcpSolution sol;
    sol.status = SolverStatus::MaxIterations;

    double merit_mu = 1.0;
    Vec last_in_duals = Vec::Zero(n_in);
    Vec last_eq_duals = Vec::Zero(tr.neq);
    bool infeasible_flagged = false;
    int tiny_steps = 0;

    int iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        const Vec grad = tr.cost_grad(z);
        const Vec eq = tr.defects(z);
        const Vec gi = tr.ineq_values(z);
        const Mat Je = tr.defect_jacobian(z);
        const Mat Ji = tr.ineq_jacobian(z);

        // Subproblem in scaled variables d~ with dz = S d~: curvature and
        // regularization become relative to each variable's magnitude.
        QpProblem qp;
        qp.g = scales.asDiagonal() * grad;
        qp.A_eq = Je * scales.asDiagonal();
        qp.b_eq = -eq;
        qp.A_in = Ji * scales.asDiagonal();
        qp.b_in = -gi;

        double reg = cfg.regularization;
        Mat Hc = scales.asDiagonal() * tr.cost_hess(z, last_eq_duals) *
                 scales.asDiagonal();
        QpResult qr;
        for (int attempt = 0; attempt < 14; ++attempt) {
            qp.H = Hc + reg * Mat::Identity(tr.nz, tr.nz);
            qr = solve_qp(qp);
            if (qr.status != QpStatus::NotPositiveDefinite &&
                qr.status != QpStatus::Degenerate)
                break;
            reg = std::max(reg * 10.0, 1e-10);
        }

        if (qr.status == QpStatus::Infeasible) {
            double big_m = 1e6 * (1.0 + grad.cwiseAbs().maxCoeff());
            QpResult er = solve_elastic(qp, big_m, 1.0);
            if (er.status != QpStatus::Optimal) {
                infeasible_flagged = true;
                break;
            }
            double smax = er.x.tail(n_in).maxCoeff();
            if (smax > 1e-6) {
                infeasible_flagged = true;
                break;
            }
            qr = er;
            qr.x = er.x.head(tr.nz).eval();
            qr.in_duals = er.in_duals.head(n_in).eval();
        }
        if (qr.status != QpStatus::Optimal) break;

        const Vec dz = scales.asDiagonal() * qr.x.head(tr.nz);
        const double scaled_step = qr.x.head(tr.nz).cwiseAbs().maxCoeff();
        last_in_duals = qr.in_duals.head(n_in);
        last_eq_duals = qr.eq_duals;

        // KKT residual at the current iterate with fresh QP duals.
        Vec stat = grad + Je.transpose() * qr.eq_duals +
                   Ji.transpose() * last_in_duals;
        double stat_res = stat.cwiseAbs().maxCoeff() /
                          (1.0 + grad.cwiseAbs().maxCoeff());
        double feas_res = 0.0;
        if (eq.size() > 0) feas_res = eq.cwiseAbs().maxCoeff();
        for (int i = 0; i < n_in; ++i) feas_res = std::max(feas_res, gi(i));
        double comp_res = 0.0;
        double lam_max = last_in_duals.size() ? last_in_duals.maxCoeff() : 0.0;
        for (int i = 0; i < n_in; ++i)
            comp_res = std::max(comp_res, std::abs(last_in_duals(i) * gi(i)));
        comp_res /= (1.0 + lam_max);
        double kkt = std::max({stat_res, feas_res, comp_res});
        sol.kkt_residual = kkt;

        if (cfg.trace) {
            std::ostringstream os;
            os << "iter=" << iter << " |z|=" << z.norm() << " kkt=" << kkt
               << " active=[";
            bool first = true;
            for (int i = 0; i < n_in; ++i) {
                if (last_in_duals(i) <= 0.0) continue;
                if (!first) os << ",";
                first = false;
                if (tr.rows[i].def)
                    os << tr.rows[i].def->id << "@" << tr.rows[i].stage;
                else
                    os << "u" << tr.rows[i].input_index << "@" << tr.rows[i].stage
                       << (tr.rows[i].upper ? "+" : "-");
            }
            os << "]";
            cfg.trace(os.str());
        }

        if (kkt <= cfg.kkt_tolerance) {
            sol.status = SolverStatus::Optimal;
            break;
        }

        // One extra polishing iteration is allowed at negligible step size
        // (the residual check above runs on fresh derivatives first).
        if (scaled_step < cfg.step_tolerance) {
            if (++tiny_steps >= 2) break;
        } else {
            tiny_steps = 0;
        }

        // l1 merit line search.
        double dual_inf = lam_max;
        if (qr.eq_duals.size() > 0)
            dual_inf = std::max(dual_inf, qr.eq_duals.cwiseAbs().maxCoeff());
        merit_mu = std::max(merit_mu, 1.5 * dual_inf + 1.0);
        double viol0 = l1_violation(eq, gi);
        double f0 = tr.total_cost(z);
        double phi0 = f0 + merit_mu * viol0;
        double ddir = grad.dot(dz) - merit_mu * viol0;

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            Vec zn = z + alpha * dz;
            double phin = tr.total_cost(zn) +
                          merit_mu * l1_violation(tr.defects(zn), tr.ineq_values(zn));
            if (phin <= phi0 + 1e-4 * alpha * ddir + 1e-14 * (1.0 + std::abs(phi0))) {
                z = zn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // merit stall: report best iterate as max-iter
    }

    sol.iterations = iter;
    if (infeasible_flagged) sol.status = SolverStatus::Infeasible;

    // Assemble the trajectory view of the final iterate.
    sol.inputs = Mat(tr.H, tr.nu);
    sol.states = Mat(tr.H + 1, tr.nx);
    sol.states.row(0) = ctx.measured_state.transpose();
    for (int k = 0; k < tr.H; ++k)
        sol.inputs.row(k) = tr.input_at(z, k).transpose();
    for (int k = 1; k <= tr.H; ++k)
        sol.states.row(k) = tr.state_at(z, k).transpose();
    sol.total_cost = tr.total_cost(z);

    for (size_t r = 0; r < tr.rows.size(); ++r) {
        const auto& row = tr.rows[r];
        if (!row.def) continue;
        sol.multipliers[{row.def->id, row.stage}] = last_in_duals(static_cast<int>(r));
    }
    return sol;
}

std::function<double(const Vec&, const Vec&, const Vec&)> shifted_evaluator(
    const ConstraintDef& def, double delta) {
    if (def.make_evaluator) return def.make_evaluator(def.bound + delta);
    auto base = def.evaluator;
    return [base, delta](const Vec& x, const Vec& u, const Vec& d) {
        return base(x, u, d) - delta;
    };
}

}  // namespace

double trajectory_cost(const OcpSpec& spec, const Mat& states, const Mat& inputs,
                       const Mat& disturbances) {
    double c = 0.0;
    for (int k = 0; k < spec.horizon; ++k) {
        const Vec x = states.row(k).transpose();
        const Vec u = inputs.row(k).transpose();
        c += spec.stage_cost(x, u);
        const Vec d = disturbances.row(k).transpose();
        for (const auto& def : spec.path_constraints) {
            if (def.kind != ConstraintKind::SoftPenalty) continue;
            if (std::find(def.stages.begin(), def.stages.end(), k) ==
                def.stages.end())
                continue;
            c += def.evaluator(x, u, d);
        }
    }
    const Vec xh = states.row(spec.horizon).transpose();
    c += spec.terminal_cost(xh);
    const Vec u0 = Vec::Zero(spec.input_dim);
    const Vec d0 = Vec::Zero(spec.disturbance_dim);
    for (const auto& def : spec.path_constraints) {
        if (def.kind != ConstraintKind::SoftPenalty) continue;
        if (std::find(def.stages.begin(), def.stages.end(), spec.horizon) ==
            def.stages.end())
            continue;
        c += def.evaluator(xh, u0, d0);
    }
    for (const auto& def : spec.terminal_constraints)
        if (def.kind == ConstraintKind::SoftPenalty) c += def.evaluator(xh, u0, d0);
    return c;
}

OcpSolution solve(const OcpSpec& spec, const DecisionContext& ctx,
                  const SolverConfig& cfg) {
    return run_sqp(spec, ctx, cfg);
}

OcpSpec apply_directives(const OcpSpec& spec,
                         const std::vector<RelaxationDirective>& directives,
                         bool enforce_widening) {
    OcpSpec out = spec;
    for (const auto& dir : directives) {
        bool found = false;
        auto apply_list = [&](std::vector<ConstraintDef>& list) {
            for (auto it = list.begin(); it != list.end();) {
                if (it->id != dir.target) {
                    ++it;
                    continue;
                }
                found = true;
                std::set<int> sel(dir.stages.begin(), dir.stages.end());
                const bool all = sel.empty();
                if (dir.mode == RelaxationDirective::Mode::Remove) {
                    if (all) {
                        it = list.erase(it);
                        continue;
                    }
                    std::vector<int> kept;
                    for (int k : it->stages)
                        if (!sel.count(k)) kept.push_back(k);
                    if (kept.empty()) {
                        it = list.erase(it);
                        continue;
                    }
                    it->stages = kept;
                    ++it;
                    continue;
                }
                // ShiftBound
                if (!std::isfinite(dir.delta))
                    throw std::invalid_argument("relax: non-finite bound shift");
                if (all) {
                    ConstraintDef& def = *it;
                    auto shifted = shifted_evaluator(def, dir.delta);
                    if (enforce_widening) {
                        // Widening means the shifted value never exceeds the
                        // original: probe a few deterministic points.
                        Vec x = Vec::Zero(spec.state_dim);
                        Vec u = Vec::Zero(spec.input_dim);
                        Vec d = Vec::Zero(spec.disturbance_dim);
                        for (int probe = 0; probe < 4; ++probe) {
                            Vec xp = (x.array() + (probe - 1.5)).matrix();
                            double gn = shifted(xp, u, d);
                            double go = def.evaluator(xp, u, d);
                            if (gn > go + 1e-9 * (1.0 + std::abs(go)))
                                throw std::invalid_argument(
                                    "relax: directive tightens constraint \"" +
                                    dir.target + "\"");
                        }
                    }
                    def.bound += dir.delta;
                    def.evaluator = shifted;
                    ++it;
                    continue;
                }
                // Per-stage shift: split into an unshifted and a shifted part.
                ConstraintDef shifted_def = *it;
                shifted_def.id = it->id + "#relaxed";
                shifted_def.bound += dir.delta;
                shifted_def.evaluator = shifted_evaluator(*it, dir.delta);
                shifted_def.stages.clear();
                std::vector<int> kept;
                for (int k : it->stages)
                    (sel.count(k) ? shifted_def.stages : kept).push_back(k);
                if (shifted_def.stages.empty())
                    throw std::invalid_argument(
                        "relax: directive stages do not intersect constraint \"" +
                        dir.target + "\"");
                it->stages = kept;
                if (kept.empty()) *it = shifted_def;
                else list.insert(std::next(it), shifted_def);
                break;  // iterator invalidated; constraint handled
            }
        };
        apply_list(out.path_constraints);
        apply_list(out.terminal_constraints);
        if (!found)
            throw std::invalid_argument("relax: unknown constraint \"" +
                                        dir.target + "\"");
    }
    return out;
}

OcpSolution resolve_relaxed(const OcpSpec& spec, const DecisionContext& ctx,
                            const std::vector<RelaxationDirective>& directives,
                            const SolverConfig& cfg) {
    OcpSpec relaxed = apply_directives(spec, directives, /*enforce_widening=*/true);
    return run_sqp(relaxed, ctx, cfg);
}

SensitivityCheck multiplier_sensitivity_check(const OcpSpec& spec,
                                              const DecisionContext& ctx,
                                              const ConstraintId& id, double dc,
                                              const SolverConfig& cfg) {
    const ConstraintDef* def = spec.find_constraint(id);
    if (!def) throw std::invalid_argument("sensitivity: unknown constraint " + id);
    if (def->kind != ConstraintKind::HardInequality)
        throw std::invalid_argument("sensitivity: constraint is not hard");
    if (!def->make_evaluator)
        throw std::invalid_argument("sensitivity: constraint lacks make_evaluator");
    if (!(dc > 0.0)) throw std::invalid_argument("sensitivity: dc must be positive");

    OcpSolution nominal = run_sqp(spec, ctx, cfg);
    if (nominal.status != SolverStatus::Optimal)
        throw std::runtime_error("sensitivity: nominal solve not optimal");

    SensitivityCheck out;
    out.lambda_reported = nominal.multiplier_sum(id);
    out.active = out.lambda_reported > 1e-8;

    auto shifted_solve = [&](double delta) {
        RelaxationDirective dir;
        dir.target = id;
        dir.mode = RelaxationDirective::Mode::ShiftBound;
        dir.delta = delta;
        OcpSpec shifted = apply_directives(spec, {dir}, /*enforce_widening=*/false);
        OcpSolution s = run_sqp(shifted, ctx, cfg);
        if (s.status != SolverStatus::Optimal)
            throw std::runtime_error("sensitivity: perturbed solve failed");
        return s.total_cost;
    };
    double jp = shifted_solve(dc);
    double jm = shifted_solve(-dc);
    out.dj_dc_estimated = (jp - jm) / (2.0 * dc);
    return out;
}

}  // namespace xmpc

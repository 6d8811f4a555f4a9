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

#include "xmpc/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace xmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stable 2-norm of (a, b) without overflow.
double hypot2(double a, double b) { return std::hypot(a, b); }

// Dual active-set state. J = L^{-T} Q keeps the inverse-Cholesky basis,
// R the triangular factor of the active constraint normals in that basis.
struct Workspace {
    int n = 0;
    MatrixXd J;            // n x n
    MatrixXd R;            // n x n, upper-left q x q in use
    std::vector<int> active;  // constraint indices; eq rows first
    VectorXd duals;        // per active constraint, aligned with `active`
    int q = 0;

    // d = J' * normal; z = J2 d2 (primal step); r = R^{-1} d1 (dual step).
    void directions(const VectorXd& normal, VectorXd& d, VectorXd& z,
                    VectorXd& r) const {
        d = J.transpose() * normal;
        z = J.rightCols(n - q) * d.tail(n - q);
        r.resize(q);
        for (int i = q - 1; i >= 0; --i) {
            double s = d(i);
            for (int j = i + 1; j < q; ++j) s -= R(i, j) * r(j);
            r(i) = s / R(i, i);
        }
    }

    // Rotate d so its tail beyond position q vanishes, mirroring the
    // rotations into J; then d(0..q) becomes the new column of R.
    // Returns false if the new normal is dependent on the active set.
    bool add(VectorXd& d, double dep_tol) {
        for (int j = n - 1; j > q; --j) {
            double cc = d(j - 1), ss = d(j);
            double h = hypot2(cc, ss);
            if (h == 0.0) continue;
            double c = cc / h, s = ss / h;
            d(j - 1) = h;
            d(j) = 0.0;
            for (int i = 0; i < n; ++i) {
                double t1 = J(i, j - 1), t2 = J(i, j);
                J(i, j - 1) = c * t1 + s * t2;
                J(i, j) = -s * t1 + c * t2;
            }
        }
        if (std::abs(d(q)) <= dep_tol) return false;
        for (int i = 0; i <= q; ++i) R(i, q) = d(i);
        ++q;
        return true;
    }

    // Remove active constraint at position k (inequalities only) and
    // restore the triangular structure of R.
    void remove(int k) {
        active.erase(active.begin() + k);
        VectorXd nd = duals;
        for (int i = k; i + 1 < q; ++i) nd(i) = nd(i + 1);
        duals = nd.head(q - 1).eval();

        for (int j = k; j + 1 < q; ++j) R.col(j).head(q) = R.col(j + 1).head(q);
        --q;
        for (int j = k; j < q; ++j) {
            double cc = R(j, j), ss = R(j + 1, j);
            double h = hypot2(cc, ss);
            if (h == 0.0) continue;
            double c = cc / h, s = ss / h;
            for (int col = j; col < q; ++col) {
                double t1 = R(j, col), t2 = R(j + 1, col);
                R(j, col) = c * t1 + s * t2;
                R(j + 1, col) = -s * t1 + c * t2;
            }
            for (int i = 0; i < n; ++i) {
                double t1 = J(i, j), t2 = J(i, j + 1);
                J(i, j) = c * t1 + s * t2;
                J(i, j + 1) = -s * t1 + c * t2;
            }
        }
    }
};

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts) {
    const int n = static_cast<int>(qp.H.rows());
    const int p = static_cast<int>(qp.A_eq.rows());
    const int m = static_cast<int>(qp.A_in.rows());

    QpResult res;
    res.eq_duals = VectorXd::Zero(p);
    res.in_duals = VectorXd::Zero(m);

    Eigen::LLT<MatrixXd> llt(qp.H);
    if (llt.info() != Eigen::Success) {
        res.status = QpStatus::NotPositiveDefinite;
        return res;
    }

    Workspace ws;
    ws.n = n;
    ws.J = llt.matrixL().solve(MatrixXd::Identity(n, n)).transpose();
    ws.R = MatrixXd::Zero(n, n);
    ws.duals = VectorXd();

    VectorXd x = -llt.solve(qp.g);

    // Constraint accessors in >= 0 orientation: equalities a'x - b,
    // inequalities b - a'x (so feasible means value >= 0).
    auto normal = [&](int idx) -> VectorXd {
        if (idx < p) return qp.A_eq.row(idx).transpose();
        return -qp.A_in.row(idx - p).transpose();
    };
    auto value = [&](int idx) -> double {
        if (idx < p) return qp.A_eq.row(idx).dot(x) - qp.b_eq(idx);
        return qp.b_in(idx - p) - qp.A_in.row(idx - p).dot(x);
    };

    const int max_add = opts.max_additions > 0 ? opts.max_additions : 50 * (n + m + 1);
    int additions = 0;
    VectorXd d, z, r;

    // Phase 1: force the equalities into the active set.
    for (int e = 0; e < p; ++e) {
        VectorXd ne = normal(e);
        ws.directions(ne, d, z, r);
        double s = value(e);
        double zn = z.dot(ne);
        if (std::abs(zn) <= opts.dependence_tol * (1.0 + ne.norm())) {
            if (std::abs(s) > 1e-8 * (1.0 + std::abs(qp.b_eq(e)))) {
                res.status = QpStatus::Infeasible;  // inconsistent equalities
                return res;
            }
            continue;  // redundant equality, skip
        }
        double t = -s / zn;
        x += t * z;
        if (ws.q > 0) ws.duals.head(ws.q) -= t * r.head(ws.q);
        int before = ws.q;
        VectorXd dd = d;
        if (!ws.add(dd, opts.dependence_tol)) {
            res.status = QpStatus::Degenerate;
            return res;
        }
        ws.active.push_back(e);
        VectorXd nd(before + 1);
        if (before > 0) nd.head(before) = ws.duals.head(before);
        nd(before) = t;
        ws.duals = nd;
    }

    // Phase 2: add violated inequalities one at a time.
    while (true) {
        // Pick the most violated inequality.
        int worst = -1;
        double worst_val = -opts.feasibility_tol;
        for (int i = p; i < p + m; ++i) {
            bool is_active = false;
            for (int a : ws.active)
                if (a == i) { is_active = true; break; }
            if (is_active) continue;
            double v = value(i);
            if (v < worst_val) {
                worst_val = v;
                worst = i;
            }
        }
        if (worst < 0) break;  // feasible: done

        VectorXd np = normal(worst);
        double u_plus = 0.0;

        while (true) {
            if (++additions > max_add) {
                res.status = QpStatus::Degenerate;
                return res;
            }
            ws.directions(np, d, z, r);

            // Blocking step from active inequalities whose dual would cross 0.
            double t1 = kInf;
            int block = -1;
            for (int i = 0; i < ws.q; ++i) {
                if (ws.active[i] < p) continue;  // equalities never block
                if (r(i) > opts.dependence_tol) {
                    double t = ws.duals(i) / r(i);
                    if (t < t1) {
                        t1 = t;
                        block = i;
                    }
                }
            }

            double zn = z.dot(np);
            double s = value(worst);
            double t2 = (std::abs(zn) > opts.dependence_tol * (1.0 + np.squaredNorm()))
                            ? -s / zn
                            : kInf;
            double t = std::min(t1, t2);

            if (t >= kInf) {
                res.status = QpStatus::Infeasible;
                return res;
            }

            if (t2 >= kInf) {
                // Dual step only: drop the blocking constraint and retry.
                u_plus += t;
                ws.duals.head(ws.q) -= t * r.head(ws.q);
                ws.remove(block);
                continue;
            }

            x += t * z;
            u_plus += t;
            if (ws.q > 0) ws.duals.head(ws.q) -= t * r.head(ws.q);

            if (t == t2) {
                // Full step: the constraint is now satisfied; activate it.
                int before = ws.q;
                VectorXd dd = d;
                if (!ws.add(dd, opts.dependence_tol)) {
                    res.status = QpStatus::Degenerate;
                    return res;
                }
                ws.active.push_back(worst);
                VectorXd nd(before + 1);
                if (before > 0) nd.head(before) = ws.duals.head(before);
                nd(before) = u_plus;
                ws.duals = nd;
                break;
            }
            // Partial step: drop the blocking constraint and keep pushing.
            ws.remove(block);
        }
    }

    res.status = QpStatus::Optimal;
    res.x = x;
    for (int i = 0; i < ws.q; ++i) {
        int idx = ws.active[i];
        if (idx < p) {
            // Workspace orientation has Gx + g = sum duals * normals with
            // normals a_eq; our Lagrangian uses +nu'(A_eq x - b_eq).
            res.eq_duals(idx) = -ws.duals(i);
        } else {
            res.in_duals(idx - p) = ws.duals(i);
        }
    }
    res.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
    res.iterations = additions;
    return res;
}

}  // namespace xmpc

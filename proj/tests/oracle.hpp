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

// Test-side oracles, independent of the solver implementation path:
//  - brute-force active-set enumeration for small strictly convex QPs
//  - a seeded generator of such QPs with LICQ and strict complementary
//    slackness enforced by construction
//  - wrapping a QP instance as a one-step OCP spec

#pragma once

#include <optional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "xmpc/ocp.hpp"

namespace xmpc::testing {

/// min 0.5 u'Q u + c'u  s.t.  a_i'u >= b_i for each row i.
struct DenseQp {
    Eigen::MatrixXd Q;
    Eigen::VectorXd c;
    Eigen::MatrixXd A;  // m x n
    Eigen::VectorXd b;
};

struct OracleSolution {
    Eigen::VectorXd u;
    double objective = 0.0;
    std::set<int> binding;        // {i : a_i'u == b_i} at the minimizer
    Eigen::VectorXd multipliers;  // from the winning equality system, >= 0
    bool feasible = false;
};

/// Enumerate all 2^m candidate active sets, solve each equality-constrained
/// system, and keep the feasible candidate with the lowest objective.
inline OracleSolution enumerate_qp(const DenseQp& qp, double tol = 1e-9) {
    const int n = static_cast<int>(qp.Q.rows());
    const int m = static_cast<int>(qp.A.rows());
    OracleSolution best;
    double best_obj = std::numeric_limits<double>::infinity();

    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        std::vector<int> sel;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) sel.push_back(i);
        if (static_cast<int>(sel.size()) > n) continue;

        const int k = static_cast<int>(sel.size());
        Eigen::MatrixXd K(n + k, n + k);
        K.setZero();
        K.topLeftCorner(n, n) = qp.Q;
        Eigen::VectorXd rhs(n + k);
        rhs.head(n) = -qp.c;
        for (int j = 0; j < k; ++j) {
            // Stationarity: Q u + c = sum_j mu_j a_j for active a_j'u = b_j.
            K.block(0, n + j, n, 1) = -qp.A.row(sel[j]).transpose();
            K.block(n + j, 0, 1, n) = qp.A.row(sel[j]);
            rhs(n + j) = qp.b(sel[j]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible()) continue;
        Eigen::VectorXd sol = lu.solve(rhs);
        Eigen::VectorXd u = sol.head(n);

        bool feasible = true;
        for (int i = 0; i < m; ++i)
            if (qp.A.row(i).dot(u) < qp.b(i) - tol) {
                feasible = false;
                break;
            }
        if (!feasible) continue;

        double obj = 0.5 * u.dot(qp.Q * u) + qp.c.dot(u);
        if (obj < best_obj - 1e-12) {
            best_obj = obj;
            best.u = u;
            best.objective = obj;
            best.feasible = true;
            best.multipliers = Eigen::VectorXd::Zero(m);
            for (int j = 0; j < k; ++j) best.multipliers(sel[j]) = sol(n + j);
            best.binding.clear();
            for (int i = 0; i < m; ++i)
                if (std::abs(qp.A.row(i).dot(u) - qp.b(i)) <= tol)
                    best.binding.insert(i);
        }
    }
    return best;
}

/// Seeded strictly convex QP with LICQ and SCS enforced by construction:
/// instances violating either regularity condition are redrawn.
inline DenseQp random_regular_qp(unsigned seed, OracleSolution* oracle_out = nullptr,
                                 int max_vars = 8, int max_cons = 6) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int attempt = 0; attempt < 200; ++attempt) {
        DenseQp qp;
        const int n = 2 + static_cast<int>(rng() % (max_vars - 1));
        const int m = 1 + static_cast<int>(rng() % max_cons);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
        qp.Q = M.transpose() * M + 0.5 * Eigen::MatrixXd::Identity(n, n);
        qp.c = Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
        qp.A = Eigen::MatrixXd(m, n);
        qp.b = Eigen::VectorXd(m);
        Eigen::VectorXd u0 = -qp.Q.ldlt().solve(qp.c);
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd a =
                Eigen::VectorXd::NullaryExpr(n, [&](int) { return gauss(rng); });
            a.normalize();
            qp.A.row(i) = a.transpose();
            const double margin = 0.1 + 0.9 * unif(rng);
            // Half the constraints cut off the unconstrained optimum.
            if (unif(rng) < 0.5)
                qp.b(i) = a.dot(u0) + margin;   // u0 infeasible: likely active
            else
                qp.b(i) = a.dot(u0) - margin;   // satisfied strictly
        }

        OracleSolution oracle = enumerate_qp(qp);
        if (!oracle.feasible) continue;

        // SCS: strictly positive multipliers on binding rows, clear slack
        // elsewhere.
        bool ok = true;
        for (int i = 0; i < m; ++i) {
            const bool bind = oracle.binding.count(i) > 0;
            if (bind && oracle.multipliers(i) < 1e-4) ok = false;
            if (!bind && qp.A.row(i).dot(oracle.u) - qp.b(i) < 1e-4) ok = false;
        }
        if (!ok) continue;

        // LICQ: binding rows linearly independent.
        if (!oracle.binding.empty()) {
            Eigen::MatrixXd Ab(oracle.binding.size(), n);
            int r = 0;
            for (int i : oracle.binding) Ab.row(r++) = qp.A.row(i);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ab);
            if (svd.singularValues().minCoeff() < 1e-6) continue;
        }

        if (oracle_out) *oracle_out = oracle;
        return qp;
    }
    throw std::runtime_error("random_regular_qp: could not draw a regular instance");
}

/// Wrap a dense QP as a one-step OCP: H = 1, the input is the QP variable,
/// a scalar dummy state with identity dynamics. Constraint ids are
/// "qp_i" with bounds entering as b_i - a_i'u <= 0 (so dJ*/db = +lambda).
inline OcpSpec qp_as_ocp(const DenseQp& qp) {
    OcpSpec spec;
    const int n = static_cast<int>(qp.Q.rows());
    spec.horizon = 1;
    spec.state_dim = 1;
    spec.input_dim = n;
    spec.disturbance_dim = 1;
    spec.dynamics = [](const Vec& x, const Vec&, const Vec&) { return x; };
    Eigen::MatrixXd Q = qp.Q;
    Eigen::VectorXd c = qp.c;
    spec.stage_cost = [Q, c](const Vec&, const Vec& u) {
        return 0.5 * u.dot(Q * u) + c.dot(u);
    };
    spec.terminal_cost = [](const Vec&) { return 0.0; };
    spec.input_bounds = Eigen::MatrixXd(n, 2);
    spec.input_bounds.col(0).setConstant(-std::numeric_limits<double>::infinity());
    spec.input_bounds.col(1).setConstant(std::numeric_limits<double>::infinity());
    for (int i = 0; i < qp.A.rows(); ++i) {
        ConstraintDef def;
        def.id = "qp_" + std::to_string(i);
        def.kind = ConstraintKind::HardInequality;
        def.stages = {0};
        def.bound = qp.b(i);
        Eigen::VectorXd a = qp.A.row(i).transpose();
        def.make_evaluator = [a](double bb) {
            return [a, bb](const Vec&, const Vec& u, const Vec&) {
                return bb - a.dot(u);
            };
        };
        def.evaluator = def.make_evaluator(def.bound);
        def.family = "qp";
        spec.path_constraints.push_back(std::move(def));
    }
    return spec;
}

inline DecisionContext unit_context(const OcpSpec& spec) {
    DecisionContext ctx;
    ctx.measured_state = Vec::Zero(spec.state_dim);
    ctx.disturbance_forecast = Mat::Zero(spec.horizon, spec.disturbance_dim);
    ctx.timestamp = "2026-01-01T00:00:00";
    return ctx;
}

}  // namespace xmpc::testing

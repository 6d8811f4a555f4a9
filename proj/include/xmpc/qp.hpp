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

#include <Eigen/Dense>

namespace xmpc {

/// Strictly convex quadratic program
///
///   min  0.5 x' H x + g' x
///   s.t. A_eq x = b_eq
///        A_in x <= b_in
///
/// solved by the dual active-set method: start from the unconstrained
/// minimizer, force the equalities in, then add violated inequalities one
/// at a time, dropping blocking constraints as their duals hit zero.
/// Terminates in finitely many steps for positive definite H and yields
/// exact complementarity: active rows hold with equality, inactive rows
/// have dual exactly zero.
struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    Eigen::MatrixXd A_eq;  // may be 0 x n
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_in;  // may be 0 x n
    Eigen::VectorXd b_in;
};

enum class QpStatus {
    Optimal,
    Infeasible,       // dual unbounded: no point satisfies the constraints
    NotPositiveDefinite,
    Degenerate,       // iteration cap hit (cycling or severe ill-conditioning)
};

struct QpResult {
    QpStatus status = QpStatus::Degenerate;
    Eigen::VectorXd x;
    Eigen::VectorXd eq_duals;  // sign follows L = f + eq_duals'(A_eq x - b_eq)
    Eigen::VectorXd in_duals;  // >= 0, one per inequality row
    double objective = 0.0;
    int iterations = 0;
};

struct QpOptions {
    double feasibility_tol = 1e-10;
    double dependence_tol = 1e-12;
    int max_additions = 0;  // 0 -> 50 * (n + m)
};

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts = {});

}  // namespace xmpc

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

#include "xmpc/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace xmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kMaxConditions = 5;  // strongest conditions kept per test

struct Candidate {
    int var = 0;
    int lag = 1;
    double strength = 0.0;  // |partial correlation| from the latest test
    double p_value = 1.0;
};

// Two-sided p-value of a partial correlation r with the given residual
// degrees of freedom under the Student-t null.
double parcorr_pvalue(double r, int dof) {
    if (dof <= 0) return 1.0;
    r = std::clamp(r, -0.9999999, 0.9999999);
    double t = r * std::sqrt(dof / (1.0 - r * r));
    boost::math::students_t_distribution<double> dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

// Lagged-column view over a common sample window. Window rows are
// t = t0 .. N-1 of the original series; column (var, lag) holds x_var(t-lag).
class LaggedView {
public:
    LaggedView(const MatrixXd& samples, int t0) : samples_(samples), t0_(t0) {}

    int rows() const { return static_cast<int>(samples_.rows()) - t0_; }

    VectorXd column(int var, int lag) const {
        const int n = rows();
        VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = samples_(t0_ + i - lag, var);
        return v;
    }

private:
    const MatrixXd& samples_;
    int t0_;
};

// Partial correlation of x and y given the columns in Z (mean-centered
// least squares residuals on both sides).
double partial_correlation(const VectorXd& x, const VectorXd& y,
                           const std::vector<VectorXd>& z, int* dof_out) {
    const int n = static_cast<int>(x.size());
    const int k = static_cast<int>(z.size());
    VectorXd xc = x.array() - x.mean();
    VectorXd yc = y.array() - y.mean();
    if (k > 0) {
        MatrixXd Z(n, k);
        for (int j = 0; j < k; ++j) Z.col(j) = z[j].array() - z[j].mean();
        // Ridge-free normal equations with a tiny diagonal guard against
        // duplicate conditioning columns.
        MatrixXd G = Z.transpose() * Z;
        G.diagonal().array() += 1e-12 * (1.0 + G.diagonal().maxCoeff());
        Eigen::LDLT<MatrixXd> ldlt(G);
        xc -= Z * ldlt.solve(Z.transpose() * xc);
        yc -= Z * ldlt.solve(Z.transpose() * yc);
    }
    double nx = xc.norm(), ny = yc.norm();
    *dof_out = n - k - 2;
    if (nx < 1e-300 || ny < 1e-300) return 0.0;
    return std::clamp(xc.dot(yc) / (nx * ny), -1.0, 1.0);
}

}  // namespace

void apply_missing_policy(TimeSeriesTable& table, int max_gap) {
    const int n = static_cast<int>(table.samples.rows());
    for (int j = 0; j < table.samples.cols(); ++j) {
        int i = 0;
        while (i < n) {
            if (!std::isnan(table.samples(i, j))) {
                ++i;
                continue;
            }
            int run_start = i;
            while (i < n && std::isnan(table.samples(i, j))) ++i;
            const int run_len = i - run_start;
            if (run_start == 0 || i == n || run_len > max_gap)
                throw std::invalid_argument(
                    "missing values in \"" + table.variables[j] +
                    "\" exceed the interpolation policy");
            const double lo = table.samples(run_start - 1, j);
            const double hi = table.samples(i, j);
            for (int r = 0; r < run_len; ++r)
                table.samples(run_start + r, j) =
                    lo + (hi - lo) * (r + 1.0) / (run_len + 1.0);
        }
    }
}

LaggedCausalGraph fit_pcmci(const TimeSeriesTable& data, int tau_max,
                            double alpha) {
    const int N = static_cast<int>(data.samples.rows());
    const int V = static_cast<int>(data.samples.cols());
    if (static_cast<int>(data.variables.size()) != V)
        throw std::invalid_argument("fit_pcmci: variable names do not match data");
    if (tau_max < 1) throw std::invalid_argument("fit_pcmci: tau_max must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("fit_pcmci: alpha must lie in (0,1)");
    if (N <= tau_max + 30)
        throw std::invalid_argument("fit_pcmci: series too short for tau_max");
    if (data.samples.hasNaN())
        throw std::invalid_argument("fit_pcmci: missing values present");

    LaggedCausalGraph g;
    g.tau_max = tau_max;
    g.alpha = alpha;
    g.variables = data.variables;

    // Exclude constant series entirely.
    std::vector<bool> usable(V, true);
    for (int j = 0; j < V; ++j) {
        double sd = std::sqrt(
            (data.samples.col(j).array() - data.samples.col(j).mean())
                .square()
                .mean());
        if (sd < 1e-12) {
            usable[j] = false;
            g.warnings.push_back("variable \"" + data.variables[j] +
                                 "\" is constant and was excluded");
        }
    }

    // All tests in one fit share the window t = 2*tau_max .. N-1 so that
    // MCI conditioning sets (lags up to 2*tau_max) stay in range.
    LaggedView view(data.samples, 2 * tau_max);

    // Candidate ordering must not depend on column order: ties break by
    // variable name, then lag.
    auto sort_candidates = [&](std::vector<Candidate>& cands) {
        std::stable_sort(cands.begin(), cands.end(),
                         [&](const Candidate& a, const Candidate& b) {
                             if (a.strength != b.strength)
                                 return a.strength > b.strength;
                             if (data.variables[a.var] != data.variables[b.var])
                                 return data.variables[a.var] <
                                        data.variables[b.var];
                             return a.lag < b.lag;
                         });
    };

    // Stage 1 (condition selection) parents per target.
    std::vector<std::vector<Candidate>> parents(V);
    for (int y = 0; y < V; ++y) {
        if (!usable[y]) continue;
        VectorXd ycol = view.column(y, 0);

        std::vector<Candidate> cands;
        for (int x = 0; x < V; ++x) {
            if (!usable[x]) continue;
            for (int lag = 1; lag <= tau_max; ++lag) {
                int dof = 0;
                double r =
                    partial_correlation(view.column(x, lag), ycol, {}, &dof);
                double p = parcorr_pvalue(r, dof);
                if (p <= alpha) cands.push_back({x, lag, std::abs(r), p});
            }
        }
        sort_candidates(cands);

        // Iteratively prune conditioning on the strongest surviving
        // parents other than the candidate itself.
        for (int dim = 1; dim <= kMaxConditions; ++dim) {
            if (static_cast<int>(cands.size()) <= 1) break;
            bool any_removed = false;
            std::vector<Candidate> kept;
            for (size_t ci = 0; ci < cands.size(); ++ci) {
                std::vector<VectorXd> cond;
                for (size_t cj = 0; cj < cands.size() &&
                                    static_cast<int>(cond.size()) < dim;
                     ++cj) {
                    if (cj == ci) continue;
                    cond.push_back(view.column(cands[cj].var, cands[cj].lag));
                }
                if (cond.empty()) {
                    kept.push_back(cands[ci]);
                    continue;
                }
                int dof = 0;
                double r = partial_correlation(
                    view.column(cands[ci].var, cands[ci].lag), ycol, cond, &dof);
                double p = parcorr_pvalue(r, dof);
                if (p <= alpha) {
                    Candidate c = cands[ci];
                    c.strength = std::abs(r);
                    c.p_value = p;
                    kept.push_back(c);
                } else {
                    any_removed = true;
                }
            }
            cands = std::move(kept);
            sort_candidates(cands);
            if (!any_removed && dim >= std::min<int>(kMaxConditions,
                                                     cands.size() - 1))
                break;
        }
        parents[y] = cands;
    }

    // Stage 2: momentary conditional-independence test of each surviving
    // link, conditioning on parents of the target (minus the link) and
    // parents of the source shifted by the link lag.
    std::vector<LaggedEdge> tested;
    for (int y = 0; y < V; ++y) {
        if (!usable[y]) continue;
        VectorXd ycol = view.column(y, 0);
        for (const Candidate& link : parents[y]) {
            std::vector<VectorXd> cond;
            int taken = 0;
            for (const Candidate& other : parents[y]) {
                if (other.var == link.var && other.lag == link.lag) continue;
                if (taken >= kMaxConditions) break;
                cond.push_back(view.column(other.var, other.lag));
                ++taken;
            }
            taken = 0;
            for (const Candidate& src_par : parents[link.var]) {
                if (taken >= kMaxConditions) break;
                const int shifted = src_par.lag + link.lag;
                if (shifted > 2 * tau_max) continue;
                cond.push_back(view.column(src_par.var, shifted));
                ++taken;
            }
            int dof = 0;
            double r = partial_correlation(view.column(link.var, link.lag),
                                           ycol, cond, &dof);
            double p = parcorr_pvalue(r, dof);
            LaggedEdge e;
            e.source = data.variables[link.var];
            e.target = data.variables[y];
            e.lag = link.lag;
            e.p_value = p;
            e.partial_correlation = r;
            tested.push_back(e);
        }
    }

    // Benjamini-Hochberg step-up over the MCI p-values controls the false
    // discovery rate. The hypothesis family is the full candidate set the
    // screening stage started from (links pruned there count as
    // non-rejections), so m is (usable variables)^2 * tau_max. Every
    // retained edge still satisfies p <= alpha.
    int n_usable = 0;
    for (int j = 0; j < V; ++j)
        if (usable[j]) ++n_usable;
    std::vector<size_t> order(tested.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return tested[a].p_value < tested[b].p_value;
    });
    size_t keep = 0;
    const double m = static_cast<double>(n_usable) * n_usable * tau_max;
    for (size_t k = 0; k < order.size(); ++k) {
        if (tested[order[k]].p_value <= alpha * (k + 1) / m) keep = k + 1;
    }
    for (size_t k = 0; k < keep; ++k) g.edges.push_back(tested[order[k]]);

    std::sort(g.edges.begin(), g.edges.end(),
              [](const LaggedEdge& a, const LaggedEdge& b) {
                  if (a.target != b.target) return a.target < b.target;
                  if (a.source != b.source) return a.source < b.source;
                  return a.lag < b.lag;
              });
    return g;
}

LagBaseline compute_baselines(const TimeSeriesTable& data, int tau_max) {
    const int N = static_cast<int>(data.samples.rows());
    const int V = static_cast<int>(data.samples.cols());
    if (tau_max < 0 || N <= tau_max)
        throw std::invalid_argument("compute_baselines: tau_max out of range");
    LagBaseline b;
    b.variables = data.variables;
    b.tau_max = tau_max;
    b.mu = MatrixXd::Zero(V, tau_max + 1);
    b.sigma = MatrixXd::Zero(V, tau_max + 1);
    for (int j = 0; j < V; ++j) {
        for (int tau = 0; tau <= tau_max; ++tau) {
            // Over samples x_j(t - tau) for t = tau+1 .. N (1-indexed):
            // exactly the first N - tau samples.
            const int n = N - tau;
            double mean = data.samples.col(j).head(n).mean();
            double var =
                (data.samples.col(j).head(n).array() - mean).square().sum() / n;
            b.mu(j, tau) = mean;
            b.sigma(j, tau) = std::sqrt(std::max(0.0, var));
        }
    }
    return b;
}

int LagBaseline::index_of(const std::string& variable) const {
    for (size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == variable) return static_cast<int>(i);
    return -1;
}

std::vector<ParentRef> query_parents(const LaggedCausalGraph& g,
                                     const std::string& target) {
    if (std::find(g.variables.begin(), g.variables.end(), target) ==
        g.variables.end())
        throw std::invalid_argument("query_parents: unknown target \"" + target +
                                    "\"");
    std::vector<ParentRef> out;
    for (const auto& e : g.edges)
        if (e.target == target) out.push_back({e.source, e.lag, e.p_value});
    std::sort(out.begin(), out.end(), [](const ParentRef& a, const ParentRef& b) {
        if (a.p_value != b.p_value) return a.p_value < b.p_value;
        if (a.source != b.source) return a.source < b.source;
        return a.lag < b.lag;
    });
    return out;
}

std::vector<DeviationFlag> deviation_flags(const LagBaseline& baseline,
                                           const Eigen::MatrixXd& history,
                                           const std::vector<std::string>& columns,
                                           const std::vector<ParentRef>& parents) {
    const int rows = static_cast<int>(history.rows());
    std::map<std::string, int> col_index;
    for (size_t i = 0; i < columns.size(); ++i)
        col_index[columns[i]] = static_cast<int>(i);

    std::vector<DeviationFlag> out;
    for (const auto& par : parents) {
        auto it = col_index.find(par.source);
        if (it == col_index.end())
            throw std::invalid_argument("deviation_flags: no history column \"" +
                                        par.source + "\"");
        if (par.lag >= rows)
            throw std::invalid_argument("deviation_flags: lag " +
                                        std::to_string(par.lag) +
                                        " exceeds history length");
        int bj = baseline.index_of(par.source);
        if (bj < 0 || par.lag > baseline.tau_max)
            throw std::invalid_argument(
                "deviation_flags: baseline missing for \"" + par.source + "\"");

        const double x = history(rows - 1 - par.lag, it->second);
        const double mu = baseline.mu(bj, par.lag);
        const double sd = baseline.sigma(bj, par.lag);
        DeviationFlag flag;
        flag.source = par.source;
        flag.lag = par.lag;
        if (sd > 0.0) {
            flag.z_score = (x - mu) / sd;
            flag.active = std::abs(x - mu) > 2.0 * sd;
        } else {
            // Degenerate baseline: any nonzero deviation counts, with an
            // infinite sentinel z.
            if (x == mu) {
                flag.z_score = 0.0;
                flag.active = false;
            } else {
                flag.z_score = x > mu ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
                flag.active = true;
            }
        }
        out.push_back(flag);
    }
    return out;
}

}  // namespace xmpc

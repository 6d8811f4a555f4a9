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

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace xmpc {

/// Uniformly sampled multivariate history. No missing values are allowed
/// after ingestion; apply_missing_policy interpolates short gaps first.
struct TimeSeriesTable {
    std::vector<std::string> variables;
    Eigen::MatrixXd samples;  // N x V
    double sampling_minutes = 15.0;
};

/// Linear interpolation over NaN runs of at most `max_gap` consecutive
/// samples per variable; longer runs (or NaN at the boundaries) throw.
void apply_missing_policy(TimeSeriesTable& table, int max_gap = 4);

struct LaggedEdge {
    std::string source;
    std::string target;
    int lag = 1;  // positive; no contemporaneous edges
    double p_value = 1.0;
    double partial_correlation = 0.0;
};

/// Two-stage lagged causal discovery output. Every edge satisfies
/// p_value <= alpha and lag in [1, tau_max].
struct LaggedCausalGraph {
    std::vector<LaggedEdge> edges;
    int tau_max = 48;
    double alpha = 0.05;
    std::vector<std::string> variables;
    std::vector<std::string> warnings;  // e.g. constant series exclusions
};

/// Per-(variable, lag) historical mean and population standard deviation,
/// each computed over exactly N - lag samples (lags 0..tau_max).
struct LagBaseline {
    std::vector<std::string> variables;
    int tau_max = 0;
    Eigen::MatrixXd mu;     // V x (tau_max + 1)
    Eigen::MatrixXd sigma;  // V x (tau_max + 1)

    int index_of(const std::string& variable) const;
};

/// Condition-selection (iterative partial-correlation pruning against the
/// strongest surviving parents, Student-t null) followed by momentary
/// conditional-independence tests conditioning on the parents of both
/// endpoints. Deterministic for fixed data; constant series are excluded
/// with a warning.
LaggedCausalGraph fit_pcmci(const TimeSeriesTable& data, int tau_max = 48,
                            double alpha = 0.05);

LagBaseline compute_baselines(const TimeSeriesTable& data, int tau_max);

struct ParentRef {
    std::string source;
    int lag = 1;
    double p_value = 1.0;
};

/// All edges into `target`, ordered by ascending p-value. Throws on an
/// unknown target.
std::vector<ParentRef> query_parents(const LaggedCausalGraph& g,
                                     const std::string& target);

struct DeviationFlag {
    std::string source;
    int lag = 1;
    bool active = false;
    double z_score = 0.0;  // signed; +-inf sentinel for sigma == 0
};

/// 2-sigma deviation checks of each parent at its lag. `history` rows are
/// oldest..newest with the last row being the observation at the decision
/// instant; `columns` names its columns. Throws if a required lag exceeds
/// the history length.
std::vector<DeviationFlag> deviation_flags(const LagBaseline& baseline,
                                           const Eigen::MatrixXd& history,
                                           const std::vector<std::string>& columns,
                                           const std::vector<ParentRef>& parents);

}  // namespace xmpc

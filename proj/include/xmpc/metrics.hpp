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

#include <functional>
#include <string>
#include <vector>

#include "xmpc/hypothesis.hpp"

namespace xmpc {

/// Token-level longest-common-subsequence recall: LCS(candidate,
/// reference) / |reference|. Tokens are lowercase whitespace splits.
/// Throws on an empty reference.
double rouge_l(const std::string& candidate, const std::string& reference);

/// Fraction of statements the predicate accepts. Throws on empty input.
double faithfulness(const std::vector<TaggedStatement>& statements,
                    const std::function<bool(const TaggedStatement&)>& supported);

/// Default support predicate: statements grounded in the instantaneous
/// observation context or the multipliers.
bool grounded_in_current_state(const TaggedStatement& s);

struct GroundTruthAnnotation {
    std::string scenario_ref;
    std::vector<std::string> true_causal_factors;  // ordered, nonempty
    std::string reference_explanation_text;
};

struct RankingScores {
    double p_at_1 = 0.0, p_at_3 = 0.0, p_at_5 = 0.0;
    double r_at_1 = 0.0, r_at_3 = 0.0, r_at_5 = 0.0;
    double f1_at_1 = 0.0, f1_at_3 = 0.0, f1_at_5 = 0.0;
    double mrr = 0.0;
    double ndcg_at_5 = 0.0;
};

/// Precision/recall/F1 at K in {1,3,5}, mean reciprocal rank of the first
/// correct factor, and NDCG@5 with binary relevance.
RankingScores ranking_metrics(const std::vector<std::string>& predicted,
                              const GroundTruthAnnotation& truth);

}  // namespace xmpc

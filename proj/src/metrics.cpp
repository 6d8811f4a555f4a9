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

#include "xmpc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xmpc {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        tokens.push_back(tok);
    }
    return tokens;
}

}  // namespace

double rouge_l(const std::string& candidate, const std::string& reference) {
    auto x = tokenize(candidate);
    auto y = tokenize(reference);
    if (y.empty()) throw std::invalid_argument("rouge_l: empty reference");
    if (x.empty()) return 0.0;
    const size_t n = x.size(), m = y.size();
    std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            if (x[i - 1] == y[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[m]) / static_cast<double>(m);
}

double faithfulness(const std::vector<TaggedStatement>& statements,
                    const std::function<bool(const TaggedStatement&)>& supported) {
    if (statements.empty())
        throw std::invalid_argument("faithfulness: no statements");
    size_t ok = 0;
    for (const auto& s : statements)
        if (supported(s)) ++ok;
    return static_cast<double>(ok) / static_cast<double>(statements.size());
}

bool grounded_in_current_state(const TaggedStatement& s) {
    return s.tag == EvidenceSource::CurrentState || s.tag == EvidenceSource::Kkt;
}

RankingScores ranking_metrics(const std::vector<std::string>& predicted,
                              const GroundTruthAnnotation& truth) {
    if (truth.true_causal_factors.empty())
        throw std::invalid_argument("ranking_metrics: empty ground truth");
    std::set<std::string> relevant(truth.true_causal_factors.begin(),
                                   truth.true_causal_factors.end());

    auto hits_at = [&](size_t k) {
        size_t hits = 0;
        for (size_t i = 0; i < predicted.size() && i < k; ++i)
            if (relevant.count(predicted[i])) ++hits;
        return hits;
    };
    auto prf = [&](size_t k, double* p, double* r, double* f1) {
        const double hits = static_cast<double>(hits_at(k));
        *p = hits / static_cast<double>(k);
        *r = hits / static_cast<double>(relevant.size());
        *f1 = (*p + *r) > 0.0 ? 2.0 * (*p) * (*r) / (*p + *r) : 0.0;
    };

    RankingScores s;
    prf(1, &s.p_at_1, &s.r_at_1, &s.f1_at_1);
    prf(3, &s.p_at_3, &s.r_at_3, &s.f1_at_3);
    prf(5, &s.p_at_5, &s.r_at_5, &s.f1_at_5);

    for (size_t i = 0; i < predicted.size(); ++i) {
        if (relevant.count(predicted[i])) {
            s.mrr = 1.0 / static_cast<double>(i + 1);
            break;
        }
    }

    const size_t K = 5;
    double dcg = 0.0;
    for (size_t i = 0; i < predicted.size() && i < K; ++i)
        if (relevant.count(predicted[i])) dcg += 1.0 / std::log2(i + 2.0);
    double idcg = 0.0;
    for (size_t i = 0; i < std::min(K, relevant.size()); ++i)
        idcg += 1.0 / std::log2(i + 2.0);
    s.ndcg_at_5 = idcg > 0.0 ? dcg / idcg : 0.0;
    return s;
}

}  // namespace xmpc

/*
 * Copyright 2026 The fsmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "fsmt/common/error.hpp"

namespace fsmt {

// Scorer concept:
//   std::vector<double> next_log_probs(const std::vector<int>& prefix);
//   int eos_id() const;
// Prefixes and results carry content tokens only (no BOS/EOS bookkeeping).
//
// Cumulative log-probability search without length normalization. Ties are
// broken in favor of the hypothesis generated earlier: candidates are
// enumerated (hypothesis index, then token id) and sorted stably, and the
// completed pool keeps insertion order. A hypothesis completes when EOS is
// chosen; its score includes the EOS step. If nothing completes within
// max_len steps, the best truncated hypothesis is returned.
template <typename Scorer>
std::vector<int> beam_search(Scorer& scorer, int beam_size, int max_len) {
    if (beam_size < 1) throw ConfigError("beam_search: beam_size must be >= 1");
    if (max_len < 1) throw ConfigError("beam_search: max_len must be >= 1");

    struct Hyp {
        std::vector<int> tokens;
        double score = 0.0;
    };
    std::vector<Hyp> active(1);
    std::vector<Hyp> completed;

    for (int step = 0; step < max_len && !active.empty(); ++step) {
        struct Cand {
            double score;
            int hyp;
            int token;
        };
        std::vector<Cand> cands;
        for (std::size_t h = 0; h < active.size(); ++h) {
            const auto lp = scorer.next_log_probs(active[h].tokens);
            cands.reserve(cands.size() + lp.size());
            for (std::size_t v = 0; v < lp.size(); ++v)
                cands.push_back({active[h].score + lp[v], static_cast<int>(h),
                                 static_cast<int>(v)});
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& a, const Cand& b) { return a.score > b.score; });

        // The top beam_size candidates survive; choosing EOS retires a
        // hypothesis into the completed pool.
        std::vector<Hyp> next;
        int taken = 0;
        for (const auto& c : cands) {
            if (taken >= beam_size) break;
            ++taken;
            Hyp h = active[static_cast<std::size_t>(c.hyp)];
            h.score = c.score;
            if (c.token == scorer.eos_id()) {
                completed.push_back(std::move(h));
            } else {
                h.tokens.push_back(c.token);
                next.push_back(std::move(h));
            }
        }
        active = std::move(next);
        // Nothing still active can beat the best completed hypothesis once
        // every active score is below it (scores only decrease).
        if (!completed.empty() && !active.empty()) {
            double best_completed = completed[0].score;
            for (const auto& c : completed) best_completed = std::max(best_completed, c.score);
            bool can_improve = false;
            for (const auto& a : active) can_improve = can_improve || a.score > best_completed;
            if (!can_improve) break;
        }
    }

    const Hyp* best = nullptr;
    for (const auto& c : completed)
        if (!best || c.score > best->score) best = &c;
    if (!best)
        for (const auto& a : active)
            if (!best || a.score > best->score) best = &a;
    return best ? best->tokens : std::vector<int>{};
}

}  // namespace fsmt

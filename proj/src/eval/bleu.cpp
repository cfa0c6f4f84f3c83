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
#include "fsmt/eval/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fsmt/common/error.hpp"
#include "fsmt/text/vocabulary.hpp"

namespace fsmt {

namespace {

// n-gram multiset of one tokenized sentence; n-grams join tokens with '\x1f'
// so token boundaries stay unambiguous.
std::unordered_map<std::string, long> ngram_counts(const std::vector<std::string>& tokens,
                                                   int n) {
    std::unordered_map<std::string, long> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < n; ++k) {
            key += '\x1f';
            key += tokens[i + static_cast<std::size_t>(k)];
        }
        counts[key] += 1;
    }
    return counts;
}

}  // namespace

BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references) {
    if (hypotheses.size() != references.size())
        throw ShapeError("corpus_bleu: " + std::to_string(hypotheses.size()) +
                         " hypotheses vs " + std::to_string(references.size()) +
                         " references");
    if (hypotheses.empty()) throw EmptyCorpusError("corpus_bleu: no sentence pairs");

    long matched[4] = {0, 0, 0, 0};
    long total[4] = {0, 0, 0, 0};
    BleuScore out;

    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto hyp = split_words(hypotheses[s]);
        const auto ref = split_words(references[s]);
        out.hypothesis_length += static_cast<long>(hyp.size());
        out.reference_length += static_cast<long>(ref.size());
        for (int n = 1; n <= 4; ++n) {
            const auto hyp_counts = ngram_counts(hyp, n);
            const auto ref_counts = ngram_counts(ref, n);
            for (const auto& [gram, count] : hyp_counts) {
                total[n - 1] += count;
                const auto it = ref_counts.find(gram);
                if (it != ref_counts.end())
                    matched[n - 1] += std::min(count, it->second);
            }
        }
    }

    bool all_positive = true;
    for (int n = 0; n < 4; ++n) {
        out.precisions[n] =
            total[n] > 0 ? static_cast<double>(matched[n]) / static_cast<double>(total[n])
                         : 0.0;
        all_positive = all_positive && out.precisions[n] > 0.0;
    }

    if (out.hypothesis_length == 0) {
        out.brevity_penalty = 0.0;
        out.score = 0.0;
        return out;
    }
    out.brevity_penalty =
        out.hypothesis_length >= out.reference_length
            ? 1.0
            : std::exp(1.0 - static_cast<double>(out.reference_length) /
                                 static_cast<double>(out.hypothesis_length));
    if (all_positive) {
        double log_sum = 0.0;
        for (int n = 0; n < 4; ++n) log_sum += 0.25 * std::log(out.precisions[n]);
        out.score = 100.0 * out.brevity_penalty * std::exp(log_sum);
    }
    return out;
}

Stats mean_std(const std::vector<double>& values) {
    Stats s;
    s.n = static_cast<long>(values.size());
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::map<std::string, Stats> aggregate_by_key(
    const std::vector<std::pair<std::string, double>>& keyed_values) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& [key, value] : keyed_values) groups[key].push_back(value);
    std::map<std::string, Stats> out;
    for (const auto& [key, values] : groups) out[key] = mean_std(values);
    return out;
}

}  // namespace fsmt

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
#ifndef FSMT_EVAL_BLEU_HPP_
#define FSMT_EVAL_BLEU_HPP_

#include <map>
#include <string>
#include <vector>

namespace fsmt {

// Corpus-level BLEU up to 4-grams, case-sensitive, whitespace tokenization,
// no smoothing: counts are pooled over the corpus before taking precisions,
// and any zero precision zeroes the score.
struct BleuScore {
    double score = 0.0;            // 0..100
    double precisions[4] = {0, 0, 0, 0};
    double brevity_penalty = 0.0;  // in (0,1] for non-empty hypotheses
    long hypothesis_length = 0;
    long reference_length = 0;
};

BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references);

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1); 0 when n == 1
    long n = 0;
};

Stats mean_std(const std::vector<double>& values);

// Groups values by key; every input value lands in exactly one group.
std::map<std::string, Stats> aggregate_by_key(
    const std::vector<std::pair<std::string, double>>& keyed_values);

}  // namespace fsmt

#endif  // FSMT_EVAL_BLEU_HPP_

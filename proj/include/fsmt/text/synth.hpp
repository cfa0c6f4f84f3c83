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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fsmt/text/corpus.hpp"

namespace fsmt {

// Shared artificial source language: a fixed pool of pronounceable word
// types with a skewed frequency profile. Every synthetic domain draws its
// source sentences from the same language (fixed by language_seed), so a
// joint vocabulary covers all domains.
struct BaseLanguage {
    std::vector<std::string> words;
    std::vector<double> weights;  // unnormalized sampling weights
};

BaseLanguage make_base_language(std::uint64_t language_seed, int n_types = 48);

// Generators, selected by name:
//   copy            target = source
//   reverse         target = source words reversed
//   shift:<k>       target[i] = source[(i+k) mod len]
//   lexicon:<seed>  per-word substitution: a lexicon shared by all lexicon
//                   domains (fixed by language_seed) composed with a smaller
//                   domain-specific lexicon (fixed by <seed>); unmapped
//                   words pass through unchanged
struct SyntheticDomainSpec {
    std::string generator;
    std::uint64_t language_seed = 2026;
    int n_types = 48;
};

// Deterministic in (spec, n_pairs, seed); domain_id = spec.generator.
RawCorpus synth_domain(const SyntheticDomainSpec& spec, int n_pairs, std::uint64_t seed);

// Exposed for tests: the two substitution layers of a lexicon domain.
std::map<std::string, std::string> shared_lexicon(const BaseLanguage& lang,
                                                  std::uint64_t language_seed);
std::map<std::string, std::string> domain_lexicon(const BaseLanguage& lang,
                                                  std::uint64_t language_seed,
                                                  std::uint64_t domain_seed);

}  // namespace fsmt

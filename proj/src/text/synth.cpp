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
#include "fsmt/text/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fsmt/common/error.hpp"
#include "fsmt/common/rng.hpp"

namespace fsmt {

namespace {

// Fractions of the word-type pool covered by each substitution layer.
constexpr double kSharedFraction = 0.25;
constexpr double kDomainFraction = 0.15;

std::string make_word(Rng& rng) {
    static const char* consonants = "bdfgklmnprstvz";
    static const char* vowels = "aeiou";
    const int syllables = rng.range_int(2, 3);
    std::string w;
    for (int s = 0; s < syllables; ++s) {
        w.push_back(consonants[rng.below(14)]);
        w.push_back(vowels[rng.below(5)]);
    }
    return w;
}

int sample_word_index(const BaseLanguage& lang, double total_weight, Rng& rng) {
    double x = rng.real01() * total_weight;
    for (std::size_t i = 0; i < lang.weights.size(); ++i) {
        x -= lang.weights[i];
        if (x < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(lang.weights.size()) - 1;
}

// Maps each selected word to the next one in a shuffled cycle, so the
// substitution has no fixed points and stays inside the word pool.
std::map<std::string, std::string> cyclic_map(const std::vector<std::string>& selected) {
    std::map<std::string, std::string> m;
    for (std::size_t i = 0; i < selected.size(); ++i)
        m[selected[i]] = selected[(i + 1) % selected.size()];
    return m;
}

struct GeneratorKind {
    enum Kind { Copy, Reverse, Shift, Lexicon } kind = Copy;
    int shift = 0;
    std::uint64_t lexicon_seed = 0;
};

GeneratorKind parse_generator(const std::string& name) {
    GeneratorKind g;
    if (name == "copy") {
        g.kind = GeneratorKind::Copy;
        return g;
    }
    if (name == "reverse") {
        g.kind = GeneratorKind::Reverse;
        return g;
    }
    if (name.rfind("shift:", 0) == 0) {
        try {
            g.shift = std::stoi(name.substr(6));
        } catch (...) {
            throw UnknownDomainError(name);
        }
        if (g.shift < 0) throw UnknownDomainError(name);
        g.kind = GeneratorKind::Shift;
        return g;
    }
    if (name.rfind("lexicon:", 0) == 0) {
        try {
            g.lexicon_seed = std::stoull(name.substr(8));
        } catch (...) {
            throw UnknownDomainError(name);
        }
        g.kind = GeneratorKind::Lexicon;
        return g;
    }
    throw UnknownDomainError(name);
}

}  // namespace

BaseLanguage make_base_language(std::uint64_t language_seed, int n_types) {
    if (n_types < 8) throw ConfigError("base language needs at least 8 word types");
    Rng rng(derive_seed(language_seed, "base-language"));
    BaseLanguage lang;
    std::set<std::string> seen;
    while (static_cast<int>(lang.words.size()) < n_types) {
        std::string w = make_word(rng);
        if (seen.insert(w).second) lang.words.push_back(std::move(w));
    }
    lang.weights.resize(lang.words.size());
    for (std::size_t i = 0; i < lang.weights.size(); ++i)
        lang.weights[i] = 1.0 / std::pow(static_cast<double>(i) + 1.0, 0.7);
    return lang;
}

std::map<std::string, std::string> shared_lexicon(const BaseLanguage& lang,
                                                  std::uint64_t language_seed) {
    Rng rng(derive_seed(language_seed, "shared-lexicon"));
    std::vector<std::string> pool = lang.words;
    rng.shuffle(pool);
    const int k = std::max(2, static_cast<int>(kSharedFraction * pool.size()));
    pool.resize(static_cast<std::size_t>(k));
    return cyclic_map(pool);
}

std::map<std::string, std::string> domain_lexicon(const BaseLanguage& lang,
                                                  std::uint64_t language_seed,
                                                  std::uint64_t domain_seed) {
    const auto shared = shared_lexicon(lang, language_seed);
    std::vector<std::string> pool;
    for (const auto& w : lang.words)
        if (!shared.count(w)) pool.push_back(w);
    Rng rng(derive_seed(splitmix64(language_seed) ^ domain_seed, "domain-lexicon"));
    rng.shuffle(pool);
    const int k = std::max(2, static_cast<int>(kDomainFraction * lang.words.size()));
    pool.resize(std::min(pool.size(), static_cast<std::size_t>(k)));
    return cyclic_map(pool);
}

RawCorpus synth_domain(const SyntheticDomainSpec& spec, int n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) throw ConfigError("synth_domain: n_pairs must be at least 1");
    const GeneratorKind gen = parse_generator(spec.generator);
    const BaseLanguage lang = make_base_language(spec.language_seed, spec.n_types);
    const double total_weight =
        std::accumulate(lang.weights.begin(), lang.weights.end(), 0.0);

    std::map<std::string, std::string> shared, domain;
    if (gen.kind == GeneratorKind::Lexicon) {
        shared = shared_lexicon(lang, spec.language_seed);
        domain = domain_lexicon(lang, spec.language_seed, gen.lexicon_seed);
    }

    Rng rng(derive_seed(seed, "synth:" + spec.generator));
    RawCorpus corpus;
    corpus.domain_id = spec.generator;
    corpus.pairs.reserve(static_cast<std::size_t>(n_pairs));
    for (int p = 0; p < n_pairs; ++p) {
        const int len = rng.range_int(4, 11);
        std::vector<std::string> src(static_cast<std::size_t>(len));
        for (auto& w : src) w = lang.words[sample_word_index(lang, total_weight, rng)];

        std::vector<std::string> tgt = src;
        switch (gen.kind) {
            case GeneratorKind::Copy:
                break;
            case GeneratorKind::Reverse:
                std::reverse(tgt.begin(), tgt.end());
                break;
            case GeneratorKind::Shift:
                for (int i = 0; i < len; ++i) tgt[i] = src[(i + gen.shift) % len];
                break;
            case GeneratorKind::Lexicon:
                for (auto& w : tgt) {
                    auto d = domain.find(w);
                    if (d != domain.end()) {
                        w = d->second;
                        continue;
                    }
                    auto s = shared.find(w);
                    if (s != shared.end()) w = s->second;
                }
                break;
        }

        RawPair pair;
        for (int i = 0; i < len; ++i) {
            if (i) pair.source.push_back(' ');
            pair.source += src[i];
        }
        for (int i = 0; i < len; ++i) {
            if (i) pair.target.push_back(' ');
            pair.target += tgt[i];
        }
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

}  // namespace fsmt

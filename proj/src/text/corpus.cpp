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
#include "fsmt/text/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "fsmt/common/error.hpp"

namespace fsmt {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Frequency-then-lexicographic order shared by both vocabulary builders.
std::vector<std::string> ranked_types(const std::map<std::string, long>& counts, int max_types) {
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> types;
    for (const auto& [t, c] : items) {
        if (max_types > 0 && static_cast<int>(types.size()) >= max_types) break;
        types.push_back(t);
    }
    return types;
}

}  // namespace

RawCorpus load_parallel(const std::string& src_path, const std::string& tgt_path,
                        const std::string& domain_id) {
    const auto src = read_lines(src_path);
    const auto tgt = read_lines(tgt_path);
    if (src.size() != tgt.size()) throw AlignmentError(src.size(), tgt.size());
    RawCorpus corpus;
    corpus.domain_id = domain_id;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (split_words(src[i]).empty() || split_words(tgt[i]).empty()) {
            ++corpus.dropped_count;
            continue;
        }
        corpus.pairs.push_back({src[i], tgt[i]});
    }
    return corpus;
}

ParallelCorpus tokenize_corpus(const RawCorpus& raw, const Vocabulary& vocab) {
    ParallelCorpus corpus;
    corpus.domain_id = raw.domain_id;
    corpus.pairs.reserve(raw.pairs.size());
    for (const auto& p : raw.pairs) {
        SentencePair sp;
        sp.source = vocab.encode(p.source);
        sp.target = vocab.encode(p.target);
        sp.source_word_count = static_cast<int>(split_words(p.source).size());
        corpus.pairs.push_back(std::move(sp));
    }
    return corpus;
}

long total_source_words(const ParallelCorpus& corpus) {
    long total = 0;
    for (const auto& p : corpus.pairs) total += p.source_word_count;
    return total;
}

Vocabulary build_word_vocab(const std::vector<RawCorpus>& corpora, int max_types) {
    std::map<std::string, long> counts;
    for (const auto& c : corpora)
        for (const auto& p : c.pairs) {
            for (const auto& w : split_words(p.source)) ++counts[w];
            for (const auto& w : split_words(p.target)) ++counts[w];
        }
    if (counts.empty()) throw EmptyCorpusError("build_word_vocab: no text");
    return Vocabulary::word_level(ranked_types(counts, max_types));
}

Vocabulary learn_bpe(const RawCorpus& corpus, int merges) {
    if (merges < 0) throw ConfigError("learn_bpe: negative merge count");
    // Segmentations of each distinct word, weighted by occurrence count.
    std::map<std::string, long> word_counts;
    for (const auto& p : corpus.pairs) {
        for (const auto& w : split_words(p.source)) ++word_counts[w];
        for (const auto& w : split_words(p.target)) ++word_counts[w];
    }
    if (word_counts.empty()) throw EmptyCorpusError("learn_bpe: no text");

    std::vector<std::vector<std::string>> segs;
    std::vector<long> seg_counts;
    std::map<std::string, long> base_symbols;
    for (const auto& [word, count] : word_counts) {
        std::vector<std::string> sym;
        std::size_t i = 0;
        while (i < word.size()) {
            std::size_t j = i + 1;
            while (j < word.size() && (static_cast<unsigned char>(word[j]) & 0xC0) == 0x80) ++j;
            sym.push_back(word.substr(i, j - i));
            i = j;
        }
        sym.push_back(Vocabulary::kWordEnd);
        for (const auto& s : sym) base_symbols[s] += count;
        segs.push_back(std::move(sym));
        seg_counts.push_back(count);
    }

    std::vector<std::pair<std::string, std::string>> merge_table;
    for (int round = 0; round < merges; ++round) {
        std::map<std::pair<std::string, std::string>, long> pair_counts;
        for (std::size_t w = 0; w < segs.size(); ++w)
            for (std::size_t i = 0; i + 1 < segs[w].size(); ++i)
                pair_counts[{segs[w][i], segs[w][i + 1]}] += seg_counts[w];
        std::pair<std::string, std::string> best;
        long best_count = 0;
        for (const auto& [pair, count] : pair_counts) {
            // std::map iterates pairs in ascending lexicographic order, so
            // a strict > keeps the lexicographically smallest of any tie.
            if (count > best_count) {
                best_count = count;
                best = pair;
            }
        }
        if (best_count < 2) break;
        merge_table.push_back(best);
        for (auto& sym : segs) {
            for (std::size_t i = 0; i + 1 < sym.size();) {
                if (sym[i] == best.first && sym[i + 1] == best.second) {
                    sym[i] = best.first + best.second;
                    sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
    }

    // Ids: reserved block, base characters in lexicographic order, then one
    // token per merge in merge order. Distinct merges can in principle spell
    // the same product, so duplicates are skipped.
    std::vector<std::string> types;
    std::set<std::string> seen;
    for (const auto& [s, c] : base_symbols)
        if (seen.insert(s).second) types.push_back(s);
    for (const auto& [l, r] : merge_table)
        if (seen.insert(l + r).second) types.push_back(l + r);
    return Vocabulary::subword(types, std::move(merge_table));
}

}  // namespace fsmt

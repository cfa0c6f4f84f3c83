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

#include <string>
#include <vector>

#include "fsmt/text/vocabulary.hpp"

namespace fsmt {

struct RawPair {
    std::string source;
    std::string target;
};

// Untokenized aligned text plus a count of dropped (empty-sided) lines.
struct RawCorpus {
    std::string domain_id;
    std::vector<RawPair> pairs;
    int dropped_count = 0;
};

// Token ids carry no BOS/EOS; the model inserts those. source_word_count is
// the whitespace word count of the raw source line, the unit all data
// budgets are expressed in.
struct SentencePair {
    std::vector<int> source;
    std::vector<int> target;
    int source_word_count = 0;
};

struct ParallelCorpus {
    std::string domain_id;
    std::vector<SentencePair> pairs;
};

// Line-aligned plain-text files. Throws AlignmentError on a line-count
// mismatch; pairs with an empty side are dropped and counted.
RawCorpus load_parallel(const std::string& src_path, const std::string& tgt_path,
                        const std::string& domain_id);

ParallelCorpus tokenize_corpus(const RawCorpus& raw, const Vocabulary& vocab);

long total_source_words(const ParallelCorpus& corpus);

// Word-level joint vocabulary over both sides. Types ordered by descending
// frequency, ties lexicographic; max_types 0 means unlimited.
Vocabulary build_word_vocab(const std::vector<RawCorpus>& corpora, int max_types = 0);

// Byte-pair merges over characters plus an end-of-word marker, learned
// jointly over both sides. Performs at most `merges` merges, stopping early
// once no pair occurs twice. Merge table ordered by descending pair
// frequency, ties lexicographic.
Vocabulary learn_bpe(const RawCorpus& corpus, int merges);

}  // namespace fsmt

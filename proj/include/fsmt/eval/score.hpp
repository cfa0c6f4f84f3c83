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
#ifndef FSMT_EVAL_SCORE_HPP_
#define FSMT_EVAL_SCORE_HPP_

#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/eval/bleu.hpp"
#include "fsmt/model/infer.hpp"
#include "fsmt/text/vocabulary.hpp"

namespace fsmt {

struct EvalParams {
    int beam_size = 4;
    int max_len = 24;

    void validate() const {
        if (beam_size < 1) throw ConfigError("eval: beam_size must be >= 1");
        if (max_len < 1) throw ConfigError("eval: max_len must be >= 1");
    }
};

// Beam-decodes every source sentence and returns detokenized text.
template <typename T>
std::vector<std::string> decode_corpus(const ModelParameters<T>& model,
                                       const std::vector<SentencePair>& pairs,
                                       const Vocabulary& vocab, const EvalParams& ev) {
    ev.validate();
    std::vector<std::string> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs)
        out.push_back(vocab.decode(beam_decode(model, pair.source, ev.beam_size,
                                               ev.max_len)));
    return out;
}

template <typename T>
BleuScore model_bleu(const ModelParameters<T>& model,
                     const std::vector<SentencePair>& pairs, const Vocabulary& vocab,
                     const EvalParams& ev) {
    std::vector<std::string> refs;
    refs.reserve(pairs.size());
    for (const auto& pair : pairs) refs.push_back(vocab.decode(pair.target));
    return corpus_bleu(decode_corpus(model, pairs, vocab, ev), refs);
}

}  // namespace fsmt

#endif  // FSMT_EVAL_SCORE_HPP_

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

#include <cmath>
#include <vector>

#include "fsmt/model/beam.hpp"
#include "fsmt/model/transformer.hpp"

namespace fsmt {

// Eval-mode decoder interface for beam_search. Encodes the source once;
// every next_log_probs call replays the decoder over BOS + prefix. Runs the
// same graph code as training, so scoring matches the training forward pass.
template <typename T>
class TransformerScorer {
public:
    TransformerScorer(const ModelParameters<T>& model, const std::vector<int>& source)
        : model_(model) {
        Tape<T> tape;
        ParameterView no_grads;
        TapeModel<T> tm = make_leaves(tape, model, no_grads);
        GraphBuilder<T> builder(tape, model, tm, Mode::Eval, nullptr);
        enc_out_ = tape.value(builder.encode(source));
    }

    int eos_id() const { return Vocabulary::kEos; }

    std::vector<int> prefix_with_bos(const std::vector<int>& prefix) const {
        std::vector<int> dec_input;
        dec_input.reserve(prefix.size() + 1);
        dec_input.push_back(Vocabulary::kBos);
        dec_input.insert(dec_input.end(), prefix.begin(), prefix.end());
        return dec_input;
    }

    std::vector<double> next_log_probs(const std::vector<int>& prefix) {
        Tape<T> tape;
        ParameterView no_grads;
        TapeModel<T> tm = make_leaves(tape, model_, no_grads);
        GraphBuilder<T> builder(tape, model_, tm, Mode::Eval, nullptr);
        const int enc = tape.constant(enc_out_);
        const int logits =
            builder.output_logits(builder.decode_hidden(enc, prefix_with_bos(prefix)));
        const Matrix<T>& L = tape.value(logits);
        const int last = L.rows() - 1;
        // Stable log-softmax in double regardless of the model precision.
        std::vector<double> lp(static_cast<std::size_t>(L.cols()));
        double mx = -1e300;
        for (int c = 0; c < L.cols(); ++c) mx = std::max(mx, static_cast<double>(L(last, c)));
        double denom = 0.0;
        for (int c = 0; c < L.cols(); ++c)
            denom += std::exp(static_cast<double>(L(last, c)) - mx);
        const double log_denom = std::log(denom) + mx;
        for (int c = 0; c < L.cols(); ++c)
            lp[static_cast<std::size_t>(c)] = static_cast<double>(L(last, c)) - log_denom;
        return lp;
    }

private:
    const ModelParameters<T>& model_;
    Matrix<T> enc_out_;
};

template <typename T>
std::vector<int> beam_decode(const ModelParameters<T>& model, const std::vector<int>& source,
                             int beam_size, int max_len) {
    TransformerScorer<T> scorer(model, source);
    return beam_search(scorer, beam_size, max_len);
}

// Independent greedy loop (first maximum wins), used both as the fast
// decoding path and as the reference beam-1 must match.
template <typename T>
std::vector<int> greedy_decode(const ModelParameters<T>& model, const std::vector<int>& source,
                               int max_len) {
    TransformerScorer<T> scorer(model, source);
    std::vector<int> out;
    for (int step = 0; step < max_len; ++step) {
        const auto lp = scorer.next_log_probs(out);
        int best = 0;
        for (int v = 1; v < static_cast<int>(lp.size()); ++v)
            if (lp[static_cast<std::size_t>(v)] > lp[static_cast<std::size_t>(best)]) best = v;
        if (best == Vocabulary::kEos) break;
        out.push_back(best);
    }
    return out;
}

}  // namespace fsmt

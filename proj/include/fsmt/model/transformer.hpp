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
#include <string>
#include <vector>

#include "fsmt/autodiff/tape.hpp"
#include "fsmt/common/error.hpp"
#include "fsmt/common/matrix.hpp"
#include "fsmt/common/rng.hpp"
#include "fsmt/model/parameters.hpp"
#include "fsmt/text/corpus.hpp"
#include "fsmt/text/vocabulary.hpp"

namespace fsmt {

constexpr double kLayerNormEps = 1e-6;

template <typename T>
Matrix<T> positional_encoding(int positions, int dim) {
    Matrix<T> pe(positions, dim);
    for (int pos = 0; pos < positions; ++pos)
        for (int i = 0; i < dim; ++i) {
            const double angle =
                pos / std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(dim));
            pe(pos, i) = static_cast<T>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    return pe;
}

// Tape leaves for every parameter array, gradients enabled exactly for the
// view. Leaf ids are aligned with ModelParameters::entries.
template <typename T>
struct TapeModel {
    const ModelParameters<T>* model = nullptr;
    std::vector<int> leaf;

    int id(const ModelParameters<T>& m, const std::string& name) const {
        return leaf[static_cast<std::size_t>(m.index_of(name))];
    }
};

template <typename T>
TapeModel<T> make_leaves(Tape<T>& tape, const ModelParameters<T>& model,
                         const ParameterView& view) {
    std::vector<bool> trainable(model.entries.size(), false);
    for (int i : view.indices) trainable[static_cast<std::size_t>(i)] = true;
    TapeModel<T> tm;
    tm.model = &model;
    tm.leaf.reserve(model.entries.size());
    for (std::size_t i = 0; i < model.entries.size(); ++i)
        tm.leaf.push_back(tape.leaf(model.entries[i].value, trainable[i]));
    return tm;
}

// Builds the forward graph for one sentence pair at a time. The sub-layer
// composition is: branch -> layer norm -> adapter (residual around the
// adapter itself, feed-forward branch only) -> dropout -> added to the
// stream. Encoder and decoder each end with a final layer norm. Source,
// target and output embeddings are one tied table.
template <typename T>
class GraphBuilder {
public:
    GraphBuilder(Tape<T>& tape, const ModelParameters<T>& model, const TapeModel<T>& tm,
                 Mode mode, Rng* rng)
        : tape_(tape), model_(model), tm_(tm), cfg_(model.config), mode_(mode), rng_(rng) {
        if (train_dropout() && rng_ == nullptr)
            throw ConfigError("forward: Train mode with dropout needs an rng");
    }

    int encode(const std::vector<int>& src_ids) {
        int x = embed(src_ids);
        for (int b = 0; b < cfg_.encoder_blocks; ++b) {
            const std::string p = "enc." + std::to_string(b);
            x = sublayer(x, attention(p + ".attn", x, x, false), p + ".attn_norm", "");
            x = sublayer(x, ffn(p + ".ffn", x), p + ".ffn_norm", p + ".adapter");
        }
        return norm(x, "enc.final_norm");
    }

    int decode_hidden(int enc_out, const std::vector<int>& dec_input) {
        int x = embed(dec_input);
        for (int b = 0; b < cfg_.decoder_blocks; ++b) {
            const std::string p = "dec." + std::to_string(b);
            x = sublayer(x, attention(p + ".self_attn", x, x, true), p + ".self_norm", "");
            x = sublayer(x, attention(p + ".cross_attn", x, enc_out, false), p + ".cross_norm",
                         "");
            x = sublayer(x, ffn(p + ".ffn", x), p + ".ffn_norm", p + ".adapter");
        }
        return norm(x, "dec.final_norm");
    }

    // Tied output projection onto the embedding table.
    int output_logits(int hidden) { return tape_.matmul_nt(hidden, param("embed.tokens")); }

    // Teacher forcing: decoder reads BOS + target, predicts target + EOS.
    // Returns the summed negative log-likelihood; token count via out param.
    int sentence_loss(const SentencePair& pair, long* token_count) {
        check_ids(pair.source);
        check_ids(pair.target);
        const int enc_out = encode(pair.source);
        std::vector<int> dec_input;
        dec_input.reserve(pair.target.size() + 1);
        dec_input.push_back(Vocabulary::kBos);
        dec_input.insert(dec_input.end(), pair.target.begin(), pair.target.end());
        std::vector<int> targets = pair.target;
        targets.push_back(Vocabulary::kEos);
        const int logits = output_logits(decode_hidden(enc_out, dec_input));
        if (token_count) *token_count += static_cast<long>(targets.size());
        return tape_.cross_entropy_sum(logits, targets);
    }

private:
    bool train_dropout() const { return mode_ == Mode::Train && cfg_.dropout_rate > 0.0; }

    int param(const std::string& name) const { return tm_.id(model_, name); }

    void check_ids(const std::vector<int>& ids) const {
        for (int id : ids)
            if (id < 0 || id >= cfg_.vocab_size)
                throw DataError("forward: token id out of vocabulary range");
    }

    int maybe_dropout(int x) {
        if (!train_dropout()) return x;
        return tape_.dropout(x, static_cast<T>(cfg_.dropout_rate), *rng_);
    }

    int embed(const std::vector<int>& ids) {
        if (ids.empty()) throw DataError("forward: empty token sequence");
        if (static_cast<int>(ids.size()) > cfg_.max_positions)
            throw DataError("forward: sentence longer than max_positions");
        int e = tape_.gather_rows(param("embed.tokens"), ids);
        e = tape_.scale(e, static_cast<T>(std::sqrt(static_cast<double>(cfg_.model_dim))));
        e = tape_.add(e, tape_.constant(positional_encoding<T>(static_cast<int>(ids.size()),
                                                               cfg_.model_dim)));
        return maybe_dropout(e);
    }

    int norm(int x, const std::string& prefix) {
        return tape_.layer_norm(x, param(prefix + ".gain"), param(prefix + ".bias"),
                                static_cast<T>(kLayerNormEps));
    }

    int linear(int x, const std::string& w, const std::string& b) {
        return tape_.add_rowvec(tape_.matmul(x, param(w)), param(b));
    }

    int attention(const std::string& prefix, int q_in, int kv_in, bool causal) {
        const int dk = cfg_.head_dim();
        const int q = linear(q_in, prefix + ".wq", prefix + ".bq");
        const int k = linear(kv_in, prefix + ".wk", prefix + ".bk");
        const int v = linear(kv_in, prefix + ".wv", prefix + ".bv");
        std::vector<int> heads;
        heads.reserve(static_cast<std::size_t>(cfg_.heads));
        for (int h = 0; h < cfg_.heads; ++h) {
            const int lo = h * dk, hi = (h + 1) * dk;
            const int qh = tape_.slice_cols(q, lo, hi);
            const int kh = tape_.slice_cols(k, lo, hi);
            const int vh = tape_.slice_cols(v, lo, hi);
            int scores = tape_.scale(tape_.matmul_nt(qh, kh),
                                     static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk))));
            int probs = tape_.softmax_rows(scores, causal);
            probs = maybe_dropout(probs);
            heads.push_back(tape_.matmul(probs, vh));
        }
        return linear(tape_.concat_cols(heads), prefix + ".wo", prefix + ".bo");
    }

    int ffn(const std::string& prefix, int x) {
        return linear(tape_.relu(linear(x, prefix + ".w1", prefix + ".b1")), prefix + ".w2",
                      prefix + ".b2");
    }

    int adapter(const std::string& prefix, int s) {
        const int hidden = tape_.relu(tape_.add_rowvec(
            tape_.matmul(s, param(prefix + ".down")), param(prefix + ".down_bias")));
        const int delta = tape_.add_rowvec(tape_.matmul(hidden, param(prefix + ".up")),
                                           param(prefix + ".up_bias"));
        return tape_.add(s, delta);
    }

    int sublayer(int x, int branch, const std::string& norm_prefix,
                 const std::string& adapter_prefix) {
        int s = norm(branch, norm_prefix);
        if (!adapter_prefix.empty() && cfg_.has_adapters()) s = adapter(adapter_prefix, s);
        return tape_.add(x, maybe_dropout(s));
    }

    Tape<T>& tape_;
    const ModelParameters<T>& model_;
    const TapeModel<T>& tm_;
    const TransformerConfig& cfg_;
    Mode mode_;
    Rng* rng_;
};

// Mean per-token negative log-likelihood (nats) over the batch. Eval mode is
// a pure function of (params, batch).
template <typename T>
T forward_loss(const ModelParameters<T>& model, const std::vector<SentencePair>& batch,
               Mode mode, Rng* rng, const std::string& batch_id = "") {
    if (batch.empty()) throw EmptyBatchError();
    Tape<T> tape;
    ParameterView no_grads;
    TapeModel<T> tm = make_leaves(tape, model, no_grads);
    GraphBuilder<T> builder(tape, model, tm, mode, rng);
    long tokens = 0;
    std::vector<int> losses;
    losses.reserve(batch.size());
    for (const auto& pair : batch) losses.push_back(builder.sentence_loss(pair, &tokens));
    const int mean = tape.scale(tape.add_n(losses), static_cast<T>(1.0 / tokens));
    const T value = tape.value(mean)(0, 0);
    if (!std::isfinite(static_cast<double>(value)))
        throw NumericalError("forward_loss: non-finite loss on batch '" + batch_id + "'");
    return value;
}

// Reverse-mode gradient of the mean per-token loss, restricted to the view.
template <typename T>
GradientBundle<T> model_grad(const ModelParameters<T>& model,
                             const std::vector<SentencePair>& batch, Mode mode, Rng* rng,
                             const ParameterView& view, const std::string& batch_id = "") {
    if (batch.empty()) throw EmptyBatchError();
    Tape<T> tape;
    TapeModel<T> tm = make_leaves(tape, model, view);
    GraphBuilder<T> builder(tape, model, tm, mode, rng);
    long tokens = 0;
    std::vector<int> losses;
    losses.reserve(batch.size());
    for (const auto& pair : batch) losses.push_back(builder.sentence_loss(pair, &tokens));
    const int mean = tape.scale(tape.add_n(losses), static_cast<T>(1.0 / tokens));
    tape.backward(mean);

    GradientBundle<T> bundle;
    bundle.indices = view.indices;
    bundle.loss = static_cast<double>(tape.value(mean)(0, 0));
    bundle.token_count = tokens;
    bundle.batch_id = batch_id;
    bundle.grads.reserve(view.indices.size());
    for (int i : view.indices) {
        const auto& g = tape.grad(tm.leaf[static_cast<std::size_t>(i)]);
        if (!g.all_finite())
            throw NumericalError("model_grad: non-finite gradient in '" +
                                 model.entries[static_cast<std::size_t>(i)].name +
                                 "' on batch '" + batch_id + "'");
        bundle.grads.push_back(g);
    }
    if (!std::isfinite(bundle.loss))
        throw NumericalError("model_grad: non-finite loss on batch '" + batch_id + "'");
    return bundle;
}

}  // namespace fsmt

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
#include "fsmt/model/parameters.hpp"

namespace fsmt {

namespace {

void push_norm(std::vector<ParamShape>& out, const std::string& prefix, int d) {
    out.push_back({prefix + ".gain", ParamGroup::Base, 1, d});
    out.push_back({prefix + ".bias", ParamGroup::Base, 1, d});
}

void push_attention(std::vector<ParamShape>& out, const std::string& prefix, int d) {
    for (const char* w : {"wq", "wk", "wv", "wo"})
        out.push_back({prefix + "." + w, ParamGroup::Base, d, d});
    for (const char* b : {"bq", "bk", "bv", "bo"})
        out.push_back({prefix + "." + b, ParamGroup::Base, 1, d});
}

void push_block(std::vector<ParamShape>& out, const std::string& prefix, bool cross,
                const TransformerConfig& c) {
    push_attention(out, prefix + (cross ? ".self_attn" : ".attn"), c.model_dim);
    push_norm(out, prefix + (cross ? ".self_norm" : ".attn_norm"), c.model_dim);
    if (cross) {
        push_attention(out, prefix + ".cross_attn", c.model_dim);
        push_norm(out, prefix + ".cross_norm", c.model_dim);
    }
    out.push_back({prefix + ".ffn.w1", ParamGroup::Base, c.model_dim, c.ffn_dim});
    out.push_back({prefix + ".ffn.b1", ParamGroup::Base, 1, c.ffn_dim});
    out.push_back({prefix + ".ffn.w2", ParamGroup::Base, c.ffn_dim, c.model_dim});
    out.push_back({prefix + ".ffn.b2", ParamGroup::Base, 1, c.model_dim});
    push_norm(out, prefix + ".ffn_norm", c.model_dim);
    if (c.has_adapters()) {
        out.push_back({prefix + ".adapter.down", ParamGroup::Adapter, c.model_dim,
                       c.adapter_hidden});
        out.push_back({prefix + ".adapter.down_bias", ParamGroup::Adapter, 1,
                       c.adapter_hidden});
        out.push_back({prefix + ".adapter.up", ParamGroup::Adapter, c.adapter_hidden,
                       c.model_dim});
        out.push_back({prefix + ".adapter.up_bias", ParamGroup::Adapter, 1, c.model_dim});
    }
}

}  // namespace

std::vector<ParamShape> parameter_shapes(const TransformerConfig& c) {
    c.validate();
    std::vector<ParamShape> out;
    out.push_back({"embed.tokens", ParamGroup::Base, c.vocab_size, c.model_dim});
    for (int b = 0; b < c.encoder_blocks; ++b)
        push_block(out, "enc." + std::to_string(b), false, c);
    push_norm(out, "enc.final_norm", c.model_dim);
    for (int b = 0; b < c.decoder_blocks; ++b)
        push_block(out, "dec." + std::to_string(b), true, c);
    push_norm(out, "dec.final_norm", c.model_dim);
    return out;
}

long parameter_count(const TransformerConfig& config, ParamGroup group) {
    long total = 0;
    for (const auto& s : parameter_shapes(config))
        if (s.group == group) total += static_cast<long>(s.rows) * s.cols;
    return total;
}

}  // namespace fsmt

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
#include "fsmt/model/config.hpp"

#include "fsmt/common/error.hpp"
#include "json.hpp"

namespace fsmt {

void TransformerConfig::validate() const {
    if (encoder_blocks < 1 || decoder_blocks < 1)
        throw ConfigError("config: need at least one encoder and one decoder block");
    if (model_dim < 1 || ffn_dim < 1) throw ConfigError("config: dimensions must be positive");
    if (heads < 1 || model_dim % heads != 0)
        throw ConfigError("config: model_dim must be divisible by heads");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("config: dropout_rate must lie in [0,1)");
    if (adapter_hidden < 0) throw ConfigError("config: adapter_hidden must be >= 0");
    if (vocab_size < 5) throw ConfigError("config: vocab_size must cover the reserved ids");
    if (max_positions < 1) throw ConfigError("config: max_positions must be positive");
}

TransformerConfig desk_config() { return TransformerConfig{}; }

TransformerConfig paper_scale_config() {
    TransformerConfig c;
    c.encoder_blocks = 6;
    c.decoder_blocks = 6;
    c.model_dim = 512;
    c.ffn_dim = 2048;
    c.heads = 8;
    c.dropout_rate = 0.1;
    c.adapter_hidden = 32;
    c.vocab_size = 40000;
    c.max_positions = 1024;
    return c;
}

std::string config_to_json_string(const TransformerConfig& c) {
    nlohmann::json j;
    j["encoder_blocks"] = c.encoder_blocks;
    j["decoder_blocks"] = c.decoder_blocks;
    j["model_dim"] = c.model_dim;
    j["ffn_dim"] = c.ffn_dim;
    j["heads"] = c.heads;
    j["dropout_rate"] = c.dropout_rate;
    j["adapter_hidden"] = c.adapter_hidden;
    j["vocab_size"] = c.vocab_size;
    j["max_positions"] = c.max_positions;
    return j.dump();
}

TransformerConfig config_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad JSON: ") + e.what());
    }
    TransformerConfig c;
    try {
        c.encoder_blocks = j.at("encoder_blocks").get<int>();
        c.decoder_blocks = j.at("decoder_blocks").get<int>();
        c.model_dim = j.at("model_dim").get<int>();
        c.ffn_dim = j.at("ffn_dim").get<int>();
        c.heads = j.at("heads").get<int>();
        c.dropout_rate = j.at("dropout_rate").get<double>();
        c.adapter_hidden = j.at("adapter_hidden").get<int>();
        c.vocab_size = j.at("vocab_size").get<int>();
        c.max_positions = j.at("max_positions").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: missing or mistyped field: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace fsmt

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

namespace fsmt {

enum class Mode { Train, Eval };

// adapter_hidden == 0 means the model has no adapter modules.
struct TransformerConfig {
    int encoder_blocks = 2;
    int decoder_blocks = 2;
    int model_dim = 64;
    int ffn_dim = 256;
    int heads = 4;
    double dropout_rate = 0.1;
    int adapter_hidden = 8;
    int vocab_size = 512;
    int max_positions = 64;

    bool has_adapters() const { return adapter_hidden > 0; }
    int head_dim() const { return model_dim / heads; }

    // Throws ConfigError when any invariant is broken.
    void validate() const;
};

// The sizes experiments run at on a single desk machine.
TransformerConfig desk_config();

// Full-size preset, used only for parameter accounting.
TransformerConfig paper_scale_config();

std::string config_to_json_string(const TransformerConfig& c);
TransformerConfig config_from_json_string(const std::string& text);

}  // namespace fsmt

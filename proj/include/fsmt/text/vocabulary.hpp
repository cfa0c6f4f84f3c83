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
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fsmt {

// Joint source/target vocabulary. Two modes:
//  - word level: one id per whitespace word
//  - subword: greedy merge segmentation over characters, with an explicit
//    end-of-word marker so decoding can restore word boundaries
// Subword mode is active exactly when the marker symbol is present.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;
    static constexpr const char* kWordEnd = "</w>";

    // `types`: ordinary tokens, ids assigned in the given order after the
    // reserved block. Duplicates and reserved literals are rejected.
    static Vocabulary word_level(const std::vector<std::string>& types);
    static Vocabulary subword(const std::vector<std::string>& types,
                              std::vector<std::pair<std::string, std::string>> merges);

    int size() const { return static_cast<int>(tokens_.size()); }
    bool subword_mode() const { return subword_; }
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    // -1 when the token is unknown.
    int id_of(std::string_view token) const;
    const std::string& token_of(int id) const;

    // Whitespace split, then direct lookup (word mode) or merge segmentation
    // (subword mode). Never yields PAD/BOS/EOS; unknown symbols become UNK.
    // Throws EmptyLineError when the line is empty after trimming.
    std::vector<int> encode(std::string_view line) const;

    // Inverse of encode on in-vocabulary text. PAD/BOS/EOS are skipped.
    std::string decode(const std::vector<int>& ids) const;

    std::string to_json_string() const;
    static Vocabulary from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    Vocabulary() = default;
    void add_token(const std::string& t);
    std::vector<std::string> segment_word(std::string_view word) const;

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::pair<std::string, std::string>> merges_;
    bool subword_ = false;
};

std::vector<int> tokenize(std::string_view line, const Vocabulary& vocab);

// Splits on runs of whitespace; no empty pieces.
std::vector<std::string> split_words(std::string_view line);

}  // namespace fsmt

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
#include "fsmt/text/vocabulary.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "fsmt/common/error.hpp"
#include "json.hpp"

namespace fsmt {

namespace {

const char* kReservedLiterals[4] = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// UTF-8 code points; continuation bytes have the top bits 10.
std::vector<std::string> split_chars(std::string_view word) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < word.size()) {
        std::size_t j = i + 1;
        while (j < word.size() && (static_cast<unsigned char>(word[j]) & 0xC0) == 0x80) ++j;
        out.emplace_back(word.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) words.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return words;
}

void Vocabulary::add_token(const std::string& t) {
    if (index_.count(t)) throw DataError("vocabulary: duplicate token '" + t + "'");
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
}

Vocabulary Vocabulary::word_level(const std::vector<std::string>& types) {
    Vocabulary v;
    for (const char* r : kReservedLiterals) v.add_token(r);
    for (const auto& t : types) {
        if (t == kWordEnd) throw DataError("vocabulary: marker token in word-level mode");
        v.add_token(t);
    }
    v.subword_ = false;
    return v;
}

Vocabulary Vocabulary::subword(const std::vector<std::string>& types,
                               std::vector<std::pair<std::string, std::string>> merges) {
    Vocabulary v;
    for (const char* r : kReservedLiterals) v.add_token(r);
    for (const auto& t : types) v.add_token(t);
    if (!v.index_.count(kWordEnd))
        throw DataError("vocabulary: subword mode requires the end-of-word marker");
    v.merges_ = std::move(merges);
    v.subword_ = true;
    return v;
}

int Vocabulary::id_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || id >= size()) throw DataError("vocabulary: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::segment_word(std::string_view word) const {
    std::vector<std::string> sym = split_chars(word);
    sym.push_back(kWordEnd);
    for (const auto& [l, r] : merges_) {
        for (std::size_t i = 0; i + 1 < sym.size();) {
            if (sym[i] == l && sym[i + 1] == r) {
                sym[i] = l + r;
                sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            } else {
                ++i;
            }
        }
    }
    return sym;
}

std::vector<int> Vocabulary::encode(std::string_view line) const {
    const auto words = split_words(line);
    if (words.empty()) throw EmptyLineError();
    std::vector<int> ids;
    for (const auto& w : words) {
        if (!subword_) {
            const int id = id_of(w);
            ids.push_back(id >= kUnk ? id : kUnk);
            continue;
        }
        for (const auto& s : segment_word(w)) {
            const int id = id_of(s);
            ids.push_back(id >= kUnk ? id : kUnk);
        }
    }
    return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::string out;
    const std::string marker = kWordEnd;
    for (int id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        const std::string& t = token_of(id);
        if (!subword_) {
            if (!out.empty()) out.push_back(' ');
            out += t;
            continue;
        }
        if (t.size() >= marker.size() &&
            t.compare(t.size() - marker.size(), marker.size(), marker) == 0) {
            out += t.substr(0, t.size() - marker.size());
            out.push_back(' ');
        } else {
            out += t;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string Vocabulary::to_json_string() const {
    nlohmann::json j;
    j["tokens"] = tokens_;
    auto merges = nlohmann::json::array();
    for (const auto& [l, r] : merges_) merges.push_back({l, r});
    j["merges"] = merges;
    j["reserved"] = {{"pad", kPad}, {"bos", kBos}, {"eos", kEos}, {"unk", kUnk}};
    return j.dump(2) + "\n";
}

Vocabulary Vocabulary::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("vocabulary: bad JSON: ") + e.what());
    }
    if (!j.contains("tokens") || !j.contains("reserved"))
        throw DataError("vocabulary: missing tokens or reserved block");
    const auto& res = j["reserved"];
    if (res.value("pad", -1) != kPad || res.value("bos", -1) != kBos ||
        res.value("eos", -1) != kEos || res.value("unk", -1) != kUnk)
        throw DataError("vocabulary: unexpected reserved id assignment");
    std::vector<std::string> tokens = j["tokens"].get<std::vector<std::string>>();
    if (tokens.size() < 4) throw DataError("vocabulary: token list too short");
    for (int i = 0; i < 4; ++i)
        if (tokens[static_cast<std::size_t>(i)] != kReservedLiterals[i])
            throw DataError("vocabulary: reserved literals out of place");
    std::vector<std::pair<std::string, std::string>> merges;
    for (const auto& m : j.value("merges", nlohmann::json::array())) {
        if (!m.is_array() || m.size() != 2) throw DataError("vocabulary: bad merge entry");
        merges.emplace_back(m[0].get<std::string>(), m[1].get<std::string>());
    }
    std::vector<std::string> types(tokens.begin() + 4, tokens.end());
    bool has_marker = false;
    for (const auto& t : types) has_marker = has_marker || t == kWordEnd;
    if (has_marker) return subword(types, std::move(merges));
    if (!merges.empty()) throw DataError("vocabulary: merges present without marker token");
    return word_level(types);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("vocabulary: cannot write " + path);
    out << to_json_string();
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("vocabulary: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

std::vector<int> tokenize(std::string_view line, const Vocabulary& vocab) {
    return vocab.encode(line);
}

}  // namespace fsmt

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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/model/parameters.hpp"
#include "json.hpp"

namespace fsmt {

// File layout (all integers little-endian):
//   8 bytes   magic "FSMTCKPT"
//   u32       format version (1)
//   u32       scalar width in bytes (4 = float, 8 = double)
//   u64       header length in bytes
//   header    JSON: config, kind, step counters, array table with offsets
//   payload   raw arrays, row-major, in table order
// load(save(m)) is bit-exact. Cross-precision loads are refused.

namespace ckpt_detail {

constexpr char kMagic[8] = {'F', 'S', 'M', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

inline const char* group_tag(ParamGroup g) {
    return g == ParamGroup::Base ? "base" : "adapter";
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const ModelParameters<T>& model, const std::string& path) {
    nlohmann::json header;
    header["config"] = nlohmann::json::parse(config_to_json_string(model.config));
    header["kind"] = model.kind;
    header["step"] = model.step;
    header["meta_step"] = model.meta_step;
    auto arrays = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& e : model.entries) {
        arrays.push_back({{"name", e.name},
                          {"group", ckpt_detail::group_tag(e.group)},
                          {"rows", e.value.rows()},
                          {"cols", e.value.cols()},
                          {"offset", offset}});
        offset += e.value.size() * sizeof(T);
    }
    header["arrays"] = arrays;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("checkpoint: cannot write " + path);
    out.write(ckpt_detail::kMagic, 8);
    const std::uint32_t version = ckpt_detail::kVersion;
    const std::uint32_t width = sizeof(T);
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&width), 4);
    out.write(reinterpret_cast<const char*>(&header_len), 8);
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& e : model.entries)
        out.write(reinterpret_cast<const char*>(e.value.data()),
                  static_cast<std::streamsize>(e.value.size() * sizeof(T)));
    if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

template <typename T>
ModelParameters<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint: cannot read " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, ckpt_detail::kMagic, 8) != 0)
        throw CheckpointError("checkpoint: bad magic bytes in " + path);
    std::uint32_t version = 0, width = 0;
    std::uint64_t header_len = 0;
    if (!in.read(reinterpret_cast<char*>(&version), 4) ||
        !in.read(reinterpret_cast<char*>(&width), 4) ||
        !in.read(reinterpret_cast<char*>(&header_len), 8))
        throw CheckpointError("checkpoint: truncated header in " + path);
    if (version != ckpt_detail::kVersion)
        throw CheckpointError("checkpoint: unsupported format version " +
                              std::to_string(version));
    if (width != sizeof(T))
        throw CheckpointError("checkpoint: precision mismatch (file " + std::to_string(width) +
                              " bytes/scalar, expected " + std::to_string(sizeof(T)) + ")");
    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), static_cast<std::streamsize>(header_len)))
        throw CheckpointError("checkpoint: truncated header in " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: bad header JSON: ") + e.what());
    }

    ModelParameters<T> model;
    try {
        model.config = config_from_json_string(header.at("config").dump());
        model.kind = header.at("kind").get<std::string>();
        model.step = header.at("step").get<long>();
        model.meta_step = header.at("meta_step").get<long>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: bad header fields: ") + e.what());
    }

    const auto expected = parameter_shapes(model.config);
    const auto& arrays = header.at("arrays");
    if (!arrays.is_array() || arrays.size() != expected.size())
        throw CheckpointError("checkpoint: array table does not match the config");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& a = arrays[i];
        if (a.at("name").get<std::string>() != expected[i].name ||
            a.at("group").get<std::string>() != ckpt_detail::group_tag(expected[i].group) ||
            a.at("rows").get<int>() != expected[i].rows ||
            a.at("cols").get<int>() != expected[i].cols)
            throw CheckpointError("checkpoint: array '" + expected[i].name +
                                  "' does not match the config");
    }

    for (const auto& s : expected) {
        ParamEntry<T> e{s.name, s.group, Matrix<T>(s.rows, s.cols)};
        if (!in.read(reinterpret_cast<char*>(e.value.data()),
                     static_cast<std::streamsize>(e.value.size() * sizeof(T))))
            throw CheckpointError("checkpoint: truncated payload in " + path);
        model.entries.push_back(std::move(e));
    }
    if (!model.all_finite())
        throw CheckpointError("checkpoint: non-finite parameter values in " + path);
    return model;
}

}  // namespace fsmt

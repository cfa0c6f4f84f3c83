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
#include <cstdint>
#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/common/matrix.hpp"
#include "fsmt/common/rng.hpp"
#include "fsmt/model/config.hpp"

namespace fsmt {

enum class ParamGroup { Base, Adapter };

enum class ParameterScope { AdaptersOnly, AllParameters };

struct ParamShape {
    std::string name;
    ParamGroup group;
    int rows;
    int cols;
};

// Every parameter array of a model under the given config, in a fixed
// canonical order. Adapters sit on the feed-forward branch of each block;
// the source/target/output embedding is one tied table.
std::vector<ParamShape> parameter_shapes(const TransformerConfig& config);

long parameter_count(const TransformerConfig& config, ParamGroup group);

template <typename T>
struct ParamEntry {
    std::string name;
    ParamGroup group;
    Matrix<T> value;
};

template <typename T>
struct ModelParameters {
    TransformerConfig config;
    std::vector<ParamEntry<T>> entries;
    std::string kind = "initialized";
    long step = 0;
    long meta_step = 0;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].name == name) return static_cast<int>(i);
        throw ConfigError("model: no parameter named '" + name + "'");
    }
    Matrix<T>& at(const std::string& name) {
        return entries[static_cast<std::size_t>(index_of(name))].value;
    }
    const Matrix<T>& at(const std::string& name) const {
        return entries[static_cast<std::size_t>(index_of(name))].value;
    }
    bool all_finite() const {
        for (const auto& e : entries)
            if (!e.value.all_finite()) return false;
        return true;
    }
};

// Indices into ModelParameters::entries that a training step may touch.
struct ParameterView {
    std::vector<int> indices;
    long count = 0;  // total scalar parameters in view
};

namespace detail {

// Per-array generator keyed by name, so initialization does not depend on
// the order arrays are created in.
template <typename T>
void init_entry(ParamEntry<T>& e, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "init:" + e.name));
    Matrix<T>& m = e.value;
    const bool is_bias = m.rows() == 1;
    const auto ends_with = [&](const char* suffix) {
        const std::string s = suffix;
        return e.name.size() >= s.size() &&
               e.name.compare(e.name.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".gain")) {
        m.fill(T(1));
        return;
    }
    if (ends_with(".bias") || is_bias || ends_with("adapter.up")) {
        // Zero biases; zero up-projection makes each adapter the identity.
        m.zero();
        return;
    }
    if (e.name == "embed.tokens") {
        const double sigma = 1.0 / std::sqrt(static_cast<double>(m.cols()));
        for (std::size_t i = 0; i < m.size(); ++i)
            m.at_flat(i) = static_cast<T>(rng.normal(0.0, sigma));
        return;
    }
    const double sigma = std::sqrt(2.0 / static_cast<double>(m.rows() + m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i)
        m.at_flat(i) = static_cast<T>(rng.normal(0.0, sigma));
}

}  // namespace detail

template <typename T>
ModelParameters<T> init_model(const TransformerConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParameters<T> model;
    model.config = config;
    for (const auto& s : parameter_shapes(config)) {
        ParamEntry<T> e{s.name, s.group, Matrix<T>(s.rows, s.cols)};
        detail::init_entry(e, seed);
        model.entries.push_back(std::move(e));
    }
    return model;
}

// Adds freshly initialized (identity) adapter modules to an adapter-free
// model, leaving every existing array untouched.
template <typename T>
void attach_adapters(ModelParameters<T>& model, int adapter_hidden, std::uint64_t seed) {
    if (model.config.has_adapters())
        throw ConfigError("attach_adapters: model already has adapters");
    if (adapter_hidden < 1) throw ConfigError("attach_adapters: hidden size must be >= 1");
    TransformerConfig with = model.config;
    with.adapter_hidden = adapter_hidden;
    std::vector<ParamEntry<T>> merged;
    std::size_t old_i = 0;
    for (const auto& s : parameter_shapes(with)) {
        if (s.group == ParamGroup::Adapter) {
            ParamEntry<T> e{s.name, s.group, Matrix<T>(s.rows, s.cols)};
            detail::init_entry(e, seed);
            merged.push_back(std::move(e));
        } else {
            merged.push_back(std::move(model.entries[old_i++]));
        }
    }
    model.entries = std::move(merged);
    model.config = with;
}

// Zeroes every adapter array, turning each adapter into the identity map.
template <typename T>
void zero_adapters(ModelParameters<T>& model) {
    for (auto& e : model.entries)
        if (e.group == ParamGroup::Adapter) e.value.zero();
}

// Zeroes only the adapter up-projections (weight and bias). Each adapter then
// emits a zero delta regardless of its down-projection state, so the model
// computes the same function as one with identity adapters.
template <typename T>
void zero_adapter_up_projections(ModelParameters<T>& model) {
    const auto ends_with = [](const std::string& name, const char* suffix) {
        const std::string s = suffix;
        return name.size() >= s.size() &&
               name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    for (auto& e : model.entries)
        if (e.group == ParamGroup::Adapter &&
            (ends_with(e.name, ".adapter.up") || ends_with(e.name, ".adapter.up_bias")))
            e.value.zero();
}

template <typename T>
ParameterView partition_view(const ModelParameters<T>& model, ParameterScope scope) {
    ParameterView view;
    for (std::size_t i = 0; i < model.entries.size(); ++i) {
        const auto& e = model.entries[i];
        if (scope == ParameterScope::AdaptersOnly && e.group != ParamGroup::Adapter) continue;
        view.indices.push_back(static_cast<int>(i));
        view.count += static_cast<long>(e.value.size());
    }
    if (scope == ParameterScope::AdaptersOnly && view.indices.empty())
        throw ScopeError("partition_view: model has no adapter parameters");
    return view;
}

// Gradients aligned 1:1 with a ParameterView.
template <typename T>
struct GradientBundle {
    std::vector<int> indices;
    std::vector<Matrix<T>> grads;
    double loss = 0.0;
    long token_count = 0;
    std::string batch_id;
};

}  // namespace fsmt

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
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fsmt/common/matrix.hpp"
#include "fsmt/common/rng.hpp"

namespace fsmt {

// One parameter coordinate to probe: a matrix, a flat index into it, and the
// analytic gradient claimed for that coordinate.
template <typename T>
struct ProbeCoordinate {
    std::string name;
    Matrix<T>* param = nullptr;
    std::size_t flat = 0;
    T analytic = T(0);
};

template <typename T>
struct GradCheckReport {
    T max_rel_err = T(0);
    std::string worst_name;
    std::size_t worst_flat = 0;
    T worst_analytic = T(0);
    T worst_numeric = T(0);
    int checked = 0;
};

inline double relative_error(double a, double b) {
    const double denom = std::max(std::max(std::fabs(a), std::fabs(b)), 1e-8);
    return std::fabs(a - b) / denom;
}

// Central finite differences: perturb each probed coordinate by +/-eps,
// re-evaluate the loss, and compare (f+ - f-)/(2 eps) with the analytic
// value. loss_fn must be a pure function of the current parameter contents.
template <typename T, typename LossFn>
GradCheckReport<T> check_gradients(LossFn&& loss_fn, std::vector<ProbeCoordinate<T>>& coords,
                                   T eps) {
    GradCheckReport<T> report;
    for (auto& c : coords) {
        T& slot = c.param->at_flat(c.flat);
        const T saved = slot;
        slot = saved + eps;
        const T f_plus = loss_fn();
        slot = saved - eps;
        const T f_minus = loss_fn();
        slot = saved;
        const T numeric = (f_plus - f_minus) / (T(2) * eps);
        const T err = static_cast<T>(
            relative_error(static_cast<double>(c.analytic), static_cast<double>(numeric)));
        ++report.checked;
        if (err >= report.max_rel_err) {
            report.max_rel_err = err;
            report.worst_name = c.name;
            report.worst_flat = c.flat;
            report.worst_analytic = c.analytic;
            report.worst_numeric = numeric;
        }
    }
    return report;
}

// Picks k distinct (matrix, flat index) pairs, spread across the given
// matrices with probability proportional to their element counts.
template <typename T>
std::vector<std::pair<int, std::size_t>> pick_probe_indices(
    const std::vector<std::pair<std::string, Matrix<T>*>>& params, int k, Rng& rng) {
    std::size_t total = 0;
    for (const auto& [name, m] : params) total += m->size();
    std::vector<std::pair<int, std::size_t>> picked;
    std::set<std::pair<int, std::size_t>> seen;
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), total);
    while (picked.size() < want) {
        std::size_t g = static_cast<std::size_t>(rng.below(total));
        int mi = 0;
        while (g >= params[mi].second->size()) {
            g -= params[mi].second->size();
            ++mi;
        }
        if (seen.insert({mi, g}).second) picked.push_back({mi, g});
    }
    return picked;
}

}  // namespace fsmt

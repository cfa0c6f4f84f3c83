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
#ifndef FSMT_OPTIM_OPTIMIZERS_HPP_
#define FSMT_OPTIM_OPTIMIZERS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/common/matrix.hpp"
#include "fsmt/model/parameters.hpp"

namespace fsmt {

// Update rules operate on a flat list of array pointers so the same code
// serves full models, adapter-only views, and the analytic toy family.
template <typename T>
using ParamRefs = std::vector<Matrix<T>*>;

template <typename T>
ParamRefs<T> collect_params(ModelParameters<T>& model, const ParameterView& view) {
    ParamRefs<T> refs;
    refs.reserve(view.indices.size());
    for (int idx : view.indices)
        refs.push_back(&model.entries[static_cast<std::size_t>(idx)].value);
    return refs;
}

namespace detail {

template <typename T>
void require_aligned(const ParamRefs<T>& params, const std::vector<Matrix<T>>& grads,
                     const char* who) {
    if (params.size() != grads.size())
        throw ShapeError(std::string(who) + ": " + std::to_string(params.size()) +
                         " arrays vs " + std::to_string(grads.size()) + " gradients");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!params[i]->same_shape(grads[i]))
            throw ShapeError(std::string(who) + ": gradient shape mismatch at array " +
                             std::to_string(i));
}

}  // namespace detail

struct SgdConfig {
    double alpha = 0.01;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("sgd: alpha must be > 0");
    }
};

template <typename T>
void sgd_step(ParamRefs<T> params, const std::vector<Matrix<T>>& grads, double alpha) {
    detail::require_aligned(params, grads, "sgd_step");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix<T>& p = *params[i];
        const Matrix<T>& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k)
            p.at_flat(k) = static_cast<T>(p.at_flat(k) - alpha * g.at_flat(k));
    }
}

template <typename T>
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    long step = 0;
    std::vector<Matrix<T>> m;
    std::vector<Matrix<T>> v;
};

template <typename T>
AdamState<T> make_adam_state(const ParamRefs<T>& params, double lr) {
    if (!(lr > 0.0)) throw ConfigError("adam: lr must be > 0");
    AdamState<T> state;
    state.lr = lr;
    for (const Matrix<T>* p : params) {
        state.m.emplace_back(p->rows(), p->cols());
        state.v.emplace_back(p->rows(), p->cols());
    }
    return state;
}

// Bias-corrected Adam. Moments are carried in double regardless of the
// parameter precision; set state.lr before the call when following a schedule.
template <typename T>
void adam_step(ParamRefs<T> params, const std::vector<Matrix<T>>& grads,
               AdamState<T>& state) {
    detail::require_aligned(params, grads, "adam_step");
    if (state.m.size() != params.size())
        throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) +
                         " moment arrays for " + std::to_string(params.size()) +
                         " parameters");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix<T>& p = *params[i];
        if (!state.m[i].same_shape(p))
            throw ShapeError("adam_step: moment shape mismatch at array " +
                             std::to_string(i));
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double g = static_cast<double>(grads[i].at_flat(k));
            double m = static_cast<double>(state.m[i].at_flat(k));
            double v = static_cast<double>(state.v[i].at_flat(k));
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g * g;
            state.m[i].at_flat(k) = static_cast<T>(m);
            state.v[i].at_flat(k) = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.at_flat(k) =
                static_cast<T>(p.at_flat(k) - state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

struct LrSchedule {
    enum class Kind { Constant, InverseSqrtWarmup };

    Kind kind = Kind::Constant;
    double rate = 1e-3;      // Constant rate, or the warmup peak
    long warmup_steps = 1;   // InverseSqrtWarmup only

    static LrSchedule constant(double rate) {
        if (!(rate > 0.0)) throw ConfigError("lr schedule: rate must be > 0");
        LrSchedule s;
        s.kind = Kind::Constant;
        s.rate = rate;
        return s;
    }

    static LrSchedule inverse_sqrt_warmup(double peak_rate, long warmup_steps) {
        if (!(peak_rate > 0.0)) throw ConfigError("lr schedule: peak rate must be > 0");
        if (warmup_steps < 1) throw ConfigError("lr schedule: warmup_steps must be >= 1");
        LrSchedule s;
        s.kind = Kind::InverseSqrtWarmup;
        s.rate = peak_rate;
        s.warmup_steps = warmup_steps;
        return s;
    }
};

// Linear ramp to the peak over warmup_steps, then inverse-square-root decay.
// Both branches meet at the peak when step == warmup_steps.
inline double lr_at(const LrSchedule& schedule, long step) {
    if (step < 1) throw ConfigError("lr_at: step must be >= 1");
    if (schedule.kind == LrSchedule::Kind::Constant) return schedule.rate;
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(schedule.warmup_steps);
    if (step <= schedule.warmup_steps) return schedule.rate * s / w;
    return schedule.rate * std::sqrt(w / s);
}

}  // namespace fsmt

#endif  // FSMT_OPTIM_OPTIMIZERS_HPP_

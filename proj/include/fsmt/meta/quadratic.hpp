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
#ifndef FSMT_META_QUADRATIC_HPP_
#define FSMT_META_QUADRATIC_HPP_

#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/common/matrix.hpp"

namespace fsmt {

// Analytic task family: per task, loss(theta) = 0.5 * ||theta - c||^2 with
// gradient theta - c. Every meta-learning quantity has a closed form here,
// which makes this the reference path for validating the meta-update rules:
//   one inner step:        theta' - c = (1 - alpha) (theta - c)
//   first-order meta-grad: grad at theta' = (1 - alpha)   (theta - c)
//   exact meta-grad:       (d theta'/d theta)^T grad = (1 - alpha)^2 (theta - c)
//   one-step difference:   theta - theta' = alpha (theta - c)
// All three rules share the fixed point theta = mean(c).

enum class QuadraticAlgo { FirstOrder, Exact, Difference };

inline double quadratic_loss(const Matrix<double>& theta, const Matrix<double>& c) {
    if (!theta.same_shape(c)) throw ShapeError("quadratic_loss: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = theta.at_flat(i) - c.at_flat(i);
        sum += 0.5 * d * d;
    }
    return sum;
}

inline Matrix<double> quadratic_inner_adapt(const Matrix<double>& theta,
                                            const Matrix<double>& c, double alpha,
                                            int steps) {
    if (!theta.same_shape(c)) throw ShapeError("quadratic_inner_adapt: shape mismatch");
    if (steps < 1) throw ConfigError("quadratic_inner_adapt: steps must be >= 1");
    Matrix<double> out = theta;
    for (int k = 0; k < steps; ++k)
        for (std::size_t i = 0; i < out.size(); ++i)
            out.at_flat(i) -= alpha * (out.at_flat(i) - c.at_flat(i));
    return out;
}

// Meta-gradient for a single inner step.
inline Matrix<double> quadratic_meta_gradient(const Matrix<double>& theta,
                                              const Matrix<double>& c, double alpha,
                                              QuadraticAlgo algo) {
    if (!theta.same_shape(c)) throw ShapeError("quadratic_meta_gradient: shape mismatch");
    double factor = 0.0;
    switch (algo) {
        case QuadraticAlgo::FirstOrder: factor = 1.0 - alpha; break;
        case QuadraticAlgo::Exact: factor = (1.0 - alpha) * (1.0 - alpha); break;
        case QuadraticAlgo::Difference: factor = alpha; break;
    }
    Matrix<double> g(theta.rows(), theta.cols());
    for (std::size_t i = 0; i < g.size(); ++i)
        g.at_flat(i) = factor * (theta.at_flat(i) - c.at_flat(i));
    return g;
}

struct QuadraticMetaConfig {
    double alpha = 0.1;
    double meta_lr = 0.5;
    int steps = 100;
    QuadraticAlgo algorithm = QuadraticAlgo::FirstOrder;
};

// Full-batch gradient descent on the averaged meta-gradient; converges to
// mean(centers) whenever meta_lr * factor is in (0, 2).
inline Matrix<double> quadratic_meta_train(const Matrix<double>& theta0,
                                           const std::vector<Matrix<double>>& centers,
                                           const QuadraticMetaConfig& cfg) {
    if (centers.empty()) throw ConfigError("quadratic_meta_train: no tasks");
    if (cfg.steps < 0) throw ConfigError("quadratic_meta_train: negative steps");
    Matrix<double> theta = theta0;
    const double inv_n = 1.0 / static_cast<double>(centers.size());
    for (int k = 0; k < cfg.steps; ++k) {
        Matrix<double> mean_grad(theta.rows(), theta.cols());
        for (const auto& c : centers) {
            auto g = quadratic_meta_gradient(theta, c, cfg.alpha, cfg.algorithm);
            for (std::size_t i = 0; i < g.size(); ++i)
                mean_grad.at_flat(i) += inv_n * g.at_flat(i);
        }
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta.at_flat(i) -= cfg.meta_lr * mean_grad.at_flat(i);
    }
    return theta;
}

}  // namespace fsmt

#endif  // FSMT_META_QUADRATIC_HPP_

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
#ifndef FSMT_META_META_HPP_
#define FSMT_META_META_HPP_

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/model/transformer.hpp"
#include "fsmt/optim/optimizers.hpp"
#include "fsmt/tasks/task.hpp"

namespace fsmt {

enum class MetaAlgorithm { FoMAML, Reptile };

struct MetaTrainConfig {
    double inner_alpha = 0.01;
    int inner_steps = 1;
    double meta_lr = 1e-5;
    int meta_batch_size = 1;
    ParameterScope scope = ParameterScope::AdaptersOnly;
    MetaAlgorithm algorithm = MetaAlgorithm::FoMAML;
    int epochs = 1;
    int early_stop_patience = 0;  // 0 disables early stopping
    bool record_wall_time = true;

    void validate() const {
        if (!(inner_alpha > 0.0)) throw ConfigError("meta: inner_alpha must be > 0");
        if (inner_steps < 1) throw ConfigError("meta: inner_steps must be >= 1");
        if (!(meta_lr > 0.0)) throw ConfigError("meta: meta_lr must be > 0");
        if (meta_batch_size < 1) throw ConfigError("meta: meta_batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("meta: epochs must be >= 0");
        if (early_stop_patience < 0) throw ConfigError("meta: negative patience");
    }
};

struct MetaRecord {
    long step = 0;
    std::string task_id;
    double support_loss_pre = 0.0;
    double support_loss_post = 0.0;
    double query_loss = 0.0;
    double lr = 0.0;
    long elapsed_ms = 0;
};

struct MetaTrainLog {
    std::vector<MetaRecord> records;
    std::vector<double> validation_metrics;  // one per completed epoch
    double best_validation_metric = std::numeric_limits<double>::quiet_NaN();
    int best_epoch = -1;
};

inline std::string meta_log_to_csv_string(const MetaTrainLog& log) {
    std::string out = "step,task_id,support_loss_pre,support_loss_post,query_loss,lr,elapsed_ms\n";
    char buf[256];
    for (const auto& r : log.records) {
        std::snprintf(buf, sizeof(buf), "%ld,%s,%.9g,%.9g,%.9g,%.9g,%ld\n", r.step,
                      r.task_id.c_str(), r.support_loss_pre, r.support_loss_post,
                      r.query_loss, r.lr, r.elapsed_ms);
        out += buf;
    }
    return out;
}

inline void save_meta_log(const MetaTrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write log: " + path);
    out << meta_log_to_csv_string(log);
}

// Gradient-descent fine-tuning on the support set (Train-mode forward),
// restricted to `scope`. Returns an adapted copy; the input stays untouched.
template <typename T>
ModelParameters<T> inner_adapt(const ModelParameters<T>& params,
                               const std::vector<SentencePair>& support, double alpha,
                               int steps, ParameterScope scope, Rng* rng) {
    if (steps < 1) throw ConfigError("inner_adapt: steps must be >= 1");
    if (!(alpha >= 0.0)) throw ConfigError("inner_adapt: alpha must be >= 0");
    ModelParameters<T> adapted = params;
    const ParameterView view = partition_view(adapted, scope);
    for (int k = 0; k < steps; ++k) {
        auto bundle = model_grad(adapted, support, Mode::Train, rng, view);
        sgd_step(collect_params(adapted, view), bundle.grads, alpha);
    }
    return adapted;
}

// Deterministic post-adaptation objective (no dropout).
template <typename T>
double query_loss(const ModelParameters<T>& params,
                  const std::vector<SentencePair>& query) {
    return static_cast<double>(forward_loss(params, query, Mode::Eval, nullptr));
}

// First-order meta-gradient for one task: adapt on the support set, then take
// the query-set gradient at the adapted parameters. The caller applies it at
// the unadapted parameters.
template <typename T>
GradientBundle<T> fomaml_meta_gradient(const ModelParameters<T>& model, const Task& task,
                                       const MetaTrainConfig& cfg, Rng& inner_rng) {
    auto adapted = inner_adapt(model, task.support, cfg.inner_alpha, cfg.inner_steps,
                               cfg.scope, &inner_rng);
    const ParameterView view = partition_view(adapted, cfg.scope);
    return model_grad(adapted, task.query, Mode::Eval, nullptr, view, task.task_id);
}

// One meta-update over a batch of tasks. First-order gradients are summed
// across the batch; difference-style (Reptile) meta-gradients are averaged.
// Either way the meta-optimizer applies exactly one Adam step.
template <typename T>
void meta_step(ModelParameters<T>& model, const std::vector<const Task*>& batch,
               const MetaTrainConfig& cfg, AdamState<T>& meta_state, Rng& rng,
               long step_index, MetaTrainLog& log) {
    if (batch.empty()) throw EmptyBatchError();
    const ParameterView view = partition_view(model, cfg.scope);
    std::vector<Matrix<T>> sum;
    for (int idx : view.indices) {
        const auto& p = model.entries[static_cast<std::size_t>(idx)].value;
        sum.emplace_back(p.rows(), p.cols());
    }

    for (const Task* task : batch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng inner_rng = rng.split(task->task_id);

        MetaRecord rec;
        rec.step = step_index;
        rec.task_id = task->task_id;
        rec.lr = meta_state.lr;
        rec.support_loss_pre =
            static_cast<double>(forward_loss(model, task->support, Mode::Eval, nullptr));

        if (cfg.algorithm == MetaAlgorithm::FoMAML) {
            auto adapted = inner_adapt(model, task->support, cfg.inner_alpha,
                                       cfg.inner_steps, cfg.scope, &inner_rng);
            rec.support_loss_post = static_cast<double>(
                forward_loss(adapted, task->support, Mode::Eval, nullptr));
            auto bundle =
                model_grad(adapted, task->query, Mode::Eval, nullptr, view, task->task_id);
            rec.query_loss = bundle.loss;
            for (std::size_t i = 0; i < sum.size(); ++i)
                for (std::size_t k = 0; k < sum[i].size(); ++k)
                    sum[i].at_flat(k) += bundle.grads[i].at_flat(k);
        } else {
            auto adapted = inner_adapt(model, task->support, cfg.inner_alpha,
                                       cfg.inner_steps, cfg.scope, &inner_rng);
            rec.support_loss_post = static_cast<double>(
                forward_loss(adapted, task->support, Mode::Eval, nullptr));
            rec.query_loss = query_loss(adapted, task->query);
            const T inv_n = static_cast<T>(1.0 / static_cast<double>(batch.size()));
            for (std::size_t i = 0; i < sum.size(); ++i) {
                const auto& before =
                    model.entries[static_cast<std::size_t>(view.indices[i])].value;
                const auto& after =
                    adapted.entries[static_cast<std::size_t>(view.indices[i])].value;
                for (std::size_t k = 0; k < sum[i].size(); ++k)
                    sum[i].at_flat(k) +=
                        inv_n * (before.at_flat(k) - after.at_flat(k));
            }
        }

        if (cfg.record_wall_time) {
            const auto t1 = std::chrono::steady_clock::now();
            rec.elapsed_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        }
        log.records.push_back(std::move(rec));
    }

    adam_step(collect_params(model, view), sum, meta_state);
}

template <typename T>
struct MetaTrainResult {
    ModelParameters<T> params;
    MetaTrainLog log;
};

// Epochs over shuffled meta-train tasks; after each epoch the mean
// post-adaptation query loss on meta-validation selects the checkpoint to
// keep. Fully deterministic given (seed, config, dataset).
template <typename T>
MetaTrainResult<T> meta_train(const ModelParameters<T>& initial, const MetaDataset& data,
                              const MetaTrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (data.meta_train.empty()) throw ConfigError("meta_train: no meta-training tasks");

    MetaTrainResult<T> result{initial, {}};
    ModelParameters<T>& work = result.params;
    const ParameterView view = partition_view(work, cfg.scope);
    auto meta_state = make_adam_state(collect_params(work, view), cfg.meta_lr);

    ModelParameters<T> best = work;
    int epochs_since_best = 0;
    long step_index = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order(data.meta_train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng shuffle_rng(derive_seed(seed, "meta-shuffle:" + std::to_string(epoch)));
        shuffle_rng.shuffle(order);

        Rng epoch_rng(derive_seed(seed, "meta-inner:" + std::to_string(epoch)));
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            std::vector<const Task*> batch;
            for (int b = 0; b < cfg.meta_batch_size && cursor < order.size(); ++b)
                batch.push_back(
                    &data.meta_train[static_cast<std::size_t>(order[cursor++])]);
            step_index += 1;
            meta_step(work, batch, cfg, meta_state, epoch_rng, step_index, result.log);
        }
        work.kind = "meta-trained";
        work.meta_step = initial.meta_step + step_index;

        if (!data.meta_validation.empty()) {
            double metric = 0.0;
            for (const auto& task : data.meta_validation) {
                Rng val_rng(derive_seed(
                    seed, "meta-val:" + std::to_string(epoch) + ":" + task.task_id));
                auto adapted = inner_adapt(work, task.support, cfg.inner_alpha,
                                           cfg.inner_steps, cfg.scope, &val_rng);
                metric += query_loss(adapted, task.query);
            }
            metric /= static_cast<double>(data.meta_validation.size());
            result.log.validation_metrics.push_back(metric);
            if (result.log.best_epoch < 0 || metric < result.log.best_validation_metric) {
                result.log.best_validation_metric = metric;
                result.log.best_epoch = epoch;
                best = work;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if (cfg.early_stop_patience > 0 &&
                    epochs_since_best >= cfg.early_stop_patience)
                    break;
            }
        }
    }

    if (result.log.best_epoch >= 0) result.params = best;
    return result;
}

}  // namespace fsmt

#endif  // FSMT_META_META_HPP_

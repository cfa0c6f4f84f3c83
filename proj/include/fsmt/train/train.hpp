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
#ifndef FSMT_TRAIN_TRAIN_HPP_
#define FSMT_TRAIN_TRAIN_HPP_

#include <string>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/model/transformer.hpp"
#include "fsmt/optim/optimizers.hpp"

namespace fsmt {

enum class OptimizerKind { Sgd, Adam };

struct TrainParams {
    OptimizerKind optimizer = OptimizerKind::Adam;
    LrSchedule schedule = LrSchedule::constant(1e-3);
    int epochs = 1;
    int batch_sentences = 8;
    ParameterScope scope = ParameterScope::AllParameters;
    bool shuffle = true;

    void validate() const {
        if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
        if (batch_sentences < 1) throw ConfigError("train: batch_sentences must be >= 1");
    }
};

struct TrainStepRecord {
    long step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<TrainStepRecord> steps;
    std::vector<double> epoch_mean_loss;
};

// Standard mini-batch training on sentence pairs: shuffled epochs, scheduled
// learning rate, Train-mode forward. Deterministic given (model, pairs, seed).
template <typename T>
TrainLog train_supervised(ModelParameters<T>& model,
                          const std::vector<SentencePair>& pairs,
                          const TrainParams& params, std::uint64_t seed) {
    params.validate();
    if (pairs.empty()) throw EmptyBatchError();

    const ParameterView view = partition_view(model, params.scope);
    auto refs = collect_params(model, view);
    AdamState<T> adam;
    if (params.optimizer == OptimizerKind::Adam)
        adam = make_adam_state(refs, lr_at(params.schedule, 1));

    TrainLog log;
    // Step numbering continues from the model's counter so a resumed run
    // keeps its place in the learning-rate schedule.
    long global_step = model.step;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        std::vector<int> order(pairs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        if (params.shuffle) {
            Rng shuffle_rng(derive_seed(seed, "train-shuffle:" + std::to_string(epoch)));
            shuffle_rng.shuffle(order);
        }
        Rng dropout_rng(derive_seed(seed, "train-dropout:" + std::to_string(epoch)));

        double epoch_loss = 0.0;
        long epoch_steps = 0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            std::vector<SentencePair> batch;
            for (int b = 0; b < params.batch_sentences && cursor < order.size(); ++b)
                batch.push_back(pairs[static_cast<std::size_t>(order[cursor++])]);

            global_step += 1;
            const double lr = lr_at(params.schedule, global_step);
            auto bundle = model_grad(model, batch, Mode::Train, &dropout_rng, view,
                                     "step " + std::to_string(global_step));
            if (params.optimizer == OptimizerKind::Adam) {
                adam.lr = lr;
                adam_step(refs, bundle.grads, adam);
            } else {
                sgd_step(refs, bundle.grads, lr);
            }
            log.steps.push_back({global_step, bundle.loss, lr});
            epoch_loss += bundle.loss;
            epoch_steps += 1;
        }
        log.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(epoch_steps));
    }
    model.step = global_step;
    return log;
}

inline std::string train_log_to_csv_string(const TrainLog& log) {
    std::string out = "step,loss,lr\n";
    char buf[128];
    for (const auto& r : log.steps) {
        std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g\n", r.step, r.loss, r.lr);
        out += buf;
    }
    return out;
}

}  // namespace fsmt

#endif  // FSMT_TRAIN_TRAIN_HPP_

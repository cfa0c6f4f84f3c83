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
#ifndef FSMT_BASELINES_BASELINES_HPP_
#define FSMT_BASELINES_BASELINES_HPP_

#include <string>
#include <vector>

#include "fsmt/eval/score.hpp"
#include "fsmt/meta/meta.hpp"
#include "fsmt/tasks/task.hpp"
#include "fsmt/train/train.hpp"

namespace fsmt {

// The four test-time protocols compared against each other:
//   A  NoFineTune              decode the query set with the checkpoint as-is
//   B  FineTuneOnTask          fine-tune the pretrained model on the support set
//   C  FineTuneOnMetaTrainPool decode with a model fine-tuned on every
//                              meta-training support set (no per-task tuning)
//   D  MetaMT                  fine-tune the meta-learned model on the support set
enum class Strategy { NoFineTune, FineTuneOnTask, FineTuneOnMetaTrainPool, MetaMT };

const char* strategy_slug(Strategy s);
char strategy_letter(Strategy s);

struct FineTuneParams {
    double alpha = 0.01;
    int epochs = 20;  // full-batch gradient steps over the support set
    ParameterScope scope = ParameterScope::AdaptersOnly;
};

struct AdaptationResult {
    Strategy strategy = Strategy::NoFineTune;
    std::string task_id;
    std::string domain_id;
    double zero_shot_bleu = 0.0;
    double adapted_bleu = 0.0;
    long tokens_seen = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
};

struct AdaptationReport {
    std::vector<AdaptationResult> rows;
};

std::string report_to_csv_string(const AdaptationReport& report);
std::string report_to_table_string(const AdaptationReport& report);
void save_report_csv(const AdaptationReport& report, const std::string& path);

long pool_source_words(const std::vector<Task>& tasks);

namespace detail {

inline void require_kind(Strategy strategy, const std::string& kind) {
    const bool is_meta = kind == "meta-trained";
    if (strategy == Strategy::MetaMT && !is_meta)
        throw ConfigError("strategy D needs a meta-trained checkpoint, got '" + kind +
                          "'");
    if (strategy != Strategy::MetaMT && is_meta)
        throw ConfigError(std::string("strategy ") + strategy_letter(strategy) +
                          " must not run from a meta-trained checkpoint");
}

}  // namespace detail

// Runs one strategy on one task. The checkpoint is never mutated; B and D
// fine-tune a copy on the support set with plain gradient descent (identical
// budgets), then beam-decode the query set. The zero-shot score is the
// pre-fine-tuning decode of the same checkpoint.
template <typename T>
AdaptationResult adapt_and_eval(Strategy strategy, const ModelParameters<T>& checkpoint,
                                const Task& task, const FineTuneParams& ft,
                                const EvalParams& ev, const Vocabulary& vocab,
                                std::uint64_t seed, long pool_tokens = 0) {
    detail::require_kind(strategy, checkpoint.kind);
    if (ft.epochs < 0) throw ConfigError("fine-tune epochs must be >= 0");

    AdaptationResult result;
    result.strategy = strategy;
    result.task_id = task.task_id;
    result.domain_id = task.domain_id;
    result.seed = seed;

    try {
        result.zero_shot_bleu = model_bleu(checkpoint, task.query, vocab, ev).score;
        const bool tunes = (strategy == Strategy::FineTuneOnTask ||
                            strategy == Strategy::MetaMT) &&
                           ft.epochs > 0;
        if (tunes) {
            Rng rng(derive_seed(seed, "finetune:" + task.task_id));
            auto adapted = inner_adapt(checkpoint, task.support, ft.alpha, ft.epochs,
                                       ft.scope, &rng);
            result.adapted_bleu = model_bleu(adapted, task.query, vocab, ev).score;
        } else {
            result.adapted_bleu = result.zero_shot_bleu;
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " [task " + task.task_id + "]");
    }

    switch (strategy) {
        case Strategy::NoFineTune: result.tokens_seen = 0; break;
        case Strategy::FineTuneOnMetaTrainPool: result.tokens_seen = pool_tokens; break;
        default: result.tokens_seen = task.support_words(); break;
    }
    return result;
}

// Standard fine-tuning over the concatenation of every meta-training support
// set; the result serves strategy C for all tasks.
template <typename T>
ModelParameters<T> finetune_on_pool(const ModelParameters<T>& pretrained,
                                    const std::vector<Task>& tasks,
                                    const TrainParams& params, std::uint64_t seed,
                                    TrainLog* log_out = nullptr) {
    if (tasks.empty()) throw ConfigError("finetune_on_pool: no tasks");
    std::vector<SentencePair> pool;
    for (const auto& task : tasks)
        pool.insert(pool.end(), task.support.begin(), task.support.end());
    ModelParameters<T> model = pretrained;
    TrainLog log = train_supervised(model, pool, params, seed);
    model.kind = "pool-finetuned";
    if (log_out != nullptr) *log_out = std::move(log);
    return model;
}

template <typename T>
struct StrategyInputs {
    const ModelParameters<T>* pretrained = nullptr;    // strategies A and B
    const ModelParameters<T>* pool_tuned = nullptr;    // strategy C
    const ModelParameters<T>* meta_trained = nullptr;  // strategy D
    long pool_tokens = 0;
};

// Full comparison grid: every replicate x task x strategy. Replicates supply
// independently sampled meta-test sets; each gets its own derived seed.
template <typename T>
AdaptationReport run_comparison(const StrategyInputs<T>& inputs,
                                const std::vector<std::vector<Task>>& test_replicates,
                                const std::vector<Strategy>& strategies,
                                const FineTuneParams& ft, const EvalParams& ev,
                                const Vocabulary& vocab, std::uint64_t seed) {
    if (test_replicates.empty()) throw ConfigError("run_comparison: no replicates");
    if (strategies.empty()) throw ConfigError("run_comparison: no strategies");

    auto checkpoint_for = [&](Strategy s) -> const ModelParameters<T>* {
        switch (s) {
            case Strategy::NoFineTune:
            case Strategy::FineTuneOnTask: return inputs.pretrained;
            case Strategy::FineTuneOnMetaTrainPool: return inputs.pool_tuned;
            case Strategy::MetaMT: return inputs.meta_trained;
        }
        return nullptr;
    };

    AdaptationReport report;
    for (std::size_t r = 0; r < test_replicates.size(); ++r) {
        const std::uint64_t replicate_seed =
            derive_seed(seed, "replicate:" + std::to_string(r));
        for (const auto& task : test_replicates[r]) {
            for (Strategy s : strategies) {
                const ModelParameters<T>* checkpoint = checkpoint_for(s);
                if (checkpoint == nullptr)
                    throw ConfigError(std::string("run_comparison: no checkpoint for "
                                                  "strategy ") +
                                      strategy_letter(s));
                auto result = adapt_and_eval(s, *checkpoint, task, ft, ev, vocab,
                                             replicate_seed, inputs.pool_tokens);
                result.replicate = static_cast<int>(r);
                report.rows.push_back(std::move(result));
            }
        }
    }
    return report;
}

}  // namespace fsmt

#endif  // FSMT_BASELINES_BASELINES_HPP_

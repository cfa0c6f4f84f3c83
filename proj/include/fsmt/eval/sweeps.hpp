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
#ifndef FSMT_EVAL_SWEEPS_HPP_
#define FSMT_EVAL_SWEEPS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fsmt/baselines/baselines.hpp"
#include "fsmt/common/error.hpp"
#include "fsmt/common/rng.hpp"
#include "fsmt/eval/bleu.hpp"
#include "fsmt/eval/score.hpp"
#include "fsmt/meta/meta.hpp"
#include "fsmt/model/parameters.hpp"
#include "fsmt/tasks/task.hpp"
#include "fsmt/text/corpus.hpp"
#include "fsmt/text/vocabulary.hpp"

namespace fsmt {

enum class SweepAxis { SupportSize, QuerySize };

const char* sweep_axis_name(SweepAxis axis);

// One replicate's score at one sweep point: mean adapted BLEU over the
// replicate's meta-test tasks for one strategy.
struct SweepRow {
    long size = 0;
    std::string strategy;
    std::uint64_t seed = 0;
    double bleu = 0.0;
};

// Aggregate of all replicates at one (size, strategy) point.
struct SweepPointSummary {
    long size = 0;
    std::string strategy;
    double mean_bleu = 0.0;
    double std_bleu = 0.0;
    long replicates = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::SupportSize;
    std::vector<SweepRow> rows;
    // Ordered by size ascending, then strategy; each backed by >= 1 row.
    std::vector<SweepPointSummary> points;
};

std::vector<SweepPointSummary> summarize_sweep_rows(const std::vector<SweepRow>& rows);

std::string sweep_to_csv_string(const SweepResult& result);
void save_sweep_csv(const std::string& path, const SweepResult& result);

// Self-contained line plot (size on x, mean BLEU on y, one polyline per
// strategy, error bars at +/- one standard deviation).
std::string sweep_to_svg_string(const SweepResult& result, const std::string& title);

// Everything one sweep needs besides the swept axis itself. The support
// sweep reads `sizes` as support budgets and holds the query budget fixed;
// the query sweep reads `sizes` as query budgets and holds the support
// budget and task count fixed.
template <typename T>
struct SweepConfig {
    const std::vector<ParallelCorpus>* domains = nullptr;
    const Vocabulary* vocab = nullptr;
    const ModelParameters<T>* pretrained = nullptr;
    MetaTrainConfig meta;
    FineTuneParams finetune;
    EvalParams eval;
    std::vector<std::string> held_out_domains;
    int validation_tasks_per_domain = 1;
    int test_tasks_per_domain = 1;
    long support_budget_words = 250;
    long query_budget_words = 100;
    // Support sweeps only: total support words held constant across points.
    long total_support_words = 0;
    // Query sweeps only: per-domain meta-train task count.
    int train_tasks_per_domain = 4;
    std::vector<long> sizes;
    std::vector<std::uint64_t> seeds = {1, 2, 3};

    void validate() const {
        if (domains == nullptr || domains->empty())
            throw ConfigError("sweep: at least one domain corpus is required");
        if (vocab == nullptr) throw ConfigError("sweep: vocabulary is required");
        if (pretrained == nullptr) throw ConfigError("sweep: pretrained model is required");
        if (seeds.empty()) throw ConfigError("sweep: at least one replicate seed is required");
        if (sizes.empty()) throw ConfigError("sweep: at least one size is required");
        if (validation_tasks_per_domain < 0)
            throw ConfigError("sweep: validation_tasks_per_domain must be >= 0");
        if (test_tasks_per_domain < 1)
            throw ConfigError("sweep: test_tasks_per_domain must be >= 1");
        for (std::size_t i = 1; i < sizes.size(); ++i)
            if (sizes[i] <= sizes[i - 1])
                throw ConfigError("sweep: sizes must be strictly increasing");
        meta.validate();
        eval.validate();
    }
};

namespace detail {

template <typename T>
int count_train_domains(const SweepConfig<T>& cfg) {
    int n = 0;
    for (const auto& d : *cfg.domains) {
        bool held_out = false;
        for (const auto& name : cfg.held_out_domains)
            if (name == d.domain_id) held_out = true;
        if (!held_out) ++n;
    }
    return n;
}

}  // namespace detail

// Runs one sweep point: per replicate seed, builds a fresh episode dataset,
// meta-trains from the pretrained model, and scores fine-tuning vs the
// meta-trained initialization on the replicate's meta-test tasks. Returns one
// row per (strategy, seed).
template <typename T>
std::vector<SweepRow> sweep_point(const SweepConfig<T>& cfg, SweepAxis axis, long size,
                                  int train_tasks_per_domain, long support_words,
                                  long query_words) {
    std::vector<SweepRow> rows;
    try {
        SplitSpec split;
        split.train_tasks_per_domain = train_tasks_per_domain;
        split.validation_tasks_per_domain = cfg.validation_tasks_per_domain;
        split.test_tasks_per_domain = cfg.test_tasks_per_domain;
        split.held_out_domains = cfg.held_out_domains;
        const TaskBudgets budgets{support_words, query_words};

        for (const std::uint64_t root : cfg.seeds) {
            const std::uint64_t point_seed = derive_seed(
                root, std::string(sweep_axis_name(axis)) + ":" + std::to_string(size));
            const MetaDataset data = build_meta_dataset(
                *cfg.domains, split, budgets, derive_seed(point_seed, "tasks"));
            const auto meta = meta_train(*cfg.pretrained, data, cfg.meta,
                                         derive_seed(point_seed, "meta"));
            const std::uint64_t adapt_seed = derive_seed(point_seed, "adapt");

            double sum_b = 0.0, sum_d = 0.0;
            for (const Task& task : data.meta_test) {
                sum_b += adapt_and_eval(Strategy::FineTuneOnTask, *cfg.pretrained, task,
                                        cfg.finetune, cfg.eval, *cfg.vocab, adapt_seed)
                             .adapted_bleu;
                sum_d += adapt_and_eval(Strategy::MetaMT, meta.params, task, cfg.finetune,
                                        cfg.eval, *cfg.vocab, adapt_seed)
                             .adapted_bleu;
            }
            const double n = static_cast<double>(data.meta_test.size());
            rows.push_back({size, strategy_slug(Strategy::FineTuneOnTask), root, sum_b / n});
            rows.push_back({size, strategy_slug(Strategy::MetaMT), root, sum_d / n});
        }
    } catch (const Error& e) {
        throw Error(e.code(), std::string("sweep point ") + sweep_axis_name(axis) + "=" +
                                  std::to_string(size) + ": " + e.what());
    }
    return rows;
}

// Varies the per-task support budget while holding the total amount of
// support data constant: larger budgets mean proportionally fewer tasks.
template <typename T>
SweepResult sweep_support(const SweepConfig<T>& cfg) {
    cfg.validate();
    const auto plan = sweep_plan(cfg.total_support_words, cfg.sizes);
    const int n_domains = detail::count_train_domains(cfg);
    if (n_domains < 1) throw ConfigError("sweep: every domain is held out");

    SweepResult result;
    result.axis = SweepAxis::SupportSize;
    for (const auto& [size, n_tasks] : plan) {
        if (n_tasks % n_domains != 0)
            throw PlanError("sweep: task count " + std::to_string(n_tasks) + " at size " +
                            std::to_string(size) + " does not divide across " +
                            std::to_string(n_domains) + " training domains");
        const int per_domain = static_cast<int>(n_tasks / n_domains);
        auto rows = sweep_point(cfg, SweepAxis::SupportSize, size, per_domain, size,
                                cfg.query_budget_words);
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    result.points = summarize_sweep_rows(result.rows);
    return result;
}

// Varies the per-task query budget with support budget and task count fixed.
template <typename T>
SweepResult sweep_query(const SweepConfig<T>& cfg) {
    cfg.validate();
    if (cfg.train_tasks_per_domain < 1)
        throw ConfigError("sweep: train_tasks_per_domain must be >= 1");

    SweepResult result;
    result.axis = SweepAxis::QuerySize;
    for (const long size : cfg.sizes) {
        auto rows = sweep_point(cfg, SweepAxis::QuerySize, size, cfg.train_tasks_per_domain,
                                cfg.support_budget_words, size);
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    result.points = summarize_sweep_rows(result.rows);
    return result;
}

// Scores for one meta-training scope within the architecture probe.
struct ScopeReport {
    std::string scope;
    // Zero-shot BLEU of the meta-trained model on general-domain data.
    double general_zero_shot_bleu = 0.0;
    // Mean zero-shot / post-fine-tuning BLEU over the meta-test tasks.
    double test_zero_shot_bleu = 0.0;
    double test_adapted_bleu = 0.0;
};

struct ArchitectureProbeReport {
    ScopeReport adapters;
    ScopeReport all_parameters;
    double pretrained_general_bleu = 0.0;
    double ablated_general_bleu = 0.0;
    // True when zeroing the adapter up-projections of the adapter-scope
    // meta-trained model reproduces the pretrained model's decodes exactly.
    bool ablation_recovered = false;
};

namespace detail {

template <typename T>
ScopeReport probe_scope(const ModelParameters<T>& meta_model, const std::string& name,
                        const MetaDataset& data,
                        const std::vector<SentencePair>& general_validation,
                        const FineTuneParams& ft, const EvalParams& ev,
                        const Vocabulary& vocab, std::uint64_t adapt_seed) {
    ScopeReport report;
    report.scope = name;
    report.general_zero_shot_bleu = model_bleu(meta_model, general_validation, vocab, ev).score;
    double sum_zero = 0.0, sum_adapted = 0.0;
    for (const Task& task : data.meta_test) {
        const auto r =
            adapt_and_eval(Strategy::MetaMT, meta_model, task, ft, ev, vocab, adapt_seed);
        sum_zero += r.zero_shot_bleu;
        sum_adapted += r.adapted_bleu;
    }
    const double n = static_cast<double>(data.meta_test.size());
    report.test_zero_shot_bleu = sum_zero / n;
    report.test_adapted_bleu = sum_adapted / n;
    return report;
}

}  // namespace detail

// Meta-trains the pretrained model twice, once updating only the adapters and
// once updating every parameter, and reports zero-shot plus post-fine-tuning
// scores for both, together with the adapter-ablation recovery check.
template <typename T>
ArchitectureProbeReport architecture_probe(const ModelParameters<T>& pretrained,
                                           const MetaDataset& data,
                                           const MetaTrainConfig& meta,
                                           const FineTuneParams& ft, const EvalParams& ev,
                                           const Vocabulary& vocab,
                                           const std::vector<SentencePair>& general_validation,
                                           std::uint64_t seed) {
    if (data.meta_test.empty())
        throw ConfigError("architecture_probe: meta_test split is empty");
    if (general_validation.empty())
        throw ConfigError("architecture_probe: general validation set is empty");

    MetaTrainConfig adapters_cfg = meta;
    adapters_cfg.scope = ParameterScope::AdaptersOnly;
    MetaTrainConfig full_cfg = meta;
    full_cfg.scope = ParameterScope::AllParameters;

    const auto adapters_run =
        meta_train(pretrained, data, adapters_cfg, derive_seed(seed, "probe:adapters"));
    const auto full_run = meta_train(pretrained, data, full_cfg, derive_seed(seed, "probe:full"));

    ArchitectureProbeReport report;
    report.adapters =
        detail::probe_scope(adapters_run.params, "adapters_only", data, general_validation,
                            ft, ev, vocab, derive_seed(seed, "probe:adapt:adapters"));
    report.all_parameters =
        detail::probe_scope(full_run.params, "all_parameters", data, general_validation, ft,
                            ev, vocab, derive_seed(seed, "probe:adapt:full"));

    ModelParameters<T> ablated = adapters_run.params;
    zero_adapter_up_projections(ablated);
    const auto pre_texts = decode_corpus(pretrained, general_validation, vocab, ev);
    const auto abl_texts = decode_corpus(ablated, general_validation, vocab, ev);
    report.pretrained_general_bleu =
        model_bleu(pretrained, general_validation, vocab, ev).score;
    report.ablated_general_bleu = model_bleu(ablated, general_validation, vocab, ev).score;
    report.ablation_recovered = pre_texts == abl_texts &&
                                report.pretrained_general_bleu == report.ablated_general_bleu;
    return report;
}

}  // namespace fsmt

#endif  // FSMT_EVAL_SWEEPS_HPP_

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
#ifndef FSMT_CLI_EXPERIMENT_HPP_
#define FSMT_CLI_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fsmt/baselines/baselines.hpp"
#include "fsmt/eval/sweeps.hpp"
#include "fsmt/meta/meta.hpp"
#include "fsmt/model/config.hpp"
#include "fsmt/tasks/task.hpp"
#include "fsmt/text/corpus.hpp"
#include "fsmt/text/vocabulary.hpp"
#include "fsmt/train/train.hpp"

namespace fsmt {

// One corpus domain: either synthesized from a named generator or loaded
// from a pair of aligned text files. Exactly one of the two forms is set.
struct DomainSpec {
    std::string generator;  // synthetic when non-empty
    int pairs = 400;
    std::string source_path;
    std::string target_path;
    std::string domain_id;  // file-based domains only

    bool synthetic() const { return !generator.empty(); }
    std::string id() const { return synthetic() ? generator : domain_id; }
};

// The resolved experiment description: one JSON document drives every
// subcommand. Fields left out of the document keep the defaults below, and
// the resolved form (with every default filled in) is written next to each
// command's outputs.
struct ExperimentConfig {
    // corpus
    std::vector<DomainSpec> corpus_domains;
    std::uint64_t language_seed = 2026;
    int n_types = 48;
    std::uint64_t corpus_seed = 7;
    // tokenizer
    std::string tokenizer_mode = "word";  // "word" | "bpe"
    int bpe_merges = 200;
    int max_types = 0;  // word mode; 0 = unlimited
    // model (vocab_size is always derived from the prepared vocabulary)
    TransformerConfig model;
    // tasks
    long support_words = 250;
    long query_words = 100;
    int train_tasks_per_domain = 16;
    int validation_tasks_per_domain = 1;
    int test_tasks_per_domain = 1;
    std::vector<std::string> task_domains;      // empty = every domain
    std::vector<std::string> held_out_domains;  // unseen-domain mode
    // pretrain
    std::vector<std::string> pretrain_domains;  // empty = every domain
    int pretrain_epochs = 2;
    int pretrain_batch_sentences = 8;
    double pretrain_peak_lr = 7e-4;
    int pretrain_warmup_steps = 400;
    // meta
    MetaTrainConfig meta;
    // adapt
    FineTuneParams finetune;  // alpha defaults to meta.inner_alpha
    std::string strategies = "ABCD";
    int replicates = 3;
    int pool_epochs = 3;
    double pool_peak_lr = 7e-5;  // defaults to pretrain_peak_lr / 10
    int pool_warmup_steps = 400;
    int pool_batch_sentences = 8;
    ParameterScope pool_scope = ParameterScope::AllParameters;
    // eval
    EvalParams eval;
    // sweep
    std::string sweep_axis = "support";  // "support" | "query"
    std::vector<long> sweep_sizes;
    long sweep_total_support_words = 0;
    int sweep_train_tasks_per_domain = 4;
    std::vector<std::uint64_t> sweep_seeds = {1, 2, 3};
    // global
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool deterministic = false;

    void validate() const;
};

// Parses and schema-checks the JSON document; unknown keys are rejected.
ExperimentConfig experiment_from_json_string(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Every field echoed, defaults included, keys sorted. A fixed point of
// experiment_from_json_string.
std::string resolved_config_string(const ExperimentConfig& cfg);

// Corpora and vocabulary rebuilt deterministically from the config alone.
struct Materialized {
    std::vector<RawCorpus> raws;
    Vocabulary vocab;
    std::vector<ParallelCorpus> domains;
};
Materialized materialize(const ExperimentConfig& cfg);

struct PrepareOutputs {
    std::vector<std::string> corpus_files;
    std::string vocab_file;
    std::string resolved_config_file;
    int vocab_size = 0;
};
PrepareOutputs cmd_prepare(const ExperimentConfig& cfg);

struct MakeTasksOutputs {
    std::string manifest_file;
    long train_tasks = 0;
    long validation_tasks = 0;
    long test_tasks = 0;
};
MakeTasksOutputs cmd_make_tasks(const ExperimentConfig& cfg);

struct PretrainOutputs {
    std::string checkpoint_file;
    std::string log_file;
    TrainLog log;
    long final_step = 0;
};
// resume_from: continue from an existing checkpoint instead of a fresh
// initialization. The checkpoint written after each completed epoch is the
// recovery point if a later epoch fails.
PretrainOutputs cmd_pretrain(const ExperimentConfig& cfg, const std::string& resume_from = "");

struct MetaTrainOutputs {
    std::string checkpoint_file;
    std::string log_file;
    long records = 0;
    double best_validation = 0.0;
    int best_epoch = -1;
    long meta_steps = 0;
};
MetaTrainOutputs cmd_meta_train(const ExperimentConfig& cfg,
                                const std::string& init_checkpoint = "");

struct CompareOutputs {
    std::string csv_file;
    std::string table_file;
    AdaptationReport report;
    std::string table;
};
// strategies_override: letters like "ABD"; empty uses cfg.strategies.
CompareOutputs cmd_compare(const ExperimentConfig& cfg,
                           const std::string& pretrained_checkpoint = "",
                           const std::string& meta_checkpoint = "",
                           const std::string& strategies_override = "");
// Single-strategy variant writing adapt_report.* instead of compare_report.*.
CompareOutputs cmd_adapt(const ExperimentConfig& cfg, char strategy_letter,
                         const std::string& pretrained_checkpoint = "",
                         const std::string& meta_checkpoint = "");

struct SweepOutputs {
    std::string csv_file;
    std::string svg_file;
    SweepResult result;
};
SweepOutputs cmd_sweep(const ExperimentConfig& cfg,
                       const std::string& pretrained_checkpoint = "");

struct GradcheckOutputs {
    std::string report_file;
    double max_rel_err = 0.0;
    int checked = 0;
};
// Probes 64 sampled coordinates of a freshly initialized model against
// central finite differences; throws NumericalError when the check fails.
// corrupt deliberately falsifies one analytic value to prove the check bites.
GradcheckOutputs cmd_gradcheck(const ExperimentConfig& cfg, bool corrupt = false);

}  // namespace fsmt

#endif  // FSMT_CLI_EXPERIMENT_HPP_

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
#ifndef FSMT_TASKS_TASK_HPP_
#define FSMT_TASKS_TASK_HPP_

#include <string>
#include <utility>
#include <vector>

#include "fsmt/common/rng.hpp"
#include "fsmt/text/corpus.hpp"

namespace fsmt {

// One few-shot adaptation episode. support/query hold copies of the parent
// corpus pairs; *_indices record where they came from so a manifest can
// reconstruct the episode exactly.
struct Task {
    std::string task_id;
    std::string domain_id;
    std::vector<SentencePair> support;
    std::vector<SentencePair> query;
    std::vector<int> support_indices;
    std::vector<int> query_indices;
    long support_budget_words = 0;
    long query_budget_words = 0;

    long support_words() const;
    long query_words() const;
};

struct TaskBudgets {
    long support_words = 0;
    long query_words = 0;
};

struct MetaDataset {
    std::vector<Task> meta_train;
    std::vector<Task> meta_validation;
    std::vector<Task> meta_test;
};

// How many fresh tasks to draw per domain and split. Domains named in
// held_out_domains are excluded from train/validation and are the only
// source of meta-test tasks (unseen-domain mode).
struct SplitSpec {
    int train_tasks_per_domain = 16;
    int validation_tasks_per_domain = 1;
    int test_tasks_per_domain = 1;
    std::vector<std::string> held_out_domains;
};

// Weighted mixture over domain corpora for drawing episodes one at a time.
struct TaskDistribution {
    struct Entry {
        const ParallelCorpus* corpus = nullptr;
        double weight = 0.0;
    };
    std::vector<Entry> entries;
    TaskBudgets budgets;

    void validate() const;
    const ParallelCorpus& draw_domain(Rng& rng) const;
};

// Draws pairs uniformly without replacement, filling support first and then
// query, each until its word budget is first met or exceeded. Word totals
// land in [budget, budget + longest drawn sentence).
Task sample_task(const ParallelCorpus& corpus, long support_budget_words,
                 long query_budget_words, Rng& rng);

MetaDataset build_meta_dataset(const std::vector<ParallelCorpus>& domains,
                               const SplitSpec& split, const TaskBudgets& budgets,
                               std::uint64_t seed);

// Constant-total sweeps: n_tasks = total / size for each size.
std::vector<std::pair<long, long>> sweep_plan(long total_support_words,
                                              const std::vector<long>& support_sizes);

// Manifest round trip: indices plus domain ids, no sentence text.
std::string meta_dataset_to_manifest_string(const MetaDataset& ds);
MetaDataset meta_dataset_from_manifest_string(const std::string& text,
                                              const std::vector<ParallelCorpus>& domains);
void save_manifest(const MetaDataset& ds, const std::string& path);
MetaDataset load_manifest(const std::string& path,
                          const std::vector<ParallelCorpus>& domains);

}  // namespace fsmt

#endif  // FSMT_TASKS_TASK_HPP_

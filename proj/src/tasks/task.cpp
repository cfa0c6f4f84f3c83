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
#include "fsmt/tasks/task.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fsmt/common/error.hpp"
#include "json.hpp"

namespace fsmt {

namespace {

long word_total(const std::vector<SentencePair>& pairs) {
    long total = 0;
    for (const auto& p : pairs) total += p.source_word_count;
    return total;
}

}  // namespace

long Task::support_words() const { return word_total(support); }
long Task::query_words() const { return word_total(query); }

void TaskDistribution::validate() const {
    if (entries.empty()) throw ConfigError("task distribution: no domains");
    double total = 0.0;
    for (const auto& e : entries) {
        if (e.corpus == nullptr) throw ConfigError("task distribution: null corpus");
        if (e.weight < 0.0) throw ConfigError("task distribution: negative weight");
        total += e.weight;
    }
    if (!(total > 0.0)) throw ConfigError("task distribution: all weights are zero");
}

const ParallelCorpus& TaskDistribution::draw_domain(Rng& rng) const {
    validate();
    double total = 0.0;
    for (const auto& e : entries) total += e.weight;
    double u = rng.real01() * total;
    for (const auto& e : entries) {
        u -= e.weight;
        if (u < 0.0) return *e.corpus;
    }
    return *entries.back().corpus;
}

Task sample_task(const ParallelCorpus& corpus, long support_budget_words,
                 long query_budget_words, Rng& rng) {
    if (support_budget_words < 1 || query_budget_words < 1)
        throw ConfigError("sample_task: budgets must be >= 1 word");
    const long available = total_source_words(corpus);
    const long required = support_budget_words + query_budget_words;
    if (available < required)
        throw InsufficientDataError(corpus.domain_id, available, required);

    std::vector<int> order(corpus.pairs.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    Task task;
    task.domain_id = corpus.domain_id;
    task.support_budget_words = support_budget_words;
    task.query_budget_words = query_budget_words;

    std::size_t cursor = 0;
    auto fill = [&](std::vector<SentencePair>& out, std::vector<int>& indices,
                    long budget) {
        long words = 0;
        while (words < budget) {
            if (cursor >= order.size())
                throw InsufficientDataError(corpus.domain_id, words, budget);
            const int idx = order[cursor++];
            const auto& pair = corpus.pairs[static_cast<std::size_t>(idx)];
            out.push_back(pair);
            indices.push_back(idx);
            words += pair.source_word_count;
        }
    };
    fill(task.support, task.support_indices, support_budget_words);
    fill(task.query, task.query_indices, query_budget_words);
    return task;
}

namespace {

// Deterministic and order-independent: each task gets its own stream keyed by
// split, domain, and position.
Rng task_rng(std::uint64_t seed, const std::string& split, const std::string& domain,
             int k) {
    return Rng(derive_seed(seed, "task:" + split + ":" + domain + ":" + std::to_string(k)));
}

}  // namespace

MetaDataset build_meta_dataset(const std::vector<ParallelCorpus>& domains,
                               const SplitSpec& split, const TaskBudgets& budgets,
                               std::uint64_t seed) {
    if (domains.empty()) throw ConfigError("build_meta_dataset: no domains");
    if (split.train_tasks_per_domain < 0 || split.validation_tasks_per_domain < 0 ||
        split.test_tasks_per_domain < 0)
        throw ConfigError("build_meta_dataset: negative task counts");

    std::unordered_set<std::string> held_out(split.held_out_domains.begin(),
                                             split.held_out_domains.end());
    for (const auto& name : split.held_out_domains) {
        bool found = false;
        for (const auto& d : domains) found = found || d.domain_id == name;
        if (!found) throw UnknownDomainError(name);
    }

    MetaDataset ds;
    auto draw = [&](const ParallelCorpus& corpus, const std::string& split_name, int k,
                    std::vector<Task>& out) {
        Rng rng = task_rng(seed, split_name, corpus.domain_id, k);
        Task t = sample_task(corpus, budgets.support_words, budgets.query_words, rng);
        t.task_id = split_name + ":" + corpus.domain_id + ":" + std::to_string(k);
        out.push_back(std::move(t));
    };

    for (const auto& corpus : domains) {
        const bool is_held_out = held_out.count(corpus.domain_id) > 0;
        if (!is_held_out) {
            for (int k = 0; k < split.train_tasks_per_domain; ++k)
                draw(corpus, "meta_train", k, ds.meta_train);
            for (int k = 0; k < split.validation_tasks_per_domain; ++k)
                draw(corpus, "meta_validation", k, ds.meta_validation);
        }
        if (is_held_out || held_out.empty())
            for (int k = 0; k < split.test_tasks_per_domain; ++k)
                draw(corpus, "meta_test", k, ds.meta_test);
    }
    return ds;
}

std::vector<std::pair<long, long>> sweep_plan(long total_support_words,
                                              const std::vector<long>& support_sizes) {
    if (total_support_words < 1) throw PlanError("sweep_plan: total must be >= 1");
    std::vector<std::pair<long, long>> plan;
    for (long size : support_sizes) {
        if (size < 1) throw PlanError("sweep_plan: support size must be >= 1");
        if (total_support_words % size != 0)
            throw PlanError("sweep_plan: " + std::to_string(size) +
                            " does not divide " + std::to_string(total_support_words));
        plan.emplace_back(size, total_support_words / size);
    }
    return plan;
}

namespace {

nlohmann::json task_to_json(const Task& t, const std::string& split) {
    nlohmann::json j;
    j["task_id"] = t.task_id;
    j["domain_id"] = t.domain_id;
    j["split"] = split;
    j["support_budget_words"] = t.support_budget_words;
    j["query_budget_words"] = t.query_budget_words;
    j["support"] = t.support_indices;
    j["query"] = t.query_indices;
    return j;
}

Task task_from_json(const nlohmann::json& j,
                    const std::vector<ParallelCorpus>& domains) {
    Task t;
    t.task_id = j.at("task_id").get<std::string>();
    t.domain_id = j.at("domain_id").get<std::string>();
    t.support_budget_words = j.at("support_budget_words").get<long>();
    t.query_budget_words = j.at("query_budget_words").get<long>();

    const ParallelCorpus* corpus = nullptr;
    for (const auto& d : domains)
        if (d.domain_id == t.domain_id) corpus = &d;
    if (corpus == nullptr) throw UnknownDomainError(t.domain_id);

    auto resolve = [&](const nlohmann::json& ids, std::vector<SentencePair>& out,
                       std::vector<int>& indices) {
        for (const auto& v : ids) {
            const int idx = v.get<int>();
            if (idx < 0 || idx >= static_cast<int>(corpus->pairs.size()))
                throw DataError("manifest: pair index " + std::to_string(idx) +
                                " out of range for domain " + t.domain_id);
            indices.push_back(idx);
            out.push_back(corpus->pairs[static_cast<std::size_t>(idx)]);
        }
    };
    resolve(j.at("support"), t.support, t.support_indices);
    resolve(j.at("query"), t.query, t.query_indices);
    return t;
}

}  // namespace

std::string meta_dataset_to_manifest_string(const MetaDataset& ds) {
    nlohmann::json j;
    j["tasks"] = nlohmann::json::array();
    for (const auto& t : ds.meta_train) j["tasks"].push_back(task_to_json(t, "meta_train"));
    for (const auto& t : ds.meta_validation)
        j["tasks"].push_back(task_to_json(t, "meta_validation"));
    for (const auto& t : ds.meta_test) j["tasks"].push_back(task_to_json(t, "meta_test"));
    return j.dump(2);
}

MetaDataset meta_dataset_from_manifest_string(
    const std::string& text, const std::vector<ParallelCorpus>& domains) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: invalid JSON: ") + e.what());
    }
    MetaDataset ds;
    try {
        for (const auto& tj : j.at("tasks")) {
            const std::string split = tj.at("split").get<std::string>();
            Task t = task_from_json(tj, domains);
            if (split == "meta_train")
                ds.meta_train.push_back(std::move(t));
            else if (split == "meta_validation")
                ds.meta_validation.push_back(std::move(t));
            else if (split == "meta_test")
                ds.meta_test.push_back(std::move(t));
            else
                throw DataError("manifest: unknown split " + split);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: missing field: ") + e.what());
    }
    return ds;
}

void save_manifest(const MetaDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << meta_dataset_to_manifest_string(ds) << "\n";
}

MetaDataset load_manifest(const std::string& path,
                          const std::vector<ParallelCorpus>& domains) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return meta_dataset_from_manifest_string(buf.str(), domains);
}

}  // namespace fsmt

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
#include "fsmt/baselines/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "fsmt/eval/bleu.hpp"

namespace fsmt {

const char* strategy_slug(Strategy s) {
    switch (s) {
        case Strategy::NoFineTune: return "no_finetune";
        case Strategy::FineTuneOnTask: return "finetune_task";
        case Strategy::FineTuneOnMetaTrainPool: return "finetune_pool";
        case Strategy::MetaMT: return "meta_mt";
    }
    return "unknown";
}

char strategy_letter(Strategy s) {
    switch (s) {
        case Strategy::NoFineTune: return 'A';
        case Strategy::FineTuneOnTask: return 'B';
        case Strategy::FineTuneOnMetaTrainPool: return 'C';
        case Strategy::MetaMT: return 'D';
    }
    return '?';
}

long pool_source_words(const std::vector<Task>& tasks) {
    long total = 0;
    for (const auto& task : tasks) total += task.support_words();
    return total;
}

std::string report_to_csv_string(const AdaptationReport& report) {
    std::string out =
        "domain,strategy,replicate,zero_shot_bleu,adapted_bleu,tokens_seen,seed\n";
    char buf[256];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.4f,%.4f,%ld,%llu\n",
                      r.domain_id.c_str(), strategy_slug(r.strategy), r.replicate,
                      r.zero_shot_bleu, r.adapted_bleu, r.tokens_seen,
                      static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

std::string report_to_table_string(const AdaptationReport& report) {
    // Rows: domains. Columns: strategies in A..D order, mean +/- std of the
    // adapted score over every row matching (domain, strategy).
    std::set<std::string> domain_set;
    std::set<Strategy> strategy_set;
    std::map<std::pair<std::string, Strategy>, std::vector<double>> cells;
    for (const auto& r : report.rows) {
        domain_set.insert(r.domain_id);
        strategy_set.insert(r.strategy);
        cells[{r.domain_id, r.strategy}].push_back(r.adapted_bleu);
    }
    std::vector<Strategy> strategies(strategy_set.begin(), strategy_set.end());
    std::sort(strategies.begin(), strategies.end(), [](Strategy a, Strategy b) {
        return strategy_letter(a) < strategy_letter(b);
    });

    std::size_t domain_width = std::string("domain").size();
    for (const auto& d : domain_set) domain_width = std::max(domain_width, d.size());

    char buf[128];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(domain_width), "domain");
    out += buf;
    for (Strategy s : strategies) {
        std::snprintf(buf, sizeof(buf), "  %16c", strategy_letter(s));
        out += buf;
    }
    out += "\n";

    for (const auto& domain : domain_set) {
        std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(domain_width),
                      domain.c_str());
        out += buf;
        for (Strategy s : strategies) {
            const auto it = cells.find({domain, s});
            if (it == cells.end()) {
                std::snprintf(buf, sizeof(buf), "  %16s", "-");
            } else {
                const Stats stats = mean_std(it->second);
                char cell[64];
                std::snprintf(cell, sizeof(cell), "%.2f +/- %.2f", stats.mean,
                              stats.stddev);
                std::snprintf(buf, sizeof(buf), "  %16s", cell);
            }
            out += buf;
        }
        out += "\n";
    }
    return out;
}

void save_report_csv(const AdaptationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << report_to_csv_string(report);
}

}  // namespace fsmt

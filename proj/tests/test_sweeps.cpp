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
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fsmt/eval/sweeps.hpp"
#include "fsmt/text/synth.hpp"

using fsmt::ArchitectureProbeReport;
using fsmt::ConfigError;
using fsmt::EvalParams;
using fsmt::ModelParameters;
using fsmt::ParallelCorpus;
using fsmt::PlanError;
using fsmt::Strategy;
using fsmt::SweepAxis;
using fsmt::SweepConfig;
using fsmt::SweepResult;
using fsmt::TransformerConfig;
using fsmt::Vocabulary;

namespace {

fsmt::RawCorpus domain_raw(const std::string& generator, std::uint64_t seed) {
    fsmt::SyntheticDomainSpec spec;
    spec.generator = generator;
    return fsmt::synth_domain(spec, 160, seed);
}

// Two lexicon-shift domains over one shared source language, plus a tiny
// model sized for fast smoke runs.
struct Fixture {
    fsmt::RawCorpus raw_a = domain_raw("lexicon:11", 71);
    fsmt::RawCorpus raw_b = domain_raw("lexicon:22", 72);
    Vocabulary vocab = fsmt::build_word_vocab({raw_a, raw_b});
    std::vector<ParallelCorpus> domains = {fsmt::tokenize_corpus(raw_a, vocab),
                                           fsmt::tokenize_corpus(raw_b, vocab)};
    TransformerConfig config;
    ModelParameters<float> pretrained;

    Fixture() {
        config.encoder_blocks = 1;
        config.decoder_blocks = 1;
        config.model_dim = 8;
        config.ffn_dim = 16;
        config.heads = 2;
        config.dropout_rate = 0.0;
        config.adapter_hidden = 4;
        config.vocab_size = static_cast<int>(vocab.size());
        config.max_positions = 32;
        pretrained = fsmt::init_model<float>(config, 5);
        pretrained.kind = "pretrained";
    }

    SweepConfig<float> sweep_config() const {
        SweepConfig<float> cfg;
        cfg.domains = &domains;
        cfg.vocab = &vocab;
        cfg.pretrained = &pretrained;
        cfg.meta.inner_alpha = 0.05;
        cfg.meta.inner_steps = 1;
        cfg.meta.meta_lr = 1e-3;
        cfg.meta.epochs = 1;
        cfg.meta.record_wall_time = false;
        cfg.finetune.alpha = 0.1;
        cfg.finetune.epochs = 2;
        cfg.eval = EvalParams{1, 10};
        cfg.query_budget_words = 20;
        cfg.seeds = {3};
        return cfg;
    }
};

}  // namespace

TEST_SUITE("sweeps") {

TEST_CASE("support sweep emits one row per size, strategy, and seed") {
    Fixture fx;
    auto cfg = fx.sweep_config();
    cfg.total_support_words = 120;
    cfg.sizes = {30, 60};

    const SweepResult result = fsmt::sweep_support(cfg);

    CHECK(result.axis == SweepAxis::SupportSize);
    REQUIRE(result.rows.size() == 4);  // 2 sizes x 2 strategies x 1 seed
    REQUIRE(result.points.size() == 4);
    for (const auto& row : result.rows) {
        CHECK(std::isfinite(row.bleu));
        CHECK(row.bleu >= 0.0);
        CHECK(row.bleu <= 100.0);
        CHECK(row.seed == 3);
        CHECK((row.strategy == "finetune_task" || row.strategy == "meta_mt"));
    }
    // Points come out grouped by ascending size, each backed by the one seed.
    CHECK(result.points[0].size == 30);
    CHECK(result.points[1].size == 30);
    CHECK(result.points[2].size == 60);
    CHECK(result.points[3].size == 60);
    for (const auto& p : result.points) {
        CHECK(p.replicates == 1);
        CHECK(p.std_bleu == 0.0);
        bool matched = false;
        for (const auto& row : result.rows)
            if (row.size == p.size && row.strategy == p.strategy && row.bleu == p.mean_bleu)
                matched = true;
        CHECK(matched);
    }
}

TEST_CASE("single-point support sweep matches a direct comparison run") {
    Fixture fx;
    auto cfg = fx.sweep_config();
    cfg.total_support_words = 80;  // 2 tasks of 40 words, one per domain
    cfg.sizes = {40};

    const SweepResult result = fsmt::sweep_support(cfg);
    REQUIRE(result.rows.size() == 2);

    // Reproduce the point by hand through the same seed-derivation chain.
    const std::uint64_t point_seed = fsmt::derive_seed(3, "support_size:40");
    fsmt::SplitSpec split;
    split.train_tasks_per_domain = 1;
    split.validation_tasks_per_domain = 1;
    split.test_tasks_per_domain = 1;
    const fsmt::TaskBudgets budgets{40, cfg.query_budget_words};
    const auto data = fsmt::build_meta_dataset(fx.domains, split, budgets,
                                               fsmt::derive_seed(point_seed, "tasks"));
    const auto meta =
        fsmt::meta_train(fx.pretrained, data, cfg.meta, fsmt::derive_seed(point_seed, "meta"));
    const std::uint64_t adapt_seed = fsmt::derive_seed(point_seed, "adapt");

    double sum_b = 0.0, sum_d = 0.0;
    for (const auto& task : data.meta_test) {
        sum_b += fsmt::adapt_and_eval(Strategy::FineTuneOnTask, fx.pretrained, task,
                                      cfg.finetune, cfg.eval, fx.vocab, adapt_seed)
                     .adapted_bleu;
        sum_d += fsmt::adapt_and_eval(Strategy::MetaMT, meta.params, task, cfg.finetune,
                                      cfg.eval, fx.vocab, adapt_seed)
                     .adapted_bleu;
    }
    const double n = static_cast<double>(data.meta_test.size());
    CHECK(result.rows[0].strategy == "finetune_task");
    CHECK(result.rows[0].bleu == sum_b / n);
    CHECK(result.rows[1].strategy == "meta_mt");
    CHECK(result.rows[1].bleu == sum_d / n);
}

TEST_CASE("query sweep varies the query budget with support fixed") {
    Fixture fx;
    auto cfg = fx.sweep_config();
    cfg.support_budget_words = 30;
    cfg.train_tasks_per_domain = 1;
    cfg.sizes = {20, 40};

    const SweepResult result = fsmt::sweep_query(cfg);
    CHECK(result.axis == SweepAxis::QuerySize);
    REQUIRE(result.rows.size() == 4);
    CHECK(result.rows[0].size == 20);
    CHECK(result.rows[2].size == 40);
    for (const auto& row : result.rows) CHECK(std::isfinite(row.bleu));

    const std::string csv = fsmt::sweep_to_csv_string(result);
    CHECK(csv.find("axis,size,strategy,seed,bleu\n") == 0);
    CHECK(csv.find("query_size,20,finetune_task,3,") != std::string::npos);
    CHECK(csv.find("query_size,40,meta_mt,3,") != std::string::npos);
}

TEST_CASE("sweep rejects bad configurations") {
    Fixture fx;

    auto no_seeds = fx.sweep_config();
    no_seeds.total_support_words = 120;
    no_seeds.sizes = {30};
    no_seeds.seeds.clear();
    CHECK_THROWS_AS(fsmt::sweep_support(no_seeds), ConfigError);

    auto no_model = fx.sweep_config();
    no_model.total_support_words = 120;
    no_model.sizes = {30};
    no_model.pretrained = nullptr;
    CHECK_THROWS_AS(fsmt::sweep_support(no_model), ConfigError);

    auto unsorted = fx.sweep_config();
    unsorted.total_support_words = 120;
    unsorted.sizes = {30, 30};
    CHECK_THROWS_AS(fsmt::sweep_support(unsorted), ConfigError);

    auto indivisible_total = fx.sweep_config();
    indivisible_total.total_support_words = 100;
    indivisible_total.sizes = {30};
    CHECK_THROWS_AS(fsmt::sweep_support(indivisible_total), PlanError);

    // 90 words / 30 = 3 tasks cannot spread evenly over 2 domains.
    auto odd_tasks = fx.sweep_config();
    odd_tasks.total_support_words = 90;
    odd_tasks.sizes = {30};
    CHECK_THROWS_AS(fsmt::sweep_support(odd_tasks), PlanError);

    auto no_tasks = fx.sweep_config();
    no_tasks.support_budget_words = 30;
    no_tasks.sizes = {20};
    no_tasks.train_tasks_per_domain = 0;
    CHECK_THROWS_AS(fsmt::sweep_query(no_tasks), ConfigError);
}

TEST_CASE("sweep errors carry the offending point") {
    Fixture fx;
    auto cfg = fx.sweep_config();
    // Each domain holds ~1000 words; a 5000-word support budget cannot fill.
    cfg.total_support_words = 10000;
    cfg.sizes = {5000};
    try {
        fsmt::sweep_support(cfg);
        FAIL("expected an error");
    } catch (const fsmt::Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sweep point support_size=5000") != std::string::npos);
        CHECK(e.code() == fsmt::ExitCode::Data);
    }
}

TEST_CASE("architecture probe reports both scopes and recovers the ablation") {
    Fixture fx;
    auto cfg = fx.sweep_config();

    fsmt::SplitSpec split;
    split.train_tasks_per_domain = 2;
    split.validation_tasks_per_domain = 1;
    split.test_tasks_per_domain = 1;
    const auto data =
        fsmt::build_meta_dataset(fx.domains, split, {30, 20}, fsmt::derive_seed(9, "probe"));

    // General-domain reference: held-out pairs from the first domain.
    std::vector<fsmt::SentencePair> general(fx.domains[0].pairs.begin(),
                                            fx.domains[0].pairs.begin() + 8);

    const ArchitectureProbeReport report = fsmt::architecture_probe(
        fx.pretrained, data, cfg.meta, cfg.finetune, cfg.eval, fx.vocab, general, 17);

    CHECK(report.adapters.scope == "adapters_only");
    CHECK(report.all_parameters.scope == "all_parameters");
    for (const auto* scope : {&report.adapters, &report.all_parameters}) {
        CHECK(std::isfinite(scope->general_zero_shot_bleu));
        CHECK(std::isfinite(scope->test_zero_shot_bleu));
        CHECK(std::isfinite(scope->test_adapted_bleu));
        CHECK(scope->test_adapted_bleu >= 0.0);
        CHECK(scope->test_adapted_bleu <= 100.0);
    }
    CHECK(report.ablation_recovered);
    CHECK(report.pretrained_general_bleu == report.ablated_general_bleu);

    CHECK_THROWS_AS(fsmt::architecture_probe(fx.pretrained, data, cfg.meta, cfg.finetune,
                                             cfg.eval, fx.vocab, {}, 17),
                    ConfigError);
}

TEST_CASE("zeroed up-projections make trained adapters inert") {
    Fixture fx;
    auto model = fsmt::init_model<float>(fx.config, 5);
    auto bare_cfg = fx.config;
    bare_cfg.adapter_hidden = 0;
    auto bare = fsmt::init_model<float>(bare_cfg, 5);

    // Perturb every adapter array, then erase only the up-projections.
    fsmt::Rng rng(123);
    for (auto& e : model.entries)
        if (e.group == fsmt::ParamGroup::Adapter)
            for (std::size_t i = 0; i < e.value.size(); ++i)
                e.value.at_flat(i) = static_cast<float>(rng.normal(0.0, 0.1));
    fsmt::zero_adapter_up_projections(model);

    std::vector<fsmt::SentencePair> batch(fx.domains[0].pairs.begin(),
                                          fx.domains[0].pairs.begin() + 3);
    const float with_adapters = fsmt::forward_loss(model, batch, fsmt::Mode::Eval, nullptr);
    const float without = fsmt::forward_loss(bare, batch, fsmt::Mode::Eval, nullptr);
    CHECK(with_adapters == without);

    // The down-projections stay nonzero, so this is weaker than zero_adapters.
    bool any_nonzero_down = false;
    for (const auto& e : model.entries)
        if (e.group == fsmt::ParamGroup::Adapter)
            for (std::size_t i = 0; i < e.value.size(); ++i)
                if (e.value.at_flat(i) != 0.0f) any_nonzero_down = true;
    CHECK(any_nonzero_down);
}

TEST_CASE("csv and svg emitters render every point") {
    SweepResult result;
    result.axis = SweepAxis::SupportSize;
    result.rows = {
        {30, "finetune_task", 7, 10.0}, {30, "meta_mt", 7, 12.5},
        {30, "finetune_task", 8, 12.0}, {30, "meta_mt", 8, 13.5},
        {60, "finetune_task", 7, 11.0}, {60, "meta_mt", 7, 9.0},
        {60, "finetune_task", 8, 13.0}, {60, "meta_mt", 8, 10.0},
    };
    result.points = fsmt::summarize_sweep_rows(result.rows);

    REQUIRE(result.points.size() == 4);
    CHECK(result.points[0].size == 30);
    CHECK(result.points[0].strategy == "finetune_task");
    CHECK(result.points[0].mean_bleu == doctest::Approx(11.0));
    CHECK(result.points[0].std_bleu == doctest::Approx(std::sqrt(2.0)));
    CHECK(result.points[0].replicates == 2);
    CHECK(result.points[1].strategy == "meta_mt");
    CHECK(result.points[1].mean_bleu == doctest::Approx(13.0));

    const std::string csv = fsmt::sweep_to_csv_string(result);
    CHECK(csv == "axis,size,strategy,seed,bleu\n"
                 "support_size,30,finetune_task,7,10.0000\n"
                 "support_size,30,meta_mt,7,12.5000\n"
                 "support_size,30,finetune_task,8,12.0000\n"
                 "support_size,30,meta_mt,8,13.5000\n"
                 "support_size,60,finetune_task,7,11.0000\n"
                 "support_size,60,meta_mt,7,9.0000\n"
                 "support_size,60,finetune_task,8,13.0000\n"
                 "support_size,60,meta_mt,8,10.0000\n");

    const std::string svg = fsmt::sweep_to_svg_string(result, "support sweep");
    CHECK(svg.rfind("<svg ", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("support sweep") != std::string::npos);
    CHECK(svg.find("support_size (words)") != std::string::npos);
    CHECK(svg.find("finetune_task") != std::string::npos);
    CHECK(svg.find("meta_mt") != std::string::npos);

    std::size_t polylines = 0, circles = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) { ++polylines; ++pos; }
    pos = 0;
    while ((pos = svg.find("<circle", pos)) != std::string::npos) { ++circles; ++pos; }
    CHECK(polylines == 2);  // one line per strategy
    CHECK(circles == 4);    // one mark per point

    // Degenerate inputs still produce a well-formed document.
    const SweepResult empty;
    const std::string empty_svg = fsmt::sweep_to_svg_string(empty, "empty");
    CHECK(empty_svg.rfind("<svg ", 0) == 0);
    CHECK(empty_svg.find("</svg>") != std::string::npos);
}

}  // TEST_SUITE

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
#include "fsmt/meta/meta.hpp"
#include "fsmt/meta/quadratic.hpp"

using fsmt::Matrix;
using fsmt::MetaAlgorithm;
using fsmt::MetaDataset;
using fsmt::MetaTrainConfig;
using fsmt::Mode;
using fsmt::ParameterScope;
using fsmt::QuadraticAlgo;
using fsmt::Rng;
using fsmt::SentencePair;
using fsmt::Task;
using fsmt::TransformerConfig;

namespace {

Matrix<double> vec(std::vector<double> vals) {
    Matrix<double> m(1, vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) m(0, i) = vals[i];
    return m;
}

TransformerConfig tiny_config(double dropout = 0.1) {
    TransformerConfig c;
    c.encoder_blocks = 1;
    c.decoder_blocks = 1;
    c.model_dim = 8;
    c.ffn_dim = 16;
    c.heads = 2;
    c.dropout_rate = dropout;
    c.adapter_hidden = 4;
    c.vocab_size = 16;
    c.max_positions = 16;
    return c;
}

Task make_task(const std::string& id, std::uint64_t seed) {
    Rng rng(fsmt::derive_seed(seed, "meta-test-task"));
    Task t;
    t.task_id = id;
    t.domain_id = "synthetic";
    auto draw_pair = [&]() {
        SentencePair p;
        const int slen = rng.range_int(2, 4);
        const int tlen = rng.range_int(2, 4);
        for (int i = 0; i < slen; ++i) p.source.push_back(rng.range_int(4, 15));
        for (int i = 0; i < tlen; ++i) p.target.push_back(rng.range_int(4, 15));
        p.source_word_count = slen;
        return p;
    };
    for (int i = 0; i < 3; ++i) t.support.push_back(draw_pair());
    for (int i = 0; i < 2; ++i) t.query.push_back(draw_pair());
    t.support_budget_words = t.support_words();
    t.query_budget_words = t.query_words();
    return t;
}

template <typename T>
void randomize_adapters(fsmt::ModelParameters<T>& model, std::uint64_t seed) {
    Rng rng(fsmt::derive_seed(seed, "randomize-adapters"));
    for (auto& e : model.entries)
        if (e.group == fsmt::ParamGroup::Adapter)
            for (std::size_t i = 0; i < e.value.size(); ++i)
                e.value.at_flat(i) = static_cast<T>(rng.normal(0.0, 0.1));
}

}  // namespace

TEST_SUITE("meta") {

TEST_CASE("quadratic inner steps rescale the offset geometrically") {
    auto theta = vec({3.0, -1.0});
    auto c = vec({1.0, 1.0});
    for (double alpha : {0.1, 0.5}) {
        for (int steps : {1, 3}) {
            auto out = fsmt::quadratic_inner_adapt(theta, c, alpha, steps);
            const double factor = std::pow(1.0 - alpha, steps);
            for (std::size_t i = 0; i < out.size(); ++i)
                CHECK(out.at_flat(i) - c.at_flat(i) ==
                      doctest::Approx(factor * (theta.at_flat(i) - c.at_flat(i)))
                          .epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(fsmt::quadratic_inner_adapt(theta, vec({1.0}), 0.1, 1),
                    fsmt::ShapeError);
    CHECK_THROWS_AS(fsmt::quadratic_inner_adapt(theta, c, 0.1, 0), fsmt::ConfigError);
}

TEST_CASE("closed-form meta-gradients on the quadratic family") {
    auto theta = vec({2.0, -3.0, 0.5});
    auto c = vec({1.0, 1.0, 1.0});
    const double alpha = 0.3;
    auto first = fsmt::quadratic_meta_gradient(theta, c, alpha, QuadraticAlgo::FirstOrder);
    auto exact = fsmt::quadratic_meta_gradient(theta, c, alpha, QuadraticAlgo::Exact);
    auto diff = fsmt::quadratic_meta_gradient(theta, c, alpha, QuadraticAlgo::Difference);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double d = theta.at_flat(i) - c.at_flat(i);
        CHECK(first.at_flat(i) == doctest::Approx((1 - alpha) * d).epsilon(1e-10));
        CHECK(exact.at_flat(i) ==
              doctest::Approx((1 - alpha) * (1 - alpha) * d).epsilon(1e-10));
        CHECK(diff.at_flat(i) == doctest::Approx(alpha * d).epsilon(1e-10));
        // the two update rules differ by exactly one contraction factor
        CHECK(exact.at_flat(i) == doctest::Approx((1 - alpha) * first.at_flat(i))
                                      .epsilon(1e-12));
    }
    auto at_center = fsmt::quadratic_meta_gradient(c, c, alpha, QuadraticAlgo::FirstOrder);
    for (std::size_t i = 0; i < at_center.size(); ++i) CHECK(at_center.at_flat(i) == 0.0);
}

TEST_CASE("all meta rules drive the quadratic family to the center mean") {
    std::vector<Matrix<double>> centers{vec({1.0, 2.0}), vec({3.0, -2.0}),
                                        vec({-1.0, 3.0}), vec({5.0, 1.0})};
    Matrix<double> mean(1, 2);
    for (const auto& c : centers)
        for (std::size_t i = 0; i < 2; ++i)
            mean.at_flat(i) += c.at_flat(i) / static_cast<double>(centers.size());

    for (auto algo :
         {QuadraticAlgo::FirstOrder, QuadraticAlgo::Exact, QuadraticAlgo::Difference}) {
        fsmt::QuadraticMetaConfig cfg;
        cfg.alpha = 0.1;
        cfg.meta_lr = 0.5;
        cfg.steps = 400;
        cfg.algorithm = algo;
        auto theta = fsmt::quadratic_meta_train(vec({10.0, -10.0}), centers, cfg);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(std::fabs(theta.at_flat(i) - mean.at_flat(i)) < 1e-3);
    }
    CHECK(fsmt::quadratic_loss(vec({2.0}), vec({0.0})) == doctest::Approx(2.0));
    CHECK_THROWS_AS(fsmt::quadratic_meta_train(vec({0.0}), {}, {}), fsmt::ConfigError);
}

TEST_CASE("inner adaptation leaves the original and out-of-scope arrays alone") {
    auto model = fsmt::init_model<float>(tiny_config(), 5);
    randomize_adapters(model, 7);
    auto pristine = model;
    auto task = make_task("t0", 1);
    Rng rng(3);
    auto adapted = fsmt::inner_adapt(model, task.support, 0.1, 2,
                                     ParameterScope::AdaptersOnly, &rng);
    bool any_changed = false;
    for (std::size_t i = 0; i < model.entries.size(); ++i) {
        CHECK(model.entries[i].value.bits_equal(pristine.entries[i].value));
        if (model.entries[i].group == fsmt::ParamGroup::Base)
            CHECK(adapted.entries[i].value.bits_equal(model.entries[i].value));
        else if (!adapted.entries[i].value.bits_equal(model.entries[i].value))
            any_changed = true;
    }
    CHECK(any_changed);
    CHECK_THROWS_AS(fsmt::inner_adapt(model, task.support, 0.1, 0,
                                      ParameterScope::AdaptersOnly, &rng),
                    fsmt::ConfigError);
    CHECK_THROWS_AS(fsmt::inner_adapt(model, {}, 0.1, 1, ParameterScope::AdaptersOnly,
                                      &rng),
                    fsmt::EmptyBatchError);
}

TEST_CASE("a zero learning rate reproduces the starting point exactly") {
    auto model = fsmt::init_model<float>(tiny_config(0.0), 11);
    randomize_adapters(model, 13);
    auto task = make_task("t1", 2);
    auto adapted = fsmt::inner_adapt(model, task.support, 0.0, 1,
                                     ParameterScope::AllParameters, nullptr);
    for (std::size_t i = 0; i < model.entries.size(); ++i)
        CHECK(adapted.entries[i].value.bits_equal(model.entries[i].value));
}

TEST_CASE("query loss is a deterministic eval-mode objective") {
    auto model = fsmt::init_model<float>(tiny_config(0.0), 17);
    auto task = make_task("t2", 3);
    const double a = fsmt::query_loss(model, task.query);
    const double b = fsmt::query_loss(model, task.query);
    CHECK(a == b);
    Rng rng(1);
    CHECK(a == doctest::Approx(static_cast<double>(
                   forward_loss(model, task.query, Mode::Train, &rng))));
}

TEST_CASE("first-order meta-gradient equals the two-pass reconstruction") {
    auto model = fsmt::init_model<float>(tiny_config(), 19);
    randomize_adapters(model, 23);
    auto task = make_task("t3", 4);
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.05;
    cfg.inner_steps = 2;
    cfg.scope = ParameterScope::AdaptersOnly;

    Rng rng_a(fsmt::derive_seed(100, "two-pass"));
    auto bundle = fsmt::fomaml_meta_gradient(model, task, cfg, rng_a);

    // Manual reconstruction with its own rng stream seeded identically.
    Rng rng_b(fsmt::derive_seed(100, "two-pass"));
    auto work = model;
    auto view = fsmt::partition_view(work, cfg.scope);
    for (int k = 0; k < cfg.inner_steps; ++k) {
        auto g = fsmt::model_grad(work, task.support, Mode::Train, &rng_b, view);
        fsmt::sgd_step(fsmt::collect_params(work, view), g.grads, cfg.inner_alpha);
    }
    auto expected = fsmt::model_grad(work, task.query, Mode::Eval, nullptr, view);

    REQUIRE(bundle.grads.size() == expected.grads.size());
    CHECK(bundle.loss == expected.loss);
    for (std::size_t i = 0; i < bundle.grads.size(); ++i)
        CHECK(bundle.grads[i].bits_equal(expected.grads[i]));
}

TEST_CASE("one meta step is one Adam update on the summed meta-gradient") {
    for (auto algorithm : {MetaAlgorithm::FoMAML, MetaAlgorithm::Reptile}) {
        auto model = fsmt::init_model<float>(tiny_config(), 29);
        randomize_adapters(model, 31);
        auto manual = model;
        std::vector<Task> tasks{make_task("a", 5), make_task("b", 6)};
        MetaTrainConfig cfg;
        cfg.inner_alpha = 0.05;
        cfg.meta_lr = 1e-3;
        cfg.meta_batch_size = 2;
        cfg.algorithm = algorithm;
        cfg.record_wall_time = false;

        auto view = fsmt::partition_view(model, cfg.scope);
        auto state = fsmt::make_adam_state(fsmt::collect_params(model, view), cfg.meta_lr);
        fsmt::MetaTrainLog log;
        Rng rng(fsmt::derive_seed(42, "meta-step"));
        fsmt::meta_step(model, {&tasks[0], &tasks[1]}, cfg, state, rng, 1, log);
        CHECK(log.records.size() == 2);
        CHECK(state.step == 1);

        // Reconstruct the identical update by hand.
        Rng rng2(fsmt::derive_seed(42, "meta-step"));
        auto mview = fsmt::partition_view(manual, cfg.scope);
        std::vector<Matrix<float>> sum;
        for (int idx : mview.indices) {
            const auto& p = manual.entries[static_cast<std::size_t>(idx)].value;
            sum.emplace_back(p.rows(), p.cols());
        }
        for (const auto& task : tasks) {
            Rng inner = rng2.split(task.task_id);
            auto adapted = fsmt::inner_adapt(manual, task.support, cfg.inner_alpha,
                                             cfg.inner_steps, cfg.scope, &inner);
            if (algorithm == MetaAlgorithm::FoMAML) {
                auto bundle =
                    fsmt::model_grad(adapted, task.query, Mode::Eval, nullptr, mview);
                for (std::size_t i = 0; i < sum.size(); ++i)
                    for (std::size_t k = 0; k < sum[i].size(); ++k)
                        sum[i].at_flat(k) += bundle.grads[i].at_flat(k);
            } else {
                for (std::size_t i = 0; i < sum.size(); ++i) {
                    const auto& before =
                        manual.entries[static_cast<std::size_t>(mview.indices[i])].value;
                    const auto& after =
                        adapted.entries[static_cast<std::size_t>(mview.indices[i])].value;
                    for (std::size_t k = 0; k < sum[i].size(); ++k)
                        sum[i].at_flat(k) += 0.5f * (before.at_flat(k) - after.at_flat(k));
                }
            }
        }
        auto mstate =
            fsmt::make_adam_state(fsmt::collect_params(manual, mview), cfg.meta_lr);
        fsmt::adam_step(fsmt::collect_params(manual, mview), sum, mstate);

        for (std::size_t i = 0; i < model.entries.size(); ++i)
            CHECK(model.entries[i].value.bits_equal(manual.entries[i].value));
    }
}

TEST_CASE("meta step rejects an empty batch") {
    auto model = fsmt::init_model<float>(tiny_config(), 37);
    MetaTrainConfig cfg;
    auto view = fsmt::partition_view(model, cfg.scope);
    auto state = fsmt::make_adam_state(fsmt::collect_params(model, view), cfg.meta_lr);
    fsmt::MetaTrainLog log;
    Rng rng(1);
    CHECK_THROWS_AS(fsmt::meta_step(model, {}, cfg, state, rng, 1, log),
                    fsmt::EmptyBatchError);
}

namespace {

MetaDataset small_dataset(int n_train, int n_val) {
    MetaDataset ds;
    for (int i = 0; i < n_train; ++i)
        ds.meta_train.push_back(make_task("train" + std::to_string(i), 50 + i));
    for (int i = 0; i < n_val; ++i)
        ds.meta_validation.push_back(make_task("val" + std::to_string(i), 90 + i));
    return ds;
}

}  // namespace

TEST_CASE("zero epochs return the initial parameters untouched") {
    auto model = fsmt::init_model<float>(tiny_config(), 41);
    MetaTrainConfig cfg;
    cfg.epochs = 0;
    cfg.record_wall_time = false;
    auto result = fsmt::meta_train(model, small_dataset(2, 0), cfg, 1);
    CHECK(result.log.records.empty());
    for (std::size_t i = 0; i < model.entries.size(); ++i)
        CHECK(result.params.entries[i].value.bits_equal(model.entries[i].value));
    CHECK_THROWS_AS(fsmt::meta_train(model, MetaDataset{}, cfg, 1), fsmt::ConfigError);
}

TEST_CASE("meta-training is deterministic in the seed") {
    auto model = fsmt::init_model<float>(tiny_config(), 43);
    randomize_adapters(model, 47);
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.05;
    cfg.meta_lr = 1e-3;
    cfg.epochs = 2;
    cfg.record_wall_time = false;
    auto ds = small_dataset(3, 0);
    auto a = fsmt::meta_train(model, ds, cfg, 7);
    auto b = fsmt::meta_train(model, ds, cfg, 7);
    auto c = fsmt::meta_train(model, ds, cfg, 8);
    CHECK(meta_log_to_csv_string(a.log) == meta_log_to_csv_string(b.log));
    CHECK(meta_log_to_csv_string(a.log) != meta_log_to_csv_string(c.log));
    for (std::size_t i = 0; i < a.params.entries.size(); ++i)
        CHECK(a.params.entries[i].value.bits_equal(b.params.entries[i].value));
}

TEST_CASE("adapter-scope meta-training freezes the base and logs every task") {
    auto model = fsmt::init_model<float>(tiny_config(), 53);
    randomize_adapters(model, 59);
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.05;
    cfg.meta_lr = 1e-3;
    cfg.epochs = 2;
    cfg.record_wall_time = false;
    auto ds = small_dataset(3, 0);
    auto result = fsmt::meta_train(model, ds, cfg, 11);

    CHECK(result.params.kind == "meta-trained");
    CHECK(result.params.meta_step == 6);  // batch size 1: one update per task
    REQUIRE(result.log.records.size() == 6);
    for (std::size_t i = 1; i < result.log.records.size(); ++i)
        CHECK(result.log.records[i].step >= result.log.records[i - 1].step);
    for (const auto& r : result.log.records) {
        CHECK(std::isfinite(r.query_loss));
        CHECK(r.lr == 1e-3);
        CHECK(r.elapsed_ms == 0);
    }
    for (std::size_t i = 0; i < model.entries.size(); ++i)
        if (model.entries[i].group == fsmt::ParamGroup::Base)
            CHECK(result.params.entries[i].value.bits_equal(model.entries[i].value));

    const auto csv = meta_log_to_csv_string(result.log);
    CHECK(csv.rfind("step,task_id,support_loss_pre,support_loss_post,query_loss,lr,"
                    "elapsed_ms\n", 0) == 0);
}

TEST_CASE("validation selects the best epoch checkpoint") {
    auto model = fsmt::init_model<float>(tiny_config(), 61);
    randomize_adapters(model, 67);
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.05;
    cfg.meta_lr = 5e-3;
    cfg.epochs = 3;
    cfg.record_wall_time = false;
    auto ds = small_dataset(3, 2);
    auto result = fsmt::meta_train(model, ds, cfg, 13);

    REQUIRE(result.log.validation_metrics.size() == 3);
    double best = result.log.validation_metrics[0];
    for (double m : result.log.validation_metrics) best = std::min(best, m);
    CHECK(result.log.best_validation_metric == best);
    CHECK(result.log.validation_metrics[static_cast<std::size_t>(
              result.log.best_epoch)] == best);

    // Recomputing the metric on the returned parameters with the winning
    // epoch's streams reproduces the recorded value exactly.
    double metric = 0.0;
    for (const auto& task : ds.meta_validation) {
        Rng val_rng(fsmt::derive_seed(13, "meta-val:" +
                                              std::to_string(result.log.best_epoch) +
                                              ":" + task.task_id));
        auto adapted = fsmt::inner_adapt(result.params, task.support, cfg.inner_alpha,
                                         cfg.inner_steps, cfg.scope, &val_rng);
        metric += fsmt::query_loss(adapted, task.query);
    }
    metric /= static_cast<double>(ds.meta_validation.size());
    CHECK(metric == result.log.best_validation_metric);
}

TEST_CASE("early stopping halts after the patience budget") {
    auto model = fsmt::init_model<float>(tiny_config(), 71);
    randomize_adapters(model, 73);
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.05;
    cfg.meta_lr = 0.5;  // aggressive on purpose so validation degrades
    cfg.epochs = 40;
    cfg.early_stop_patience = 2;
    cfg.record_wall_time = false;
    auto ds = small_dataset(2, 2);
    auto result = fsmt::meta_train(model, ds, cfg, 17);
    CHECK(result.log.validation_metrics.size() < 40);
}

TEST_CASE("config validation rejects bad settings") {
    MetaTrainConfig cfg;
    cfg.inner_alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), fsmt::ConfigError);
    cfg = {};
    cfg.inner_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), fsmt::ConfigError);
    cfg = {};
    cfg.meta_batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), fsmt::ConfigError);
    cfg = {};
    cfg.epochs = -1;
    CHECK_THROWS_AS(cfg.validate(), fsmt::ConfigError);
}

}  // TEST_SUITE

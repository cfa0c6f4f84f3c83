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
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "fsmt/cli/experiment.hpp"
#include "fsmt/common/version.hpp"

namespace {

// Per-subcommand copies of the shared flags. Option pointers let the
// callback distinguish "given on the command line" from "left at default",
// so flags override the config document only when actually passed.
struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* det_opt = nullptr;
};

std::shared_ptr<CommonFlags> add_common_flags(CLI::App* cmd) {
    auto c = std::make_shared<CommonFlags>();
    c->config_opt = cmd->add_option("--config", c->config_path,
                                    "experiment description (single JSON document)");
    c->seed_opt = cmd->add_option("--seed", c->seed, "root random seed");
    c->out_opt = cmd->add_option("--out", c->out_dir, "output directory");
    c->det_opt = cmd->add_flag("--deterministic",
                               "bit-identical reruns (drops wall-clock timings)");
    return c;
}

fsmt::ExperimentConfig resolve_config(const CommonFlags& c) {
    fsmt::ExperimentConfig cfg;
    if (c.config_opt->count() > 0) cfg = fsmt::load_experiment_config(c.config_path);
    if (c.seed_opt->count() > 0) cfg.seed = c.seed;
    if (c.out_opt->count() > 0) cfg.out_dir = c.out_dir;
    if (c.det_opt->count() > 0) cfg.deterministic = true;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot adaptation experiments for small translation models"};
    app.set_version_flag("--version", std::string("fsmt ") + fsmt::version_string());
    app.require_subcommand(1);

    auto* prepare = app.add_subcommand(
        "prepare", "materialize corpora and the vocabulary into the output directory");
    auto prepare_c = add_common_flags(prepare);
    prepare->callback([prepare_c] {
        const auto cfg = resolve_config(*prepare_c);
        const auto out = fsmt::cmd_prepare(cfg);
        std::printf("wrote %zu corpus files and %s (%d types)\n", out.corpus_files.size(),
                    out.vocab_file.c_str(), out.vocab_size);
    });

    auto* make_tasks =
        app.add_subcommand("make-tasks", "sample the episode manifest from the corpora");
    auto make_tasks_c = add_common_flags(make_tasks);
    make_tasks->callback([make_tasks_c] {
        const auto cfg = resolve_config(*make_tasks_c);
        const auto out = fsmt::cmd_make_tasks(cfg);
        std::printf("wrote %s: %ld train / %ld validation / %ld test tasks\n",
                    out.manifest_file.c_str(), out.train_tasks, out.validation_tasks,
                    out.test_tasks);
    });

    auto* pretrain =
        app.add_subcommand("pretrain", "supervised training on the pretraining domains");
    auto pretrain_c = add_common_flags(pretrain);
    auto resume_from = std::make_shared<std::string>();
    pretrain->add_option("--resume", *resume_from, "continue from an existing checkpoint");
    pretrain->callback([pretrain_c, resume_from] {
        const auto cfg = resolve_config(*pretrain_c);
        const auto out = fsmt::cmd_pretrain(cfg, *resume_from);
        if (out.log.epoch_mean_loss.empty())
            std::printf("wrote %s (no epochs trained, step %ld)\n",
                        out.checkpoint_file.c_str(), out.final_step);
        else
            std::printf("wrote %s: %zu epochs, step %ld, last epoch mean loss %.4f\n",
                        out.checkpoint_file.c_str(), out.log.epoch_mean_loss.size(),
                        out.final_step, out.log.epoch_mean_loss.back());
    });

    auto* meta_train =
        app.add_subcommand("meta-train", "episodic meta-training from a pretrained checkpoint");
    auto meta_train_c = add_common_flags(meta_train);
    auto init_ckpt = std::make_shared<std::string>();
    meta_train->add_option("--init", *init_ckpt,
                           "initial checkpoint (default: <out>/pretrained.ckpt)");
    meta_train->callback([meta_train_c, init_ckpt] {
        const auto cfg = resolve_config(*meta_train_c);
        const auto out = fsmt::cmd_meta_train(cfg, *init_ckpt);
        std::printf("wrote %s: %ld meta-steps, %ld records", out.checkpoint_file.c_str(),
                    out.meta_steps, out.records);
        if (out.best_epoch >= 0)
            std::printf(", best validation %.4f at epoch %d", out.best_validation,
                        out.best_epoch);
        std::printf("\n");
    });

    auto* adapt = app.add_subcommand("adapt", "run one adaptation strategy on test tasks");
    auto adapt_c = add_common_flags(adapt);
    auto adapt_strategy = std::make_shared<std::string>();
    auto adapt_pre = std::make_shared<std::string>();
    auto adapt_meta = std::make_shared<std::string>();
    adapt->add_option("--strategy", *adapt_strategy, "one of A, B, C, D")->required();
    adapt->add_option("--pretrained", *adapt_pre,
                      "pretrained checkpoint (default: <out>/pretrained.ckpt)");
    adapt->add_option("--meta", *adapt_meta,
                      "meta-trained checkpoint (default: <out>/meta_trained.ckpt)");
    adapt->callback([adapt_c, adapt_strategy, adapt_pre, adapt_meta] {
        const auto cfg = resolve_config(*adapt_c);
        if (adapt_strategy->size() != 1)
            throw fsmt::ConfigError("adapt: --strategy takes a single letter A, B, C, or D");
        const auto out =
            fsmt::cmd_adapt(cfg, adapt_strategy->front(), *adapt_pre, *adapt_meta);
        std::printf("%s", out.table.c_str());
        std::printf("wrote %s\n", out.csv_file.c_str());
    });

    auto* compare =
        app.add_subcommand("compare", "run several adaptation strategies side by side");
    auto compare_c = add_common_flags(compare);
    auto compare_strategies = std::make_shared<std::string>();
    auto compare_pre = std::make_shared<std::string>();
    auto compare_meta = std::make_shared<std::string>();
    compare->add_option("--strategies", *compare_strategies,
                        "letters out of ABCD (default: from the config)");
    compare->add_option("--pretrained", *compare_pre,
                        "pretrained checkpoint (default: <out>/pretrained.ckpt)");
    compare->add_option("--meta", *compare_meta,
                        "meta-trained checkpoint (default: <out>/meta_trained.ckpt)");
    compare->callback([compare_c, compare_strategies, compare_pre, compare_meta] {
        const auto cfg = resolve_config(*compare_c);
        const auto out =
            fsmt::cmd_compare(cfg, *compare_pre, *compare_meta, *compare_strategies);
        std::printf("%s", out.table.c_str());
        std::printf("wrote %s\n", out.csv_file.c_str());
    });

    auto* sweep = app.add_subcommand(
        "sweep", "adapted score versus support or query size, CSV plus SVG plot");
    auto sweep_c = add_common_flags(sweep);
    auto sweep_pre = std::make_shared<std::string>();
    sweep->add_option("--pretrained", *sweep_pre,
                      "pretrained checkpoint (default: <out>/pretrained.ckpt)");
    sweep->callback([sweep_c, sweep_pre] {
        const auto cfg = resolve_config(*sweep_c);
        const auto out = fsmt::cmd_sweep(cfg, *sweep_pre);
        std::printf("wrote %s and %s (%zu points, %zu rows)\n", out.csv_file.c_str(),
                    out.svg_file.c_str(), out.result.points.size(), out.result.rows.size());
    });

    auto* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference audit of the analytic gradients");
    auto gradcheck_c = add_common_flags(gradcheck);
    auto corrupt = std::make_shared<bool>(false);
    gradcheck->add_flag("--corrupt", *corrupt,
                        "falsify one analytic value to prove the check bites");
    gradcheck->callback([gradcheck_c, corrupt] {
        const auto cfg = resolve_config(*gradcheck_c);
        const auto out = fsmt::cmd_gradcheck(cfg, *corrupt);
        std::printf("checked %d coordinates, max relative error %.3g; report: %s\n",
                    out.checked, out.max_rel_err, out.report_file.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(fsmt::ExitCode::Config);
    } catch (const fsmt::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    }
    return 0;
}

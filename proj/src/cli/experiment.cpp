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
#include "fsmt/cli/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fsmt/autodiff/gradcheck.hpp"
#include "fsmt/model/checkpoint.hpp"
#include "fsmt/model/transformer.hpp"
#include "fsmt/optim/optimizers.hpp"
#include "fsmt/text/synth.hpp"
#include "json.hpp"

namespace fsmt {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void reject_unknown_keys(const json& j, const char* section,
                         const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (allowed.find(it.key()) == allowed.end())
            throw ConfigError(std::string("config: unknown key '") + it.key() + "' in " +
                              section);
}

template <typename V>
V get_or(const json& j, const char* key, V fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<V>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

ParameterScope parse_scope(const std::string& name, const char* key) {
    if (name == "adapters") return ParameterScope::AdaptersOnly;
    if (name == "all") return ParameterScope::AllParameters;
    throw ConfigError(std::string("config: ") + key + " must be \"adapters\" or \"all\", got \"" +
                      name + "\"");
}

const char* scope_name(ParameterScope scope) {
    return scope == ParameterScope::AdaptersOnly ? "adapters" : "all";
}

MetaAlgorithm parse_algorithm(const std::string& name) {
    if (name == "fomaml") return MetaAlgorithm::FoMAML;
    if (name == "reptile") return MetaAlgorithm::Reptile;
    throw ConfigError("config: meta.algorithm must be \"fomaml\" or \"reptile\", got \"" +
                      name + "\"");
}

const char* algorithm_name(MetaAlgorithm a) {
    return a == MetaAlgorithm::FoMAML ? "fomaml" : "reptile";
}

Strategy strategy_from_letter(char c) {
    switch (c) {
        case 'A': return Strategy::NoFineTune;
        case 'B': return Strategy::FineTuneOnTask;
        case 'C': return Strategy::FineTuneOnMetaTrainPool;
        case 'D': return Strategy::MetaMT;
        default: break;
    }
    throw ConfigError(std::string("config: unknown strategy letter '") + c +
                      "' (expected A, B, C, or D)");
}

std::vector<Strategy> parse_strategies(const std::string& letters) {
    if (letters.empty()) throw ConfigError("config: strategies must not be empty");
    std::vector<Strategy> out;
    std::set<char> seen;
    for (char c : letters) {
        if (!seen.insert(c).second)
            throw ConfigError(std::string("config: duplicate strategy letter '") + c + "'");
        out.push_back(strategy_from_letter(c));
    }
    return out;
}

std::string sanitize_id(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

std::string path_under(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
    if (!out) throw DataError("cannot write " + path);
}

std::string write_resolved_config(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const std::string path = path_under(cfg.out_dir, "resolved_config.json");
    write_text_file(path, resolved_config_string(cfg));
    return path;
}

std::vector<ParallelCorpus> select_domains(const Materialized& m,
                                           const std::vector<std::string>& names,
                                           const char* what) {
    if (names.empty()) return m.domains;
    std::vector<ParallelCorpus> out;
    for (const auto& name : names) {
        bool found = false;
        for (const auto& d : m.domains)
            if (d.domain_id == name) {
                out.push_back(d);
                found = true;
            }
        if (!found)
            throw ConfigError(std::string("config: unknown domain '") + name + "' in " + what);
    }
    return out;
}

SplitSpec split_from(const ExperimentConfig& cfg) {
    SplitSpec split;
    split.train_tasks_per_domain = cfg.train_tasks_per_domain;
    split.validation_tasks_per_domain = cfg.validation_tasks_per_domain;
    split.test_tasks_per_domain = cfg.test_tasks_per_domain;
    split.held_out_domains = cfg.held_out_domains;
    return split;
}

TaskBudgets budgets_from(const ExperimentConfig& cfg) {
    return TaskBudgets{cfg.support_words, cfg.query_words};
}

ModelParameters<float> load_compatible_checkpoint(const std::string& path,
                                                  const Materialized& m) {
    ModelParameters<float> model = load_checkpoint<float>(path);
    if (model.config.vocab_size != m.vocab.size())
        throw ConfigError("checkpoint " + path + " was built for vocabulary size " +
                          std::to_string(model.config.vocab_size) + ", corpus gives " +
                          std::to_string(m.vocab.size()));
    return model;
}

MetaTrainConfig meta_config_for_run(const ExperimentConfig& cfg) {
    MetaTrainConfig meta = cfg.meta;
    if (cfg.deterministic) meta.record_wall_time = false;
    return meta;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (corpus_domains.empty())
        throw ConfigError("config: corpus.domains must list at least one domain");
    std::set<std::string> ids;
    for (const auto& d : corpus_domains) {
        const bool file_based = !d.source_path.empty() || !d.target_path.empty();
        if (d.synthetic() == file_based)
            throw ConfigError("config: each domain needs either a generator or "
                              "source/target paths, not both");
        if (file_based && (d.source_path.empty() || d.target_path.empty() || d.domain_id.empty()))
            throw ConfigError("config: file domains need source, target, and domain_id");
        if (d.synthetic() && d.pairs < 1)
            throw ConfigError("config: domain pairs must be >= 1");
        if (!ids.insert(d.id()).second)
            throw ConfigError("config: duplicate domain id '" + d.id() + "'");
    }
    if (tokenizer_mode != "word" && tokenizer_mode != "bpe")
        throw ConfigError("config: tokenizer.mode must be \"word\" or \"bpe\"");
    if (bpe_merges < 0) throw ConfigError("config: tokenizer.bpe_merges must be >= 0");
    {
        TransformerConfig probe = model;
        probe.vocab_size = 8;  // derived later; validate the rest now
        probe.validate();
    }
    if (support_words < 1 || query_words < 1)
        throw ConfigError("config: task budgets must be >= 1");
    if (train_tasks_per_domain < 0 || validation_tasks_per_domain < 0 ||
        test_tasks_per_domain < 0)
        throw ConfigError("config: task counts must be >= 0");
    if (pretrain_epochs < 0) throw ConfigError("config: pretrain.epochs must be >= 0");
    if (pretrain_batch_sentences < 1)
        throw ConfigError("config: pretrain.batch_sentences must be >= 1");
    if (!(pretrain_peak_lr > 0.0)) throw ConfigError("config: pretrain.peak_lr must be > 0");
    if (pretrain_warmup_steps < 1)
        throw ConfigError("config: pretrain.warmup_steps must be >= 1");
    meta.validate();
    parse_strategies(strategies);
    if (replicates < 1) throw ConfigError("config: adapt.replicates must be >= 1");
    if (finetune.epochs < 0) throw ConfigError("config: adapt.epochs must be >= 0");
    if (!(finetune.alpha > 0.0)) throw ConfigError("config: adapt.alpha must be > 0");
    if (pool_epochs < 0) throw ConfigError("config: adapt.pool_epochs must be >= 0");
    if (!(pool_peak_lr > 0.0)) throw ConfigError("config: adapt.pool_peak_lr must be > 0");
    if (pool_warmup_steps < 1)
        throw ConfigError("config: adapt.pool_warmup_steps must be >= 1");
    if (pool_batch_sentences < 1)
        throw ConfigError("config: adapt.pool_batch_sentences must be >= 1");
    eval.validate();
    if (sweep_axis != "support" && sweep_axis != "query")
        throw ConfigError("config: sweep.axis must be \"support\" or \"query\"");
    if (out_dir.empty()) throw ConfigError("config: out must not be empty");
}

ExperimentConfig experiment_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(j, "the top level",
                        {"corpus", "tokenizer", "model", "tasks", "pretrain", "meta", "adapt",
                         "eval", "sweep", "seed", "out", "deterministic"});

    ExperimentConfig cfg;

    const json corpus = j.value("corpus", json::object());
    reject_unknown_keys(corpus, "corpus", {"domains", "language_seed", "n_types", "seed"});
    cfg.language_seed = get_or<std::uint64_t>(corpus, "language_seed", cfg.language_seed);
    cfg.n_types = get_or<int>(corpus, "n_types", cfg.n_types);
    cfg.corpus_seed = get_or<std::uint64_t>(corpus, "seed", cfg.corpus_seed);
    if (corpus.contains("domains")) {
        if (!corpus.at("domains").is_array())
            throw ConfigError("config: corpus.domains must be an array");
        for (const auto& dj : corpus.at("domains")) {
            reject_unknown_keys(dj, "a corpus domain",
                                {"generator", "pairs", "source", "target", "domain_id"});
            DomainSpec d;
            d.generator = get_or<std::string>(dj, "generator", "");
            d.pairs = get_or<int>(dj, "pairs", d.pairs);
            d.source_path = get_or<std::string>(dj, "source", "");
            d.target_path = get_or<std::string>(dj, "target", "");
            d.domain_id = get_or<std::string>(dj, "domain_id", "");
            if (!d.synthetic() && dj.contains("pairs"))
                throw ConfigError("config: 'pairs' is only valid for synthetic domains");
            cfg.corpus_domains.push_back(std::move(d));
        }
    }

    const json tok = j.value("tokenizer", json::object());
    reject_unknown_keys(tok, "tokenizer", {"mode", "bpe_merges", "max_types"});
    cfg.tokenizer_mode = get_or<std::string>(tok, "mode", cfg.tokenizer_mode);
    cfg.bpe_merges = get_or<int>(tok, "bpe_merges", cfg.bpe_merges);
    cfg.max_types = get_or<int>(tok, "max_types", cfg.max_types);

    const json model = j.value("model", json::object());
    if (model.contains("vocab_size"))
        throw ConfigError("config: model.vocab_size is derived from the corpus; remove it");
    reject_unknown_keys(model, "model",
                        {"encoder_blocks", "decoder_blocks", "model_dim", "ffn_dim", "heads",
                         "dropout_rate", "adapter_hidden", "max_positions"});
    cfg.model.encoder_blocks = get_or<int>(model, "encoder_blocks", cfg.model.encoder_blocks);
    cfg.model.decoder_blocks = get_or<int>(model, "decoder_blocks", cfg.model.decoder_blocks);
    cfg.model.model_dim = get_or<int>(model, "model_dim", cfg.model.model_dim);
    cfg.model.ffn_dim = get_or<int>(model, "ffn_dim", cfg.model.ffn_dim);
    cfg.model.heads = get_or<int>(model, "heads", cfg.model.heads);
    cfg.model.dropout_rate = get_or<double>(model, "dropout_rate", cfg.model.dropout_rate);
    cfg.model.adapter_hidden = get_or<int>(model, "adapter_hidden", cfg.model.adapter_hidden);
    cfg.model.max_positions = get_or<int>(model, "max_positions", cfg.model.max_positions);

    const json tasks = j.value("tasks", json::object());
    reject_unknown_keys(tasks, "tasks",
                        {"support_words", "query_words", "train_tasks_per_domain",
                         "validation_tasks_per_domain", "test_tasks_per_domain", "domains",
                         "held_out_domains"});
    cfg.support_words = get_or<long>(tasks, "support_words", cfg.support_words);
    cfg.query_words = get_or<long>(tasks, "query_words", cfg.query_words);
    cfg.train_tasks_per_domain =
        get_or<int>(tasks, "train_tasks_per_domain", cfg.train_tasks_per_domain);
    cfg.validation_tasks_per_domain =
        get_or<int>(tasks, "validation_tasks_per_domain", cfg.validation_tasks_per_domain);
    cfg.test_tasks_per_domain =
        get_or<int>(tasks, "test_tasks_per_domain", cfg.test_tasks_per_domain);
    cfg.task_domains = get_or<std::vector<std::string>>(tasks, "domains", {});
    cfg.held_out_domains = get_or<std::vector<std::string>>(tasks, "held_out_domains", {});

    const json pre = j.value("pretrain", json::object());
    reject_unknown_keys(pre, "pretrain",
                        {"domains", "epochs", "batch_sentences", "peak_lr", "warmup_steps"});
    cfg.pretrain_domains = get_or<std::vector<std::string>>(pre, "domains", {});
    cfg.pretrain_epochs = get_or<int>(pre, "epochs", cfg.pretrain_epochs);
    cfg.pretrain_batch_sentences =
        get_or<int>(pre, "batch_sentences", cfg.pretrain_batch_sentences);
    cfg.pretrain_peak_lr = get_or<double>(pre, "peak_lr", cfg.pretrain_peak_lr);
    cfg.pretrain_warmup_steps = get_or<int>(pre, "warmup_steps", cfg.pretrain_warmup_steps);

    const json meta = j.value("meta", json::object());
    reject_unknown_keys(meta, "meta",
                        {"algorithm", "inner_alpha", "inner_steps", "meta_lr",
                         "meta_batch_size", "scope", "epochs", "early_stop_patience"});
    cfg.meta.algorithm = parse_algorithm(
        get_or<std::string>(meta, "algorithm", algorithm_name(cfg.meta.algorithm)));
    cfg.meta.inner_alpha = get_or<double>(meta, "inner_alpha", cfg.meta.inner_alpha);
    cfg.meta.inner_steps = get_or<int>(meta, "inner_steps", cfg.meta.inner_steps);
    cfg.meta.meta_lr = get_or<double>(meta, "meta_lr", cfg.meta.meta_lr);
    cfg.meta.meta_batch_size = get_or<int>(meta, "meta_batch_size", cfg.meta.meta_batch_size);
    cfg.meta.scope =
        parse_scope(get_or<std::string>(meta, "scope", scope_name(cfg.meta.scope)), "meta.scope");
    cfg.meta.epochs = get_or<int>(meta, "epochs", cfg.meta.epochs);
    cfg.meta.early_stop_patience =
        get_or<int>(meta, "early_stop_patience", cfg.meta.early_stop_patience);

    const json adapt = j.value("adapt", json::object());
    reject_unknown_keys(adapt, "adapt",
                        {"alpha", "epochs", "scope", "strategies", "replicates", "pool_epochs",
                         "pool_peak_lr", "pool_warmup_steps", "pool_batch_sentences",
                         "pool_scope"});
    // The test-time rate defaults to the meta-training inner rate so B and D
    // run the same budget the initialization was optimized for.
    cfg.finetune.alpha = get_or<double>(adapt, "alpha", cfg.meta.inner_alpha);
    cfg.finetune.epochs = get_or<int>(adapt, "epochs", cfg.finetune.epochs);
    cfg.finetune.scope = parse_scope(
        get_or<std::string>(adapt, "scope", scope_name(cfg.finetune.scope)), "adapt.scope");
    cfg.strategies = get_or<std::string>(adapt, "strategies", cfg.strategies);
    cfg.replicates = get_or<int>(adapt, "replicates", cfg.replicates);
    cfg.pool_epochs = get_or<int>(adapt, "pool_epochs", cfg.pool_epochs);
    // Pool fine-tuning reuses the pretraining schedule at a tenth of the rate.
    cfg.pool_peak_lr = get_or<double>(adapt, "pool_peak_lr", cfg.pretrain_peak_lr / 10.0);
    cfg.pool_warmup_steps = get_or<int>(adapt, "pool_warmup_steps", cfg.pretrain_warmup_steps);
    cfg.pool_batch_sentences =
        get_or<int>(adapt, "pool_batch_sentences", cfg.pretrain_batch_sentences);
    cfg.pool_scope = parse_scope(
        get_or<std::string>(adapt, "pool_scope", scope_name(cfg.pool_scope)), "adapt.pool_scope");

    const json ev = j.value("eval", json::object());
    reject_unknown_keys(ev, "eval", {"beam_size", "max_len"});
    cfg.eval.beam_size = get_or<int>(ev, "beam_size", cfg.eval.beam_size);
    cfg.eval.max_len = get_or<int>(ev, "max_len", cfg.eval.max_len);

    const json sweep = j.value("sweep", json::object());
    reject_unknown_keys(sweep, "sweep",
                        {"axis", "sizes", "total_support_words", "train_tasks_per_domain",
                         "seeds"});
    cfg.sweep_axis = get_or<std::string>(sweep, "axis", cfg.sweep_axis);
    cfg.sweep_sizes = get_or<std::vector<long>>(sweep, "sizes", {});
    cfg.sweep_total_support_words =
        get_or<long>(sweep, "total_support_words", cfg.sweep_total_support_words);
    cfg.sweep_train_tasks_per_domain =
        get_or<int>(sweep, "train_tasks_per_domain", cfg.sweep_train_tasks_per_domain);
    cfg.sweep_seeds = get_or<std::vector<std::uint64_t>>(sweep, "seeds", cfg.sweep_seeds);

    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.out_dir = get_or<std::string>(j, "out", cfg.out_dir);
    cfg.deterministic = get_or<bool>(j, "deterministic", cfg.deterministic);

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return experiment_from_json_string(buffer.str());
}

std::string resolved_config_string(const ExperimentConfig& cfg) {
    json j;
    auto domains = json::array();
    for (const auto& d : cfg.corpus_domains) {
        json dj;
        if (d.synthetic()) {
            dj["generator"] = d.generator;
            dj["pairs"] = d.pairs;
        } else {
            dj["source"] = d.source_path;
            dj["target"] = d.target_path;
            dj["domain_id"] = d.domain_id;
        }
        domains.push_back(dj);
    }
    j["corpus"] = {{"domains", domains},
                   {"language_seed", cfg.language_seed},
                   {"n_types", cfg.n_types},
                   {"seed", cfg.corpus_seed}};
    j["tokenizer"] = {{"mode", cfg.tokenizer_mode},
                      {"bpe_merges", cfg.bpe_merges},
                      {"max_types", cfg.max_types}};
    j["model"] = {{"encoder_blocks", cfg.model.encoder_blocks},
                  {"decoder_blocks", cfg.model.decoder_blocks},
                  {"model_dim", cfg.model.model_dim},
                  {"ffn_dim", cfg.model.ffn_dim},
                  {"heads", cfg.model.heads},
                  {"dropout_rate", cfg.model.dropout_rate},
                  {"adapter_hidden", cfg.model.adapter_hidden},
                  {"max_positions", cfg.model.max_positions}};
    j["tasks"] = {{"support_words", cfg.support_words},
                  {"query_words", cfg.query_words},
                  {"train_tasks_per_domain", cfg.train_tasks_per_domain},
                  {"validation_tasks_per_domain", cfg.validation_tasks_per_domain},
                  {"test_tasks_per_domain", cfg.test_tasks_per_domain},
                  {"domains", cfg.task_domains},
                  {"held_out_domains", cfg.held_out_domains}};
    j["pretrain"] = {{"domains", cfg.pretrain_domains},
                     {"epochs", cfg.pretrain_epochs},
                     {"batch_sentences", cfg.pretrain_batch_sentences},
                     {"peak_lr", cfg.pretrain_peak_lr},
                     {"warmup_steps", cfg.pretrain_warmup_steps}};
    j["meta"] = {{"algorithm", algorithm_name(cfg.meta.algorithm)},
                 {"inner_alpha", cfg.meta.inner_alpha},
                 {"inner_steps", cfg.meta.inner_steps},
                 {"meta_lr", cfg.meta.meta_lr},
                 {"meta_batch_size", cfg.meta.meta_batch_size},
                 {"scope", scope_name(cfg.meta.scope)},
                 {"epochs", cfg.meta.epochs},
                 {"early_stop_patience", cfg.meta.early_stop_patience}};
    j["adapt"] = {{"alpha", cfg.finetune.alpha},
                  {"epochs", cfg.finetune.epochs},
                  {"scope", scope_name(cfg.finetune.scope)},
                  {"strategies", cfg.strategies},
                  {"replicates", cfg.replicates},
                  {"pool_epochs", cfg.pool_epochs},
                  {"pool_peak_lr", cfg.pool_peak_lr},
                  {"pool_warmup_steps", cfg.pool_warmup_steps},
                  {"pool_batch_sentences", cfg.pool_batch_sentences},
                  {"pool_scope", scope_name(cfg.pool_scope)}};
    j["eval"] = {{"beam_size", cfg.eval.beam_size}, {"max_len", cfg.eval.max_len}};
    j["sweep"] = {{"axis", cfg.sweep_axis},
                  {"sizes", cfg.sweep_sizes},
                  {"total_support_words", cfg.sweep_total_support_words},
                  {"train_tasks_per_domain", cfg.sweep_train_tasks_per_domain},
                  {"seeds", cfg.sweep_seeds}};
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    j["deterministic"] = cfg.deterministic;
    return j.dump(2) + "\n";
}

Materialized materialize(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RawCorpus> raws;
    for (const auto& spec : cfg.corpus_domains) {
        if (spec.synthetic()) {
            SyntheticDomainSpec s;
            s.generator = spec.generator;
            s.language_seed = cfg.language_seed;
            s.n_types = cfg.n_types;
            raws.push_back(
                synth_domain(s, spec.pairs, derive_seed(cfg.corpus_seed, "domain:" + spec.id())));
        } else {
            raws.push_back(load_parallel(spec.source_path, spec.target_path, spec.domain_id));
        }
    }
    const auto build_vocab = [&]() {
        if (cfg.tokenizer_mode == "word") return build_word_vocab(raws, cfg.max_types);
        RawCorpus joint;
        joint.domain_id = "joint";
        for (const auto& raw : raws)
            joint.pairs.insert(joint.pairs.end(), raw.pairs.begin(), raw.pairs.end());
        return learn_bpe(joint, cfg.bpe_merges);
    };
    Vocabulary vocab = build_vocab();
    Materialized m{std::move(raws), std::move(vocab), {}};
    for (const auto& raw : m.raws) m.domains.push_back(tokenize_corpus(raw, m.vocab));
    return m;
}

PrepareOutputs cmd_prepare(const ExperimentConfig& cfg) {
    const Materialized m = materialize(cfg);
    PrepareOutputs out;
    out.resolved_config_file = write_resolved_config(cfg);
    const std::string corpus_dir = path_under(cfg.out_dir, "corpus");
    fs::create_directories(corpus_dir);
    for (const auto& raw : m.raws) {
        const std::string stem = sanitize_id(raw.domain_id);
        std::string src, tgt;
        for (const auto& pair : raw.pairs) {
            src += pair.source + "\n";
            tgt += pair.target + "\n";
        }
        const std::string src_path = path_under(corpus_dir, stem + ".src.txt");
        const std::string tgt_path = path_under(corpus_dir, stem + ".tgt.txt");
        write_text_file(src_path, src);
        write_text_file(tgt_path, tgt);
        out.corpus_files.push_back(src_path);
        out.corpus_files.push_back(tgt_path);
    }
    out.vocab_file = path_under(cfg.out_dir, "vocab.json");
    m.vocab.save(out.vocab_file);
    out.vocab_size = m.vocab.size();
    return out;
}

MakeTasksOutputs cmd_make_tasks(const ExperimentConfig& cfg) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.task_domains, "tasks.domains");
    const MetaDataset ds =
        build_meta_dataset(corpora, split_from(cfg), budgets_from(cfg),
                           derive_seed(cfg.seed, "tasks"));
    write_resolved_config(cfg);
    MakeTasksOutputs out;
    out.manifest_file = path_under(cfg.out_dir, "tasks.json");
    save_manifest(ds, out.manifest_file);
    out.train_tasks = static_cast<long>(ds.meta_train.size());
    out.validation_tasks = static_cast<long>(ds.meta_validation.size());
    out.test_tasks = static_cast<long>(ds.meta_test.size());
    return out;
}

PretrainOutputs cmd_pretrain(const ExperimentConfig& cfg, const std::string& resume_from) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.pretrain_domains, "pretrain.domains");
    std::vector<SentencePair> pairs;
    for (const auto& d : corpora) pairs.insert(pairs.end(), d.pairs.begin(), d.pairs.end());
    if (pairs.empty()) throw DataError("pretrain: no sentence pairs in the selected domains");

    TransformerConfig model_cfg = cfg.model;
    model_cfg.vocab_size = m.vocab.size();

    // Adapters must still be identity maps in the pretrained checkpoint, so
    // that zero-ablating a later meta-trained model recovers this model's
    // behavior exactly. Training therefore runs on the adapter-free
    // equivalent; identity adapters are re-attached (same init streams, so
    // the result matches a fresh full-config init) at every save.
    TransformerConfig plain_cfg = model_cfg;
    plain_cfg.adapter_hidden = 0;
    const std::uint64_t init_seed = derive_seed(cfg.seed, "init");

    ModelParameters<float> model = init_model<float>(plain_cfg, init_seed);
    if (!resume_from.empty()) {
        const ModelParameters<float> loaded = load_compatible_checkpoint(resume_from, m);
        if (config_to_json_string(loaded.config) != config_to_json_string(model_cfg))
            throw ConfigError("checkpoint " + resume_from +
                              " does not match the configured model");
        if (loaded.kind != "initialized" && loaded.kind != "pretrained")
            throw ConfigError("checkpoint " + resume_from + " is " + loaded.kind +
                              "; pretraining resumes only pretraining checkpoints");
        for (auto& e : model.entries) e.value = loaded.at(e.name);
        model.step = loaded.step;
        model.kind = loaded.kind;
    }

    const auto save = [&](const ModelParameters<float>& plain, const std::string& path) {
        if (model_cfg.adapter_hidden == 0) {
            save_checkpoint(plain, path);
            return;
        }
        ModelParameters<float> full = plain;
        attach_adapters(full, model_cfg.adapter_hidden, init_seed);
        save_checkpoint(full, path);
    };

    write_resolved_config(cfg);
    PretrainOutputs out;
    out.checkpoint_file = path_under(cfg.out_dir, "pretrained.ckpt");
    out.log_file = path_under(cfg.out_dir, "pretrain_log.csv");
    // The pre-loop save makes a first-epoch failure leave a usable file; each
    // later save replaces it with the newest completed epoch.
    save(model, out.checkpoint_file);

    const long steps_per_epoch =
        (static_cast<long>(pairs.size()) + cfg.pretrain_batch_sentences - 1) /
        cfg.pretrain_batch_sentences;
    const long completed_epochs = model.step / steps_per_epoch;

    TrainParams tp;
    tp.optimizer = OptimizerKind::Adam;
    tp.schedule = LrSchedule::inverse_sqrt_warmup(cfg.pretrain_peak_lr,
                                                  cfg.pretrain_warmup_steps);
    tp.epochs = 1;
    tp.batch_sentences = cfg.pretrain_batch_sentences;
    tp.scope = ParameterScope::AllParameters;

    for (int e = 0; e < cfg.pretrain_epochs; ++e) {
        const long absolute_epoch = completed_epochs + e;
        const TrainLog epoch_log = train_supervised(
            model, pairs, tp,
            derive_seed(cfg.seed, "pretrain-epoch:" + std::to_string(absolute_epoch)));
        out.log.steps.insert(out.log.steps.end(), epoch_log.steps.begin(),
                             epoch_log.steps.end());
        out.log.epoch_mean_loss.push_back(epoch_log.epoch_mean_loss.front());
        model.kind = "pretrained";
        save(model, out.checkpoint_file);
    }

    write_text_file(out.log_file, train_log_to_csv_string(out.log));
    out.final_step = model.step;
    return out;
}

MetaTrainOutputs cmd_meta_train(const ExperimentConfig& cfg,
                                const std::string& init_checkpoint) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.task_domains, "tasks.domains");
    const std::string init_path = init_checkpoint.empty()
                                      ? path_under(cfg.out_dir, "pretrained.ckpt")
                                      : init_checkpoint;
    ModelParameters<float> init = load_compatible_checkpoint(init_path, m);
    if (init.kind == "meta-trained")
        throw ConfigError("checkpoint " + init_path + " is already meta-trained");

    const MetaDataset ds = build_meta_dataset(corpora, split_from(cfg), budgets_from(cfg),
                                              derive_seed(cfg.seed, "tasks"));
    const auto result = meta_train(init, ds, meta_config_for_run(cfg),
                                   derive_seed(cfg.seed, "meta"));

    write_resolved_config(cfg);
    MetaTrainOutputs out;
    out.checkpoint_file = path_under(cfg.out_dir, "meta_trained.ckpt");
    out.log_file = path_under(cfg.out_dir, "meta_log.csv");
    save_checkpoint(result.params, out.checkpoint_file);
    save_meta_log(result.log, out.log_file);
    out.records = static_cast<long>(result.log.records.size());
    out.best_validation = result.log.best_validation_metric;
    out.best_epoch = result.log.best_epoch;
    out.meta_steps = result.params.meta_step;
    return out;
}

namespace {

CompareOutputs run_strategy_comparison(const ExperimentConfig& cfg,
                                       const std::string& pretrained_checkpoint,
                                       const std::string& meta_checkpoint,
                                       const std::string& letters,
                                       const std::string& file_prefix) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.task_domains, "tasks.domains");
    const auto strategies = parse_strategies(letters);
    const auto needs = [&](Strategy s) {
        return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
    };

    const std::string pre_path = pretrained_checkpoint.empty()
                                     ? path_under(cfg.out_dir, "pretrained.ckpt")
                                     : pretrained_checkpoint;
    const ModelParameters<float> pretrained = load_compatible_checkpoint(pre_path, m);
    if (pretrained.kind == "meta-trained")
        throw ConfigError("checkpoint " + pre_path +
                          " is meta-trained; pass it as the meta checkpoint instead");

    StrategyInputs<float> inputs;
    inputs.pretrained = &pretrained;

    ModelParameters<float> pool_tuned;
    if (needs(Strategy::FineTuneOnMetaTrainPool)) {
        const MetaDataset ds = build_meta_dataset(corpora, split_from(cfg), budgets_from(cfg),
                                                  derive_seed(cfg.seed, "tasks"));
        TrainParams tp;
        tp.optimizer = OptimizerKind::Adam;
        tp.schedule =
            LrSchedule::inverse_sqrt_warmup(cfg.pool_peak_lr, cfg.pool_warmup_steps);
        tp.epochs = cfg.pool_epochs;
        tp.batch_sentences = cfg.pool_batch_sentences;
        tp.scope = cfg.pool_scope;
        pool_tuned = finetune_on_pool(pretrained, ds.meta_train, tp,
                                      derive_seed(cfg.seed, "pool"));
        save_checkpoint(pool_tuned, path_under(cfg.out_dir, "pool_finetuned.ckpt"));
        inputs.pool_tuned = &pool_tuned;
        inputs.pool_tokens = pool_source_words(ds.meta_train);
    }

    ModelParameters<float> meta_trained;
    if (needs(Strategy::MetaMT)) {
        const std::string meta_path = meta_checkpoint.empty()
                                          ? path_under(cfg.out_dir, "meta_trained.ckpt")
                                          : meta_checkpoint;
        meta_trained = load_compatible_checkpoint(meta_path, m);
        inputs.meta_trained = &meta_trained;
    }

    std::vector<std::vector<Task>> replicate_sets;
    for (int r = 0; r < cfg.replicates; ++r) {
        MetaDataset ds =
            build_meta_dataset(corpora, split_from(cfg), budgets_from(cfg),
                               derive_seed(cfg.seed, "test-tasks:" + std::to_string(r)));
        replicate_sets.push_back(std::move(ds.meta_test));
    }

    const AdaptationReport report =
        run_comparison(inputs, replicate_sets, strategies, cfg.finetune, cfg.eval, m.vocab,
                       derive_seed(cfg.seed, "compare"));

    write_resolved_config(cfg);
    CompareOutputs out;
    out.report = report;
    out.table = report_to_table_string(report);
    out.csv_file = path_under(cfg.out_dir, file_prefix + ".csv");
    out.table_file = path_under(cfg.out_dir, file_prefix + ".txt");
    save_report_csv(report, out.csv_file);
    write_text_file(out.table_file, out.table);
    return out;
}

}  // namespace

CompareOutputs cmd_compare(const ExperimentConfig& cfg,
                           const std::string& pretrained_checkpoint,
                           const std::string& meta_checkpoint,
                           const std::string& strategies_override) {
    const std::string letters =
        strategies_override.empty() ? cfg.strategies : strategies_override;
    return run_strategy_comparison(cfg, pretrained_checkpoint, meta_checkpoint, letters,
                                   "compare_report");
}

CompareOutputs cmd_adapt(const ExperimentConfig& cfg, char strategy_letter,
                         const std::string& pretrained_checkpoint,
                         const std::string& meta_checkpoint) {
    return run_strategy_comparison(cfg, pretrained_checkpoint, meta_checkpoint,
                                   std::string(1, strategy_letter), "adapt_report");
}

SweepOutputs cmd_sweep(const ExperimentConfig& cfg,
                       const std::string& pretrained_checkpoint) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.task_domains, "tasks.domains");
    const std::string pre_path = pretrained_checkpoint.empty()
                                     ? path_under(cfg.out_dir, "pretrained.ckpt")
                                     : pretrained_checkpoint;
    const ModelParameters<float> pretrained = load_compatible_checkpoint(pre_path, m);
    if (pretrained.kind == "meta-trained")
        throw ConfigError("checkpoint " + pre_path + " is meta-trained; sweeps start from "
                          "the pretrained model");

    SweepConfig<float> sc;
    sc.domains = &corpora;
    sc.vocab = &m.vocab;
    sc.pretrained = &pretrained;
    sc.meta = meta_config_for_run(cfg);
    sc.finetune = cfg.finetune;
    sc.eval = cfg.eval;
    sc.held_out_domains = cfg.held_out_domains;
    sc.validation_tasks_per_domain = cfg.validation_tasks_per_domain;
    sc.test_tasks_per_domain = cfg.test_tasks_per_domain;
    sc.support_budget_words = cfg.support_words;
    sc.query_budget_words = cfg.query_words;
    sc.total_support_words = cfg.sweep_total_support_words;
    sc.train_tasks_per_domain = cfg.sweep_train_tasks_per_domain;
    sc.sizes = cfg.sweep_sizes;
    sc.seeds = cfg.sweep_seeds;

    SweepOutputs out;
    out.result = cfg.sweep_axis == "support" ? sweep_support(sc) : sweep_query(sc);

    write_resolved_config(cfg);
    out.csv_file = path_under(cfg.out_dir, "sweep.csv");
    out.svg_file = path_under(cfg.out_dir, "sweep.svg");
    save_sweep_csv(out.csv_file, out.result);
    write_text_file(out.svg_file,
                    sweep_to_svg_string(out.result, cfg.sweep_axis + " sweep"));
    return out;
}

GradcheckOutputs cmd_gradcheck(const ExperimentConfig& cfg, bool corrupt) {
    const Materialized m = materialize(cfg);
    const auto corpora = select_domains(m, cfg.task_domains, "tasks.domains");
    TransformerConfig model_cfg = cfg.model;
    model_cfg.vocab_size = m.vocab.size();
    auto model = init_model<double>(model_cfg, derive_seed(cfg.seed, "gradcheck-init"));

    std::vector<SentencePair> batch;
    for (const auto& pair : corpora.front().pairs) {
        batch.push_back(pair);
        if (batch.size() == 2) break;
    }
    if (batch.empty()) throw DataError("gradcheck: first domain has no sentence pairs");

    const auto view = partition_view(model, ParameterScope::AllParameters);
    const auto bundle = model_grad(model, batch, Mode::Eval, nullptr, view);

    std::vector<std::pair<std::string, Matrix<double>*>> arrays;
    for (auto& e : model.entries) arrays.push_back({e.name, &e.value});
    Rng pick_rng(derive_seed(cfg.seed, "gradcheck-pick"));
    const auto picks = pick_probe_indices(arrays, 64, pick_rng);

    std::vector<ProbeCoordinate<double>> coords;
    for (const auto& [mi, flat] : picks)
        coords.push_back({arrays[static_cast<std::size_t>(mi)].first,
                          arrays[static_cast<std::size_t>(mi)].second, flat,
                          bundle.grads[static_cast<std::size_t>(mi)].at_flat(flat)});
    if (corrupt && !coords.empty()) coords.front().analytic += 1.0;

    // Step 1e-5 keeps probes clear of ReLU kinks; roundoff in double stays
    // near 1e-11 absolute, far under the 1e-4 relative-error bar.
    const auto loss_fn = [&]() { return forward_loss(model, batch, Mode::Eval, nullptr); };
    const auto report = check_gradients(loss_fn, coords, 1e-5);

    std::string text = "gradient check: central finite differences, eps 1e-5\n";
    char line[192];
    for (const auto& c : coords) {
        std::snprintf(line, sizeof(line), "  %s[%zu] analytic=%.9g\n", c.name.c_str(), c.flat,
                      c.analytic);
        text += line;
    }
    std::snprintf(line, sizeof(line),
                  "checked %d coordinates, max relative error %.3g at %s[%zu]\n",
                  report.checked, static_cast<double>(report.max_rel_err),
                  report.worst_name.c_str(), report.worst_flat);
    text += line;
    const bool passed = report.max_rel_err < 1e-4;
    text += passed ? "status: pass\n" : "status: FAIL\n";

    write_resolved_config(cfg);
    GradcheckOutputs out;
    out.report_file = path_under(cfg.out_dir, "gradcheck_report.txt");
    write_text_file(out.report_file, text);
    out.max_rel_err = static_cast<double>(report.max_rel_err);
    out.checked = report.checked;
    if (!passed)
        throw NumericalError("gradient check failed: max relative error " +
                             std::to_string(out.max_rel_err) + " at " + report.worst_name);
    return out;
}

}  // namespace fsmt

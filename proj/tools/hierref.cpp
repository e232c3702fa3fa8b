// hierref: command-line front end for dataset generation, training,
// evaluation, language analysis and experiment sweeps.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hierref/agents.hpp"
#include "hierref/experiment.hpp"
#include "hierref/figures.hpp"
#include "hierref/metrics.hpp"

namespace fs = std::filesystem;
using namespace hierref;

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Config keys exposed as --flags on every experiment-style subcommand.
const std::vector<std::string> kConfigKeys{
    "n", "k", "vocab_factor", "distractor_mode", "zero_shot_modes", "seeds", "epochs",
    "batch_size", "learning_rate", "embed_dim", "hidden_dim", "max_len", "temperature_initial",
    "temperature_decay", "samples_per_level", "distractors", "zero_shot_fraction",
    "train_fraction", "metrics_split", "topsim_max_pairs", "bootstrap_seed", "out"};

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

struct ConfigArgs {
    std::string config_file;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;
    bool force = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "key=value configuration file");
        for (const auto& key : kConfigKeys) {
            app->add_option("--" + dashed(key), flags[key], "config key " + key);
        }
        app->add_option("--seed", flags["seed"], "single seed (same as --seeds)");
        app->add_option("--set", sets, "extra key=value override, repeatable");
        app->add_flag("--force", force, "overwrite existing output");
    }

    ExperimentConfig build() const {
        ExperimentConfig cfg;
        try {
            if (!config_file.empty()) cfg = load_config(config_file, cfg);
            for (const auto& [key, value] : flags) {
                if (!value.empty()) cfg.set(key, value);
            }
            for (const auto& kv : sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        } catch (const std::runtime_error& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }
};

void require_fresh(const fs::path& path, bool force) {
    if (fs::exists(path) && !force) {
        throw OutputExistsError(path.string() + " already exists; pass --force to overwrite");
    }
}

void print_epoch(const EpochStats& s, int total) {
    if ((s.epoch + 1) % 10 != 0 && s.epoch + 1 != total && s.epoch != 0) return;
    std::cerr << "epoch " << s.epoch + 1 << "/" << total << " tau " << s.temperature
              << " train_loss " << s.train_loss << " train_acc " << s.train_accuracy
              << " val_acc " << s.validation_accuracy << '\n';
}

int cmd_gen_data(const ConfigArgs& args) {
    const auto cfg = args.build();
    fs::create_directories(cfg.out);
    for (auto mode : cfg.zero_shot_modes) {
        for (auto seed : cfg.seeds) {
            const auto path = cfg.out / ("dataset-" + to_string(mode) + "-seed-" +
                                         std::to_string(seed) + ".txt");
            require_fresh(path, args.force);
            const auto data = generate(cfg.gen_config(seed), mode);
            save_dataset(data, path);
            std::cout << path.string() << ": train " << data.train.size() << " validation "
                      << data.validation.size() << " zeroshot_objects "
                      << data.zeroshot_objects.size() << " zeroshot_abstractions "
                      << data.zeroshot_abstractions.size() << '\n';
        }
    }
    return 0;
}

int cmd_train(const ConfigArgs& args, const std::string& data_file) {
    const auto cfg = args.build();
    const auto seed = cfg.seeds.front();
    if (fs::exists(cfg.out) && !fs::is_empty(cfg.out) && !args.force) {
        throw OutputExistsError(cfg.out.string() + " already exists; pass --force to overwrite");
    }
    fs::create_directories(cfg.out);
    DatasetSplits data;
    if (data_file.empty()) {
        data = generate(cfg.gen_config(seed), cfg.zero_shot_modes.front());
        save_dataset(data, cfg.out / "dataset.txt");
    } else {
        data = load_dataset(data_file);
    }
    auto game = cfg.game_config(seed);
    game.n = data.n;
    game.k = data.k;
    auto result = train(data, game, [&](const EpochStats& s) { print_epoch(s, game.epochs); });
    save_model(result.model, cfg.out / "model.ckpt", game.epochs);
    write_file(cfg.out / "history.csv", history_csv(result.history));
    write_file(cfg.out / "config.txt", cfg.to_text());
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        std::cout << "train_accuracy=" << last.train_accuracy
                  << " validation_accuracy=" << last.validation_accuracy << '\n';
    }
    std::cout << "model written to " << (cfg.out / "model.ckpt").string() << '\n';
    return 0;
}

std::vector<Split> parse_splits(const std::vector<std::string>& names) {
    std::vector<Split> out;
    for (const auto& n : names) {
        try {
            out.push_back(parse_split(n));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) {
        out = {Split::Train, Split::Validation, Split::ZeroShotObjects, Split::ZeroShotAbstractions};
    }
    return out;
}

int cmd_eval(const std::string& model_file, const std::string& data_file,
             const std::vector<std::string>& split_names) {
    auto model = load_model(model_file);
    const auto data = load_dataset(data_file);
    std::cout << "split,samples,accuracy,loss\n";
    for (auto split : parse_splits(split_names)) {
        const auto& samples = data.split(split);
        if (samples.empty()) continue;
        const auto r = evaluate_split(model, samples);
        std::cout << to_string(split) << ',' << samples.size() << ',' << r.accuracy << ',' << r.loss
                  << '\n';
    }
    return 0;
}

int cmd_metrics(const std::string& corpus_file, const std::string& out_dir, std::size_t max_pairs,
                std::uint64_t seed, bool force) {
    const auto corpus = load_corpus(corpus_file);
    TopsimOptions topsim;
    topsim.max_pairs = max_pairs;
    topsim.seed = seed;
    const auto report = compute_metrics(corpus, topsim);
    std::cout << metrics_to_text(report);
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        require_fresh(dir / "metrics.txt", force);
        fs::create_directories(dir);
        write_file(dir / "metrics.txt", metrics_to_text(report));
        write_file(dir / "metrics.json", metrics_to_json(report));
        write_file(dir / "metrics_per_level.csv", per_level_csv(report));
        write_file(dir / "symbol_occurrence.csv", symbol_occurrence_csv(report.symbol_occurrence));
    }
    return 0;
}

struct DumpArgs {
    std::string model;
    std::string data;
    std::string split = "train";
    std::string corpus;
    std::string output;
    std::string concept_key;
    std::string object;
    std::size_t count = 20;
    std::uint64_t seed = 0;
    bool force = false;
};

int cmd_dump(const DumpArgs& a) {
    Corpus corpus;
    if (!a.corpus.empty()) {
        corpus = load_corpus(a.corpus);
    } else {
        if (a.model.empty() || a.data.empty()) {
            throw UsageError("dump needs --corpus, or --model together with --data");
        }
        auto model = load_model(a.model);
        const auto data = load_dataset(a.data);
        Split split;
        try {
            split = parse_split(a.split);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        const auto& samples = data.split(split);
        if (samples.empty()) throw std::runtime_error("split " + a.split + " is empty");
        corpus = dump_corpus(model, samples);
    }
    if (!a.output.empty()) {
        require_fresh(a.output, a.force);
        save_corpus(corpus, a.output);
        std::cerr << corpus.size() << " records written to " << a.output << '\n';
    }
    if (!a.concept_key.empty()) {
        ConceptKey key;
        try {
            key = ConceptKey::parse(a.concept_key);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        std::cout << qualitative_by_concept(corpus, key, a.count, a.seed);
    } else if (!a.object.empty()) {
        ObjectVector o;
        try {
            o = parse_object(a.object);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        std::cout << qualitative_by_object(corpus, o);
    } else if (a.output.empty()) {
        std::cout << serialize_corpus(corpus);
    }
    return 0;
}

int cmd_ablate(const ConfigArgs& args, const std::string& unbalanced_run,
               const std::string& balanced_run, unsigned threads) {
    if (!unbalanced_run.empty() || !balanced_run.empty()) {
        if (unbalanced_run.empty() || balanced_run.empty()) {
            throw UsageError("--unbalanced-run and --balanced-run go together");
        }
        std::cout << ablation_csv(cross_sampling_ablation(unbalanced_run, balanced_run));
        return 0;
    }
    auto cfg = args.build();
    cfg.zero_shot_modes = {ZeroShotMode::Objects};
    const fs::path root = cfg.out;
    SweepOptions opts;
    opts.force = args.force;
    opts.threads = threads;
    opts.verbose = true;
    auto unbalanced = cfg;
    unbalanced.distractor_mode = DistractorMode::Unbalanced;
    unbalanced.out = root / "unbalanced";
    auto balanced = cfg;
    balanced.distractor_mode = DistractorMode::Balanced;
    balanced.out = root / "balanced";
    run_sweep(unbalanced, opts);
    run_sweep(balanced, opts);
    std::vector<AblationCell> cells;
    for (auto seed : cfg.seeds) {
        const auto part =
            cross_sampling_ablation(run_directory(unbalanced, ZeroShotMode::Objects, seed),
                                    run_directory(balanced, ZeroShotMode::Objects, seed));
        cells.insert(cells.end(), part.begin(), part.end());
    }
    const auto csv = ablation_csv(cells);
    write_file(root / "ablation.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_figures(const std::vector<std::string>& runs, const std::string& out, std::uint64_t seed) {
    std::vector<fs::path> dirs(runs.begin(), runs.end());
    FigureOptions opts;
    opts.bootstrap_seed = seed;
    const auto conditions = load_conditions(dirs);
    for (const auto& name : emit_figures(conditions, out, opts)) {
        std::cout << (fs::path(out) / name).string() << '\n';
    }
    return 0;
}

int cmd_sweep(const ConfigArgs& args, const std::string& preset_name, unsigned threads) {
    const auto base = args.build();
    std::vector<ExperimentConfig> conditions{base};
    if (!preset_name.empty()) {
        try {
            conditions = preset(preset_name, base);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    SweepOptions opts;
    opts.force = args.force;
    opts.threads = threads;
    opts.verbose = true;
    for (const auto& cfg : conditions) {
        std::cerr << "condition " << condition_name(cfg) << " -> " << cfg.out.string() << '\n';
        const auto runs = run_sweep(cfg, opts);
        std::cout << cfg.out.string() << ": " << runs.size() << " runs\n";
        for (const auto& r : runs) {
            std::cout << "  " << to_string(r.zero_shot_mode) << " seed " << r.seed;
            for (const auto& [split, res] : r.accuracy) {
                std::cout << ' ' << to_string(split) << '=' << res.accuracy;
            }
            if (r.metrics) std::cout << " nmi=" << r.metrics->entropy.nmi;
            std::cout << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical reference game: data, training and language analysis"};
    app.require_subcommand(1);

    ConfigArgs gen_args, train_args, ablate_args, sweep_args;
    auto* gen = app.add_subcommand("gen-data", "generate datasets for every seed and zero-shot mode");
    gen_args.attach(gen);

    auto* train_cmd = app.add_subcommand("train", "train one sender/receiver pair");
    train_args.attach(train_cmd);
    std::string train_data;
    train_cmd->add_option("--data", train_data, "dataset file (generated from the config if omitted)");

    auto* eval_cmd = app.add_subcommand("eval", "accuracy of a trained model per split");
    std::string eval_model, eval_data;
    std::vector<std::string> eval_splits;
    eval_cmd->add_option("--model", eval_model, "checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "dataset file")->required();
    eval_cmd->add_option("--split", eval_splits, "splits to score (default: all)");

    auto* metrics_cmd = app.add_subcommand("metrics", "language analysis of a corpus");
    std::string metrics_corpus, metrics_out;
    std::size_t max_pairs = 500'000;
    std::uint64_t metrics_seed = 0;
    bool metrics_force = false;
    metrics_cmd->add_option("--corpus", metrics_corpus, "corpus file")->required();
    metrics_cmd->add_option("--out", metrics_out, "directory for metrics files");
    metrics_cmd->add_option("--max-pairs", max_pairs, "topsim pair budget");
    metrics_cmd->add_option("--seed", metrics_seed, "topsim subsampling seed");
    metrics_cmd->add_flag("--force", metrics_force, "overwrite existing metrics files");

    auto* dump_cmd = app.add_subcommand("dump", "write a corpus or inspect messages qualitatively");
    DumpArgs dump;
    dump_cmd->add_option("--model", dump.model, "checkpoint");
    dump_cmd->add_option("--data", dump.data, "dataset file");
    dump_cmd->add_option("--split", dump.split, "split to dump");
    dump_cmd->add_option("--corpus", dump.corpus, "existing corpus file");
    dump_cmd->add_option("--output", dump.output, "write the corpus here");
    auto* by_concept = dump_cmd->add_option("--concept", dump.concept_key,
                                            "list instances of a concept, e.g. 4,_,_");
    dump_cmd->add_option("--object", dump.object, "list messages for one object, e.g. 1,2,2")
        ->excludes(by_concept);
    dump_cmd->add_option("--count", dump.count, "instances for --concept");
    dump_cmd->add_option("--seed", dump.seed, "selection seed for --concept");
    dump_cmd->add_flag("--force", dump.force, "overwrite --output");

    auto* ablate_cmd = app.add_subcommand("ablate", "cross-sampling ablation");
    ablate_args.attach(ablate_cmd);
    std::string unbalanced_run, balanced_run;
    unsigned ablate_threads = 0;
    ablate_cmd->add_option("--unbalanced-run", unbalanced_run, "existing unbalanced run directory");
    ablate_cmd->add_option("--balanced-run", balanced_run, "existing balanced run directory");
    ablate_cmd->add_option("--threads", ablate_threads, "parallel jobs (default HIERREF_THREADS)");

    auto* figures_cmd = app.add_subcommand("figures", "figure CSV and SVG files from runs");
    std::vector<std::string> figure_runs;
    std::string figure_out = "figures";
    std::uint64_t figure_seed = 0;
    figures_cmd->add_option("--runs", figure_runs, "experiment output directories")->required();
    figures_cmd->add_option("--out", figure_out, "figure directory");
    figures_cmd->add_option("--seed", figure_seed, "bootstrap seed");

    auto* sweep_cmd = app.add_subcommand("sweep", "all seeds and zero-shot modes of a condition");
    sweep_args.attach(sweep_cmd);
    std::string preset_name;
    unsigned sweep_threads = 0;
    sweep_cmd->add_option("--preset", preset_name, "desk, table1 or vocab-factors");
    sweep_cmd->add_option("--threads", sweep_threads, "parallel jobs (default HIERREF_THREADS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen_data(gen_args);
        if (*train_cmd) return cmd_train(train_args, train_data);
        if (*eval_cmd) return cmd_eval(eval_model, eval_data, eval_splits);
        if (*metrics_cmd) {
            return cmd_metrics(metrics_corpus, metrics_out, max_pairs, metrics_seed, metrics_force);
        }
        if (*dump_cmd) return cmd_dump(dump);
        if (*ablate_cmd) return cmd_ablate(ablate_args, unbalanced_run, balanced_run, ablate_threads);
        if (*figures_cmd) return cmd_figures(figure_runs, figure_out, figure_seed);
        if (*sweep_cmd) return cmd_sweep(sweep_args, preset_name, sweep_threads);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

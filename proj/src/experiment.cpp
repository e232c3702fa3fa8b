#include "hierref/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <openssl/evp.h>

#include "hierref/random.hpp"
#include "hierref/text.hpp"

namespace hierref {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F render) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += render(items[i]);
    }
    return out;
}

std::string normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

const std::vector<Split> kAllSplits{Split::Train, Split::Validation, Split::ZeroShotObjects,
                                    Split::ZeroShotAbstractions};

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const auto key = normalize_key(raw_key);
    const std::string value(text::trim(raw_value));
    auto as_int = [&] { return text::parse_int<int>(value); };
    auto as_u64 = [&] { return text::parse_int<std::uint64_t>(value); };
    auto as_double = [&] { return text::parse_double(value); };
    try {
        if (key == "n") n = as_int();
        else if (key == "k") k = as_int();
        else if (key == "vocab_factor") vocab_factor = as_int();
        else if (key == "distractor_mode") distractor_mode = parse_distractor_mode(value);
        else if (key == "zero_shot_modes" || key == "zero_shot_mode") {
            zero_shot_modes.clear();
            for (auto part : text::split(value, ',')) {
                zero_shot_modes.push_back(parse_zero_shot_mode(text::trim(part)));
            }
        } else if (key == "seeds" || key == "seed") {
            seeds.clear();
            for (auto part : text::split(value, ',')) {
                seeds.push_back(text::parse_int<std::uint64_t>(text::trim(part)));
            }
        } else if (key == "epochs") epochs = as_int();
        else if (key == "batch_size") batch_size = as_int();
        else if (key == "learning_rate") learning_rate = as_double();
        else if (key == "embed_dim") embed_dim = as_int();
        else if (key == "hidden_dim") hidden_dim = as_int();
        else if (key == "max_len") max_len = as_int();
        else if (key == "temperature_initial") temperature_initial = as_double();
        else if (key == "temperature_decay") temperature_decay = as_double();
        else if (key == "samples_per_level") samples_per_level = as_int();
        else if (key == "distractors") distractors = as_int();
        else if (key == "zero_shot_fraction") zero_shot_fraction = as_double();
        else if (key == "train_fraction") train_fraction = as_double();
        else if (key == "metrics_split") metrics_split = parse_split(value);
        else if (key == "topsim_max_pairs") topsim_max_pairs = text::parse_int<std::size_t>(value);
        else if (key == "bootstrap_seed") bootstrap_seed = as_u64();
        else if (key == "out") out = value;
        else throw std::invalid_argument("unknown config key '" + raw_key + "'");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        if (what.rfind("unknown config key", 0) == 0) throw;
        throw std::invalid_argument("config key '" + raw_key + "': " + what);
    }
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (zero_shot_modes.empty()) throw std::invalid_argument("config: no zero-shot mode selected");
    if (topsim_max_pairs < 1) throw std::invalid_argument("config: topsim_max_pairs must be >= 1");
    if (out.empty()) throw std::invalid_argument("config: output directory is empty");
    gen_config(seeds.front()).validate();
    game_config(seeds.front()).validate();
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "n=" << n << '\n'
       << "k=" << k << '\n'
       << "vocab_factor=" << vocab_factor << '\n'
       << "distractor_mode=" << to_string(distractor_mode) << '\n'
       << "zero_shot_modes="
       << join(zero_shot_modes, [](ZeroShotMode m) { return to_string(m); }) << '\n'
       << "seeds=" << join(seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
       << "epochs=" << epochs << '\n'
       << "batch_size=" << batch_size << '\n'
       << "learning_rate=" << fmt(learning_rate) << '\n'
       << "embed_dim=" << embed_dim << '\n'
       << "hidden_dim=" << hidden_dim << '\n'
       << "max_len=" << max_len << '\n'
       << "temperature_initial=" << fmt(temperature_initial) << '\n'
       << "temperature_decay=" << fmt(temperature_decay) << '\n'
       << "samples_per_level=" << samples_per_level << '\n'
       << "distractors=" << distractors << '\n'
       << "zero_shot_fraction=" << fmt(zero_shot_fraction) << '\n'
       << "train_fraction=" << fmt(train_fraction) << '\n'
       << "metrics_split=" << to_string(metrics_split) << '\n'
       << "topsim_max_pairs=" << topsim_max_pairs << '\n'
       << "bootstrap_seed=" << bootstrap_seed << '\n'
       << "out=" << out.string() << '\n';
    return os.str();
}

GenConfig ExperimentConfig::gen_config(std::uint64_t seed) const {
    GenConfig g;
    g.n = n;
    g.k = k;
    g.samples_per_object_per_level = samples_per_level;
    g.distractors_per_sample = distractors;
    g.distractor_mode = distractor_mode;
    g.zero_shot_object_fraction = zero_shot_fraction;
    g.train_fraction_of_rest = train_fraction;
    g.seed = seed;
    return g;
}

GameConfig ExperimentConfig::game_config(std::uint64_t seed) const {
    GameConfig g;
    g.n = n;
    g.k = k;
    g.max_len = max_len;
    g.vocab_factor = vocab_factor;
    g.embed_dim = embed_dim;
    g.hidden_dim = hidden_dim;
    g.epochs = epochs;
    g.batch_size = batch_size;
    g.learning_rate = learning_rate;
    g.temperature.initial = temperature_initial;
    g.temperature.decay = temperature_decay;
    g.seed = seed;
    return g;
}

ExperimentConfig parse_config(const std::string& contents, ExperimentConfig base) {
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = std::string_view(line).substr(0, line.find('#'));
        body = text::trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        }
        try {
            base.set(std::string(text::trim(body.substr(0, eq))),
                     std::string(text::trim(body.substr(eq + 1))));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
    return parse_config(read_file(path), std::move(base));
}

std::string condition_name(const ExperimentConfig& cfg) {
    return "n" + std::to_string(cfg.n) + "k" + std::to_string(cfg.k) + "-f" +
           std::to_string(cfg.vocab_factor) + "-" + to_string(cfg.distractor_mode);
}

std::vector<ExperimentConfig> preset(const std::string& name, const ExperimentConfig& base) {
    std::vector<std::pair<int, int>> grid;
    std::vector<int> factors{base.vocab_factor};
    std::vector<DistractorMode> modes{base.distractor_mode};
    if (name == "desk") {
        grid = {{3, 4}, {4, 4}};
    } else if (name == "table1") {
        grid = {{3, 4}, {3, 8}, {3, 16}, {4, 4}, {4, 8}, {5, 4}};
        std::cerr << "warning: the table1 preset includes D(3,16) and D(4,8); "
                     "these runs take hours each at full scale\n";
    } else if (name == "vocab-factors") {
        grid = {{4, 8}};
        factors = {1, 2, 3, 4};
        modes = {DistractorMode::Unbalanced, DistractorMode::Balanced};
        std::cerr << "warning: the vocab-factors preset trains D(4,8) eight times per seed\n";
    } else {
        throw std::invalid_argument("unknown preset '" + name +
                                    "' (expected desk, table1 or vocab-factors)");
    }
    std::vector<ExperimentConfig> out;
    for (auto [n, k] : grid) {
        for (int f : factors) {
            for (auto mode : modes) {
                ExperimentConfig c = base;
                c.n = n;
                c.k = k;
                c.vocab_factor = f;
                c.distractor_mode = mode;
                c.out = base.out / condition_name(c);
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::ostringstream os;
    os << "epoch,temperature,train_loss,train_accuracy,validation_loss,validation_accuracy\n";
    for (const auto& h : history) {
        os << h.epoch << ',' << fmt(h.temperature) << ',' << fmt(h.train_loss) << ','
           << fmt(h.train_accuracy) << ',' << fmt(h.validation_loss) << ','
           << fmt(h.validation_accuracy) << '\n';
    }
    return os.str();
}

std::vector<EpochStats> parse_history_csv(const std::string& contents) {
    std::istringstream in(contents);
    std::string line;
    std::getline(in, line);
    std::vector<EpochStats> out;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(line, ',');
        if (cols.size() != 6) throw std::runtime_error("history: expected 6 columns");
        EpochStats s;
        s.epoch = text::parse_int<int>(cols[0]);
        s.temperature = text::parse_double(cols[1]);
        s.train_loss = text::parse_double(cols[2]);
        s.train_accuracy = text::parse_double(cols[3]);
        s.validation_loss = text::parse_double(cols[4]);
        s.validation_accuracy = text::parse_double(cols[5]);
        out.push_back(s);
    }
    return out;
}

namespace {

std::string accuracy_csv(const std::map<Split, EvalResult>& acc) {
    std::ostringstream os;
    os << "split,accuracy,loss\n";
    for (auto split : kAllSplits) {
        const auto it = acc.find(split);
        if (it == acc.end()) continue;
        os << to_string(split) << ',' << fmt(it->second.accuracy) << ',' << fmt(it->second.loss)
           << '\n';
    }
    return os.str();
}

std::map<Split, EvalResult> parse_accuracy_csv(const std::string& contents) {
    std::istringstream in(contents);
    std::string line;
    std::getline(in, line);
    std::map<Split, EvalResult> out;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(line, ',');
        if (cols.size() != 3) throw std::runtime_error("accuracy: expected 3 columns");
        out[parse_split(cols[0])] = {text::parse_double(cols[1]), text::parse_double(cols[2])};
    }
    return out;
}

bool nonempty_directory(const fs::path& dir) {
    return fs::exists(dir) && fs::is_directory(dir) && !fs::is_empty(dir);
}

void prepare_directory(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_directory(dir)) {
        throw OutputExistsError(dir.string() + " exists and is not a directory");
    }
    if (nonempty_directory(dir)) {
        if (!force) {
            throw OutputExistsError(dir.string() + " already exists; pass --force to overwrite");
        }
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

std::string corpus_file(Split split) { return "corpus-" + to_string(split) + ".txt"; }

void write_manifest_file(const fs::path& dir, const ExperimentConfig& run_cfg, ZeroShotMode mode,
                         std::uint64_t seed) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name == "manifest.txt" || name == "FAILED") continue;
        files.push_back(name);
    }
    std::sort(files.begin(), files.end());
    std::ostringstream os;
    os << "format=hierref-run v1\n"
       << "seed=" << seed << '\n'
       << "zero_shot_mode=" << to_string(mode) << '\n';
    std::istringstream cfg_lines(run_cfg.to_text());
    std::string line;
    while (std::getline(cfg_lines, line)) os << "config." << line << '\n';
    for (const auto& f : files) os << "sha256." << f << '=' << sha256_hex(read_file(dir / f)) << '\n';
    write_file(dir / "manifest.txt", os.str());
}

}  // namespace

fs::path run_directory(const ExperimentConfig& cfg, ZeroShotMode mode, std::uint64_t seed) {
    return cfg.out / to_string(mode) / ("seed-" + std::to_string(seed));
}

RunArtifacts run_experiment(const ExperimentConfig& cfg, ZeroShotMode mode, std::uint64_t seed,
                            bool force, const EpochCallback& on_epoch) {
    cfg.validate();
    const auto dir = run_directory(cfg, mode, seed);
    prepare_directory(dir, force);

    ExperimentConfig run_cfg = cfg;
    run_cfg.seeds = {seed};
    run_cfg.zero_shot_modes = {mode};

    RunArtifacts art;
    art.dir = dir;
    art.zero_shot_mode = mode;
    art.seed = seed;
    art.n = cfg.n;
    art.k = cfg.k;
    art.vocab_factor = cfg.vocab_factor;
    art.distractor_mode = cfg.distractor_mode;

    std::string stage = "generate";
    try {
        write_file(dir / "config.txt", run_cfg.to_text());
        const auto dataset = generate(cfg.gen_config(seed), mode);
        save_dataset(dataset, dir / "dataset.txt");

        stage = "train";
        auto trained = train(dataset, cfg.game_config(seed), on_epoch);
        art.history = trained.history;
        write_file(dir / "history.csv", history_csv(trained.history));
        save_model(trained.model, dir / "model.ckpt", cfg.epochs);

        stage = "evaluate";
        for (auto split : kAllSplits) {
            const auto& samples = dataset.split(split);
            if (!samples.empty()) art.accuracy[split] = evaluate_split(trained.model, samples);
        }
        write_file(dir / "accuracy.csv", accuracy_csv(art.accuracy));

        stage = "dump";
        std::map<Split, Corpus> corpora;
        for (auto split : kAllSplits) {
            const auto& samples = dataset.split(split);
            if (samples.empty()) continue;
            corpora[split] = dump_corpus(trained.model, samples);
            save_corpus(corpora[split], dir / corpus_file(split));
        }

        stage = "metrics";
        const auto it = corpora.find(cfg.metrics_split);
        if (it == corpora.end()) {
            std::cerr << "warning: " << dir.string() << ": split " << to_string(cfg.metrics_split)
                      << " is empty; metrics skipped\n";
        } else {
            TopsimOptions topsim;
            topsim.max_pairs = cfg.topsim_max_pairs;
            topsim.seed = seed;
            art.metrics = compute_metrics(it->second, topsim);
            write_file(dir / "metrics.txt", metrics_to_text(*art.metrics));
            write_file(dir / "metrics.json", metrics_to_json(*art.metrics));
            write_file(dir / "metrics_per_level.csv", per_level_csv(*art.metrics));
            write_file(dir / "symbol_occurrence.csv",
                       symbol_occurrence_csv(art.metrics->symbol_occurrence));
        }

        stage = "persist";
        write_manifest_file(dir, run_cfg, mode, seed);
    } catch (const std::exception& e) {
        try {
            write_file(dir / "FAILED", "stage=" + stage + "\nerror=" + e.what() + "\n");
        } catch (...) {
        }
        throw ExperimentError(stage, dir.string() + ": " + e.what());
    }
    return art;
}

RunArtifacts load_run(const fs::path& dir) {
    if (fs::exists(dir / "FAILED")) {
        throw std::runtime_error(dir.string() + " is a failed run: " + read_file(dir / "FAILED"));
    }
    const auto cfg = load_config(dir / "config.txt");
    RunArtifacts art;
    art.dir = dir;
    art.zero_shot_mode = cfg.zero_shot_modes.front();
    art.seed = cfg.seeds.front();
    art.n = cfg.n;
    art.k = cfg.k;
    art.vocab_factor = cfg.vocab_factor;
    art.distractor_mode = cfg.distractor_mode;
    art.accuracy = parse_accuracy_csv(read_file(dir / "accuracy.csv"));
    art.history = parse_history_csv(read_file(dir / "history.csv"));
    if (fs::exists(dir / "metrics.json")) art.metrics = metrics_from_json(read_file(dir / "metrics.json"));
    return art;
}

std::vector<RunArtifacts> load_runs(const fs::path& out) {
    std::vector<RunArtifacts> runs;
    for (auto mode : {ZeroShotMode::Objects, ZeroShotMode::Abstractions}) {
        const auto mode_dir = out / to_string(mode);
        if (!fs::is_directory(mode_dir)) continue;
        for (const auto& entry : fs::directory_iterator(mode_dir)) {
            const auto& p = entry.path();
            if (!entry.is_directory() || p.filename().string().rfind("seed-", 0) != 0) continue;
            if (!fs::exists(p / "manifest.txt") || fs::exists(p / "FAILED")) {
                std::cerr << "warning: skipping incomplete run " << p.string() << '\n';
                continue;
            }
            runs.push_back(load_run(p));
        }
    }
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
        return std::pair(a.zero_shot_mode, a.seed) < std::pair(b.zero_shot_mode, b.seed);
    });
    return runs;
}

// ---------------------------------------------------------------------------
// Aggregation

Estimate bootstrap_ci(std::vector<double> values, std::uint64_t seed, int resamples, double level) {
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    if (values.empty()) throw std::invalid_argument("bootstrap of an empty sample");
    if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
    // Sorting first makes the interval independent of input order.
    std::sort(values.begin(), values.end());
    Estimate e;
    e.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(values.size());

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
        m = s / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(means.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const auto hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
    };
    const double alpha = (1.0 - level) / 2.0;
    e.ci_low = quantile(alpha);
    e.ci_high = quantile(1.0 - alpha);
    return e;
}

bool AggregateRow::operator<(const AggregateRow& o) const {
    return std::tie(zero_shot_mode, scope, level, metric) <
           std::tie(o.zero_shot_mode, o.scope, o.level, o.metric);
}

bool any_finite(const std::vector<double>& values) {
    return std::any_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<AggregateRow> aggregate(const std::vector<RunArtifacts>& runs, std::uint64_t seed) {
    using Key = std::tuple<std::string, std::string, int, std::string>;
    std::map<Key, std::vector<double>> samples;
    for (const auto& r : runs) {
        const auto mode = to_string(r.zero_shot_mode);
        for (const auto& [split, res] : r.accuracy) {
            samples[{mode, "accuracy", 0, to_string(split)}].push_back(res.accuracy);
        }
        if (!r.metrics) continue;
        const auto& m = *r.metrics;
        const std::vector<std::pair<std::string, double>> scalars{
            {"effectiveness", m.entropy.effectiveness},
            {"consistency", m.entropy.consistency},
            {"nmi", m.entropy.nmi},
            {"topsim", m.topsim},
            {"posdis", m.posdis},
            {"bosdis", m.bosdis},
            {"symbol_redundancy", m.symbol_redundancy},
            {"mean_message_length", m.mean_message_length},
        };
        for (const auto& [name, v] : scalars) samples[{mode, "metric", 0, name}].push_back(v);
        for (const auto& [level, lm] : m.per_level) {
            samples[{mode, "level", level, "effectiveness"}].push_back(lm.effectiveness);
            samples[{mode, "level", level, "consistency"}].push_back(lm.consistency);
            samples[{mode, "level", level, "nmi"}].push_back(lm.nmi);
            samples[{mode, "level", level, "mean_message_length"}].push_back(lm.mean_message_length);
            samples[{mode, "level", level, "symbol_redundancy"}].push_back(lm.symbol_redundancy);
        }
    }
    std::vector<AggregateRow> rows;
    for (auto& [key, values] : samples) {
        if (!any_finite(values)) continue;
        AggregateRow row;
        std::tie(row.zero_shot_mode, row.scope, row.level, row.metric) = key;
        row.estimate = bootstrap_ci(values, seed);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream os;
    os << "zero_shot_mode,scope,level,metric,mean,ci_low,ci_high,runs\n";
    for (const auto& r : rows) {
        os << r.zero_shot_mode << ',' << r.scope << ',' << r.level << ',' << r.metric << ','
           << fmt(r.estimate.mean) << ',' << fmt(r.estimate.ci_low) << ','
           << fmt(r.estimate.ci_high) << ',' << r.estimate.count << '\n';
    }
    return os.str();
}

unsigned job_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HIERREF_THREADS")) {
        try {
            const auto v = text::parse_int<unsigned>(text::trim(env));
            if (v > 0) return v;
        } catch (const std::invalid_argument&) {
        }
        std::cerr << "warning: ignoring invalid HIERREF_THREADS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunArtifacts> run_sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
    cfg.validate();
    struct Job {
        ZeroShotMode mode;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto mode : cfg.zero_shot_modes) {
        for (auto seed : cfg.seeds) jobs.push_back({mode, seed});
    }
    if (!options.force) {
        for (const auto& j : jobs) {
            const auto dir = run_directory(cfg, j.mode, j.seed);
            if (nonempty_directory(dir)) {
                throw OutputExistsError(dir.string() + " already exists; pass --force to overwrite");
            }
        }
    }
    fs::create_directories(cfg.out);

    std::vector<std::optional<RunArtifacts>> results(jobs.size());
    std::vector<std::string> failures;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& j = jobs[i];
            try {
                EpochCallback progress;
                if (options.verbose) {
                    progress = [&, j](const EpochStats& s) {
                        if ((s.epoch + 1) % 10 != 0 && s.epoch + 1 != cfg.epochs) return;
                        std::lock_guard lock(mu);
                        std::cerr << to_string(j.mode) << " seed " << j.seed << " epoch "
                                  << s.epoch + 1 << " train_acc " << s.train_accuracy
                                  << " val_acc " << s.validation_accuracy << '\n';
                    };
                }
                results[i] = run_experiment(cfg, j.mode, j.seed, options.force, progress);
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                failures.push_back(e.what());
            }
        }
    };
    const unsigned threads = std::min<unsigned>(job_threads(options.threads),
                                                static_cast<unsigned>(jobs.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::vector<RunArtifacts> runs;
    for (auto& r : results) {
        if (r) runs.push_back(std::move(*r));
    }
    if (!runs.empty()) {
        write_file(cfg.out / "aggregate.csv", aggregate_csv(aggregate(runs, cfg.bootstrap_seed)));
    }
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        std::string msg = std::to_string(failures.size()) + " of " + std::to_string(jobs.size()) +
                          " runs failed:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw std::runtime_error(msg);
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Ablation and qualitative inspection

std::vector<AblationCell> cross_sampling_ablation(const fs::path& unbalanced_run,
                                                  const fs::path& balanced_run) {
    const auto a = load_config(unbalanced_run / "config.txt");
    const auto b = load_config(balanced_run / "config.txt");
    if (a.n != b.n || a.k != b.k || a.vocab_factor != b.vocab_factor) {
        throw std::invalid_argument("ablation runs differ in n, k or vocab factor");
    }
    if (a.distractor_mode != DistractorMode::Unbalanced ||
        b.distractor_mode != DistractorMode::Balanced) {
        throw std::invalid_argument("ablation expects an unbalanced and a balanced run");
    }
    struct Side {
        DistractorMode mode;
        std::uint64_t seed;
        Model model;
        DatasetSplits data;
    };
    std::vector<Side> sides;
    sides.push_back({DistractorMode::Unbalanced, a.seeds.front(), load_model(unbalanced_run / "model.ckpt"),
                     load_dataset(unbalanced_run / "dataset.txt")});
    sides.push_back({DistractorMode::Balanced, b.seeds.front(), load_model(balanced_run / "model.ckpt"),
                     load_dataset(balanced_run / "dataset.txt")});
    std::vector<AblationCell> cells;
    for (auto& trained : sides) {
        for (const auto& evaluated : sides) {
            AblationCell c;
            c.seed = trained.seed;
            c.trained_on = trained.mode;
            c.evaluated_on = evaluated.mode;
            c.accuracy = evaluate(trained.model, evaluated.data.validation);
            cells.push_back(c);
        }
    }
    return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
    std::ostringstream os;
    os << "seed,trained_on,evaluated_on,accuracy\n";
    for (const auto& c : cells) {
        os << c.seed << ',' << to_string(c.trained_on) << ',' << to_string(c.evaluated_on) << ','
           << fmt(c.accuracy) << '\n';
    }
    return os.str();
}

std::string qualitative_by_concept(const Corpus& corpus, const ConceptKey& key, std::size_t count,
                                   std::uint64_t seed) {
    std::vector<std::size_t> matches;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        if (corpus.records[i].key == key) matches.push_back(i);
    }
    if (matches.empty()) {
        std::set<std::string> keys;
        for (const auto& r : corpus.records) keys.insert(r.key.to_string());
        std::string msg = "concept " + key.to_string() + " not in corpus; available:";
        for (const auto& k : keys) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    Rng rng(seed);
    std::shuffle(matches.begin(), matches.end(), rng);
    matches.resize(std::min(count, matches.size()));

    std::map<std::vector<int>, std::vector<std::string>> groups;
    for (auto i : matches) {
        const auto& r = corpus.records[i];
        groups[r.message].push_back(format_values(r.input.object.values));
    }
    std::vector<std::pair<std::vector<int>, std::vector<std::string>>> ordered(groups.begin(),
                                                                               groups.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) {
        return x.second.size() > y.second.size();
    });
    std::ostringstream os;
    os << "concept " << key.to_string() << ": " << matches.size() << " instances, "
       << ordered.size() << " distinct messages\n";
    for (auto& [message, objects] : ordered) {
        std::sort(objects.begin(), objects.end());
        os << "message " << (message.empty() ? std::string("(empty)") : format_values(message))
           << " x" << objects.size() << '\n';
        for (const auto& o : objects) os << "  " << o << '\n';
    }
    return os.str();
}

std::string qualitative_by_object(const Corpus& corpus, const ObjectVector& object) {
    std::map<std::vector<std::uint8_t>, const CorpusRecord*> rows;
    for (const auto& r : corpus.records) {
        if (r.input.object == object) rows.emplace(r.input.relevance.flags, &r);
    }
    if (rows.empty()) {
        throw std::invalid_argument("object " + format_values(object.values) + " not in corpus");
    }
    std::vector<const CorpusRecord*> ordered;
    for (const auto& [_, r] : rows) ordered.push_back(r);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto* x, const auto* y) {
        if (x->level() != y->level()) return x->level() > y->level();
        return x->input.relevance.flags > y->input.relevance.flags;
    });
    std::ostringstream os;
    os << "object " << format_values(object.values) << ": " << ordered.size()
       << " relevance vectors\n"
       << "relevance\tconcept\tmessage\n";
    for (const auto* r : ordered) {
        os << format_flags(r->input.relevance.flags) << '\t' << r->key.to_string() << '\t'
           << (r->message.empty() ? std::string("(empty)") : format_values(r->message)) << '\n';
    }
    return os.str();
}

}  // namespace hierref

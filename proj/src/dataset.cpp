#include "hierref/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "hierref/text.hpp"

namespace hierref {

namespace {

constexpr std::string_view kDatasetMagic = "hierref-dataset";
constexpr std::string_view kDatasetVersion = "v1";

GameSample make_sample(const ObjectVector& o, const RelevanceVector& r, const GenConfig& cfg,
                       Rng& rng) {
    GameSample s;
    s.sender_object = o;
    s.relevance = r;
    s.target = sample_target(o, r, cfg.k, rng);
    s.distractors =
        cfg.distractor_mode == DistractorMode::Unbalanced
            ? sample_distractors_unbalanced(o, r, cfg.k, cfg.distractors_per_sample, rng)
            : sample_distractors_balanced(o, r, cfg.k, cfg.distractors_per_sample, rng,
                                          cfg.balanced_retry_cap);
    return s;
}

// Full pre-split pool: per object (lexicographic), per level, a fixed quota.
std::vector<GameSample> sample_pool(const std::vector<ObjectVector>& objects,
                                    const GenConfig& cfg, Rng& rng) {
    std::vector<GameSample> pool;
    pool.reserve(objects.size() * static_cast<std::size_t>(cfg.n) *
                 static_cast<std::size_t>(cfg.samples_per_object_per_level));
    for (const auto& o : objects) {
        for (int level = 1; level <= cfg.n; ++level) {
            for (int s = 0; s < cfg.samples_per_object_per_level; ++s) {
                pool.push_back(make_sample(o, sample_relevance_at_level(cfg.n, level, rng), cfg, rng));
            }
        }
    }
    return pool;
}

void split_train_validation(std::vector<GameSample> rest, const GenConfig& cfg, Rng& rng,
                            DatasetSplits& out) {
    std::shuffle(rest.begin(), rest.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(cfg.train_fraction_of_rest * static_cast<double>(rest.size())));
    out.train.assign(std::make_move_iterator(rest.begin()),
                     std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_train)));
    out.validation.assign(std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_train)),
                          std::make_move_iterator(rest.end()));
}

DatasetSplits empty_splits(const GenConfig& cfg) {
    DatasetSplits out;
    out.n = cfg.n;
    out.k = cfg.k;
    out.seed = cfg.seed;
    out.distractor_mode = cfg.distractor_mode;
    return out;
}

}  // namespace

std::string to_string(DistractorMode mode) {
    return mode == DistractorMode::Unbalanced ? "unbalanced" : "balanced";
}

std::string to_string(ZeroShotMode mode) {
    return mode == ZeroShotMode::Objects ? "objects" : "abstractions";
}

std::string to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::ZeroShotObjects: return "zeroshot_objects";
        case Split::ZeroShotAbstractions: return "zeroshot_abstractions";
    }
    return "?";
}

DistractorMode parse_distractor_mode(std::string_view s) {
    if (s == "unbalanced") return DistractorMode::Unbalanced;
    if (s == "balanced") return DistractorMode::Balanced;
    throw std::invalid_argument("unknown distractor mode '" + std::string(s) + "'");
}

ZeroShotMode parse_zero_shot_mode(std::string_view s) {
    if (s == "objects") return ZeroShotMode::Objects;
    if (s == "abstractions") return ZeroShotMode::Abstractions;
    throw std::invalid_argument("unknown zero-shot mode '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
    for (auto split : {Split::Train, Split::Validation, Split::ZeroShotObjects,
                       Split::ZeroShotAbstractions}) {
        if (s == to_string(split)) return split;
    }
    throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

void GenConfig::validate() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (samples_per_object_per_level < 1 || distractors_per_sample < 1 || balanced_retry_cap < 1) {
        throw std::invalid_argument("sample, distractor and retry counts must be >= 1");
    }
    auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!open_unit(zero_shot_object_fraction) || !open_unit(train_fraction_of_rest)) {
        throw std::invalid_argument("split fractions must lie in (0, 1)");
    }
    if (!heldout_values.empty()) {
        ObjectVector{heldout_values}.validate(n, k);
    }
}

const std::vector<GameSample>& DatasetSplits::split(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::ZeroShotObjects: return zeroshot_objects;
        case Split::ZeroShotAbstractions: return zeroshot_abstractions;
    }
    throw std::logic_error("bad split");
}

std::vector<GameSample>& DatasetSplits::split(Split s) {
    return const_cast<std::vector<GameSample>&>(std::as_const(*this).split(s));
}

std::size_t DatasetSplits::total_samples() const {
    return train.size() + validation.size() + zeroshot_objects.size() + zeroshot_abstractions.size();
}

std::vector<ObjectVector> enumerate_objects(int n, int k) {
    if (n < 1 || k < 2) throw std::invalid_argument("enumerate_objects requires n >= 1, k >= 2");
    const double count = std::pow(static_cast<double>(k), n);
    if (count > 1e8) {
        throw std::overflow_error("D(" + std::to_string(n) + "," + std::to_string(k) +
                                  ") has too many objects to enumerate");
    }
    std::vector<ObjectVector> out;
    out.reserve(static_cast<std::size_t>(count));
    ObjectVector cur{std::vector<int>(static_cast<std::size_t>(n), 1)};
    while (true) {
        out.push_back(cur);
        int pos = n - 1;
        while (pos >= 0 && cur[pos] == k) {
            cur[pos] = 1;
            --pos;
        }
        if (pos < 0) break;
        ++cur[pos];
    }
    return out;
}

std::vector<RelevanceVector> relevance_vectors_at_level(int n, int level) {
    std::vector<RelevanceVector> out;
    if (level < 0 || level > n) return out;
    // prev_permutation over a sorted-descending mask yields lexicographically
    // decreasing order; reverse for ascending.
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
    std::fill(mask.begin(), mask.begin() + level, 1);
    do {
        out.push_back(RelevanceVector{mask});
    } while (std::prev_permutation(mask.begin(), mask.end()));
    std::reverse(out.begin(), out.end());
    return out;
}

RelevanceVector sample_relevance_at_level(int n, int level, Rng& rng) {
    if (level < 1 || level > n) throw std::invalid_argument("level outside [1, n]");
    std::vector<int> positions(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: the first `level` positions become relevant.
    RelevanceVector r{std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)};
    for (int i = 0; i < level; ++i) {
        const int j = uniform_int(rng, i, n - 1);
        std::swap(positions[static_cast<std::size_t>(i)], positions[static_cast<std::size_t>(j)]);
        r.flags[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] = 1;
    }
    return r;
}

RelevanceVector sample_relevance_uniform_by_level(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    return sample_relevance_at_level(n, uniform_int(rng, 1, n), rng);
}

ObjectVector sample_target(const ObjectVector& o, const RelevanceVector& r, int k, Rng& rng) {
    if (o.size() != r.size()) throw std::invalid_argument("sample_target: dimension mismatch");
    ObjectVector t = o;
    for (int i = 0; i < o.size(); ++i) {
        if (!r.relevant(i)) t[i] = uniform_int(rng, 1, k);
    }
    return t;
}

std::vector<ObjectVector> sample_distractors_unbalanced(const ObjectVector& o,
                                                        const RelevanceVector& r, int k,
                                                        int count, Rng& rng) {
    if (k < 2) throw std::invalid_argument("unbalanced distractors need k >= 2");
    std::vector<int> relevant;
    for (int i = 0; i < r.size(); ++i) {
        if (r.relevant(i)) relevant.push_back(i);
    }
    if (relevant.empty()) throw std::invalid_argument("relevance vector has no relevant attribute");

    std::vector<ObjectVector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
        const int flipped = relevant[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(relevant.size()) - 1))];
        ObjectVector d = o;
        for (int i = 0; i < o.size(); ++i) {
            if (i == flipped) {
                // Uniform over the k-1 values that differ from o[i].
                const int v = uniform_int(rng, 1, k - 1);
                d[i] = v >= o[i] ? v + 1 : v;
            } else if (!r.relevant(i)) {
                d[i] = uniform_int(rng, 1, k);
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<ObjectVector> sample_distractors_balanced(const ObjectVector& o,
                                                      const RelevanceVector& r, int k,
                                                      int count, Rng& rng, int retry_cap) {
    const Concept target_concept{o, r};
    std::vector<ObjectVector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
        bool accepted = false;
        for (int attempt = 0; attempt < retry_cap && !accepted; ++attempt) {
            const auto other = sample_relevance_uniform_by_level(o.size(), rng);
            if (other == r) continue;
            auto d = sample_target(o, other, k, rng);
            if (instantiates(d, target_concept)) continue;
            out.push_back(std::move(d));
            accepted = true;
        }
        if (!accepted) {
            throw std::runtime_error("balanced distractor sampling exceeded " +
                                     std::to_string(retry_cap) + " redraws for object (" +
                                     format_values(o.values) + ") with relevance (" +
                                     format_flags(r.flags) + "); configuration is degenerate");
        }
    }
    return out;
}

bool is_heldout_abstraction(const ObjectVector& o, const RelevanceVector& r,
                            const std::vector<int>& heldout_values) {
    for (int a = 0; a < o.size(); ++a) {
        if (!r.relevant(a) && o[a] == heldout_values[static_cast<std::size_t>(a)]) return true;
    }
    return false;
}

DatasetSplits generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const auto objects = enumerate_objects(cfg.n, cfg.k);

    std::vector<std::size_t> order(objects.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    auto n_zero_shot = static_cast<std::size_t>(
        std::llround(cfg.zero_shot_object_fraction * static_cast<double>(objects.size())));
    n_zero_shot = std::clamp<std::size_t>(n_zero_shot, 1, objects.size() - 1);
    std::vector<bool> reserved(objects.size(), false);
    for (std::size_t i = 0; i < n_zero_shot; ++i) reserved[order[i]] = true;

    auto pool = sample_pool(objects, cfg, rng);
    const auto per_object =
        static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(cfg.samples_per_object_per_level);

    DatasetSplits out = empty_splits(cfg);
    std::vector<GameSample> rest;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (reserved[i / per_object]) {
            out.zeroshot_objects.push_back(std::move(pool[i]));
        } else {
            rest.push_back(std::move(pool[i]));
        }
    }
    split_train_validation(std::move(rest), cfg, rng, out);
    return out;
}

DatasetSplits build_zeroshot_abstraction_split(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<int> heldout = cfg.heldout_values;
    if (heldout.empty()) {
        for (int a = 0; a < cfg.n; ++a) heldout.push_back(uniform_int(rng, 1, cfg.k));
    }
    auto pool = sample_pool(enumerate_objects(cfg.n, cfg.k), cfg, rng);

    DatasetSplits out = empty_splits(cfg);
    out.heldout_values = heldout;
    std::vector<GameSample> rest;
    for (auto& s : pool) {
        if (is_heldout_abstraction(s.sender_object, s.relevance, heldout)) {
            out.zeroshot_abstractions.push_back(std::move(s));
        } else {
            rest.push_back(std::move(s));
        }
    }
    split_train_validation(std::move(rest), cfg, rng, out);
    return out;
}

DatasetSplits generate(const GenConfig& cfg, ZeroShotMode mode) {
    return mode == ZeroShotMode::Objects ? generate_dataset(cfg) : build_zeroshot_abstraction_split(cfg);
}

std::string serialize_dataset(const DatasetSplits& splits) {
    std::ostringstream os;
    os << kDatasetMagic << ' ' << kDatasetVersion << " n=" << splits.n << " k=" << splits.k
       << " seed=" << splits.seed << " mode=" << to_string(splits.distractor_mode);
    if (!splits.heldout_values.empty()) os << " heldout=" << format_values(splits.heldout_values);
    os << " records=" << splits.total_samples() << '\n';
    for (auto which : {Split::Train, Split::Validation, Split::ZeroShotObjects,
                       Split::ZeroShotAbstractions}) {
        for (const auto& s : splits.split(which)) {
            os << to_string(which) << '\t' << format_values(s.sender_object.values) << '\t'
               << format_flags(s.relevance.flags) << '\t' << format_values(s.target.values) << '\t';
            for (std::size_t i = 0; i < s.distractors.size(); ++i) {
                if (i) os << '|';
                os << format_values(s.distractors[i].values);
            }
            os << '\n';
        }
    }
    return os.str();
}

void save_dataset(const DatasetSplits& splits, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
    out << serialize_dataset(splits);
    if (!out) throw std::runtime_error("failed writing dataset file " + path.string());
}

DatasetSplits parse_dataset(const std::string& contents) {
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DatasetParseError(line_no, "empty file, missing header");

    const auto fields = text::split(text::trim(line), ' ');
    if (fields.size() < 2 || fields[0] != kDatasetMagic) {
        throw DatasetParseError(line_no, "missing 'hierref-dataset' header");
    }
    if (fields[1] != kDatasetVersion) {
        throw DatasetParseError(line_no, "unsupported dataset version '" + std::string(fields[1]) +
                                             "', expected " + std::string(kDatasetVersion));
    }
    const auto tokens = text::parse_tokens(line);
    DatasetSplits out;
    std::optional<std::size_t> expected_records;
    try {
        for (const char* key : {"n", "k", "seed", "mode"}) {
            if (!tokens.count(key)) throw std::invalid_argument(std::string("header lacks ") + key);
        }
        out.n = text::parse_int<int>(tokens.at("n"));
        out.k = text::parse_int<int>(tokens.at("k"));
        out.seed = text::parse_int<std::uint64_t>(tokens.at("seed"));
        out.distractor_mode = parse_distractor_mode(tokens.at("mode"));
        if (tokens.count("heldout")) out.heldout_values = text::parse_int_list(tokens.at("heldout"));
        if (out.n < 1 || out.k < 2) throw std::invalid_argument("header has invalid n or k");
        if (tokens.count("records")) expected_records = text::parse_int<std::size_t>(tokens.at("records"));
    } catch (const std::invalid_argument& e) {
        throw DatasetParseError(line_no, e.what());
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 5) {
            throw DatasetParseError(line_no, "expected 5 tab-separated columns, found " +
                                                 std::to_string(cols.size()));
        }
        try {
            GameSample s;
            const Split which = parse_split(cols[0]);
            s.sender_object = parse_object(cols[1]);
            s.relevance = parse_relevance(cols[2]);
            s.target = parse_object(cols[3]);
            for (auto d : text::split(cols[4], '|')) s.distractors.push_back(parse_object(d));
            s.sender_object.validate(out.n, out.k);
            s.relevance.validate(out.n);
            s.target.validate(out.n, out.k);
            for (const auto& d : s.distractors) d.validate(out.n, out.k);
            out.split(which).push_back(std::move(s));
        } catch (const std::invalid_argument& e) {
            throw DatasetParseError(line_no, e.what());
        }
    }
    if (expected_records && *expected_records != out.total_samples()) {
        throw DatasetParseError(line_no, "truncated file: header announces " +
                                             std::to_string(*expected_records) + " records, found " +
                                             std::to_string(out.total_samples()));
    }
    return out;
}

DatasetSplits load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

}  // namespace hierref

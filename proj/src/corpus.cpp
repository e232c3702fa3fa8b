#include "hierref/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hierref/text.hpp"

namespace hierref {

void Corpus::validate() const {
    if (records.empty()) throw std::invalid_argument("corpus is empty");
    if (n < 1 || k < 2 || vocab_size < 2 || max_len < 1) {
        throw std::invalid_argument("corpus has invalid dimensions");
    }
    for (const auto& r : records) {
        if (r.key.size() != n) throw std::invalid_argument("corpus record has wrong attribute count");
        if (r.key.level() == 0) throw std::invalid_argument("corpus record without relevant attribute");
        for (int v : r.key.masked) {
            if (v > k) throw std::invalid_argument("corpus record value exceeds k");
        }
        if (static_cast<int>(r.message.size()) > max_len) {
            throw std::invalid_argument("corpus message longer than max_len");
        }
        for (int s : r.message) {
            if (s < 1 || s >= vocab_size) {
                throw std::invalid_argument("corpus message symbol " + std::to_string(s) +
                                            " outside [1, vocab)");
            }
        }
    }
}

CorpusRecord make_record(const Concept& c, std::vector<int> message) {
    return CorpusRecord{c, concept_key(c), std::move(message)};
}

std::string serialize_corpus(const Corpus& corpus) {
    std::ostringstream os;
    os << "hierref-corpus v1 n=" << corpus.n << " k=" << corpus.k << " vocab=" << corpus.vocab_size
       << " max_len=" << corpus.max_len << '\n';
    for (const auto& r : corpus.records) {
        os << r.key.to_string() << '\t' << format_values(r.message) << '\t'
           << format_values(r.input.object.values) << '\n';
    }
    return os.str();
}

Corpus parse_corpus(const std::string& contents) {
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 1;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + what);
    };
    if (!std::getline(in, line)) fail("empty file, missing header");
    const auto head = text::split(text::trim(line), ' ');
    if (head.size() < 2 || head[0] != "hierref-corpus") fail("missing 'hierref-corpus' header");
    if (head[1] != "v1") fail("unsupported corpus version '" + std::string(head[1]) + "'");

    Corpus corpus;
    try {
        const auto tokens = text::parse_tokens(line);
        corpus.n = text::parse_int<int>(tokens.at("n"));
        corpus.k = text::parse_int<int>(tokens.at("k"));
        corpus.vocab_size = text::parse_int<int>(tokens.at("vocab"));
        corpus.max_len = text::parse_int<int>(tokens.at("max_len"));
    } catch (const std::exception& e) {
        fail(std::string("bad header: ") + e.what());
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 2 && cols.size() != 3) fail("expected 2 or 3 tab-separated columns");
        try {
            CorpusRecord r;
            r.key = ConceptKey::parse(cols[0]);
            r.message = text::parse_int_list(cols[1]);
            r.input = concept_from_key(r.key);
            if (cols.size() == 3) {
                auto object = parse_object(cols[2]);
                if (object.size() != r.key.size()) throw std::invalid_argument("object size mismatch");
                if (!instantiates(object, r.input)) {
                    throw std::invalid_argument("object does not instantiate its concept key");
                }
                r.input.object = std::move(object);
            }
            corpus.records.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus " + path.string());
    out << serialize_corpus(corpus);
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str());
}

}  // namespace hierref

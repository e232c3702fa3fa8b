#include "hierref/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hierref/text.hpp"

namespace hierref {

namespace {

constexpr char kMagic[4] = {'H', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::string take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint truncated");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.values.size() != static_cast<std::size_t>(t.rows) * t.cols) {
            throw std::invalid_argument("tensor " + t.name + " has inconsistent shape");
        }
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        put_u32(out, t.rows);
        put_u32(out, t.cols);
        for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
    Reader in(bytes);
    if (in.take(4) != std::string(kMagic, 4)) throw std::runtime_error("not a checkpoint file");
    if (const auto version = in.u32(); version != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = in.u32();
    std::vector<NamedTensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = in.take(in.u32());
        t.rows = in.u32();
        t.cols = in.u32();
        const auto n = static_cast<std::size_t>(t.rows) * t.cols;
        if (n > bytes.size()) throw std::runtime_error("checkpoint truncated");
        t.values.resize(n);
        for (auto& v : t.values) v = std::bit_cast<float>(in.u32());
        out.push_back(std::move(t));
    }
    if (!in.done()) throw std::runtime_error("trailing bytes after checkpoint tensors");
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    const auto bytes = encode_checkpoint(tensors);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_checkpoint(buf.str());
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    for (const auto& [key, value] : manifest) out << key << '=' << value << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    Manifest out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        }
        out[std::string(text::trim(trimmed.substr(0, eq)))] =
            std::string(text::trim(trimmed.substr(eq + 1)));
    }
    return out;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint) {
    auto p = checkpoint;
    p += ".manifest";
    return p;
}

}  // namespace hierref

#pragma once

// Checkpoint persistence.
//
// Binary layout (all integers uint32 little-endian, values IEEE-754 float32
// little-endian, column-major):
//
//   magic "HRCK" | version (=1) | tensor count
//   per tensor: name length | name bytes | rows | cols | rows*cols values
//
// A sibling text manifest holds `key=value` lines (architecture dims, vocab
// size, seed, epoch).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hierref {

struct NamedTensor {
    std::string name;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> values;

    bool operator==(const NamedTensor&) const = default;
};

using Manifest = std::map<std::string, std::string>;

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

/// `<checkpoint>.manifest`
std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint);

}  // namespace hierref

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scbm/tensor.hpp"

namespace scbm::io {

/// Versioned binary container: 4-byte magic, little-endian u32 version, a
/// JSON metadata block, then named shape-tagged arrays of 64-bit reals.
/// Round-trips bit-exactly.
struct ArrayContainer {
    std::uint32_t version = 1;
    std::string meta_json;
    std::vector<std::pair<std::string, Tensor>> arrays;

    bool has(const std::string& name) const;
    const Tensor& get(const std::string& name) const;
    void put(const std::string& name, Tensor t) { arrays.emplace_back(name, std::move(t)); }
};

void write_container(const std::string& path, const char magic[4], const ArrayContainer& c);

/// Throws on magic mismatch, version mismatch (naming both versions), or
/// truncation (naming the field being read).
ArrayContainer read_container(const std::string& path, const char magic[4],
                              std::uint32_t expected_version);

}  // namespace scbm::io

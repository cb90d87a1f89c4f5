#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace scbm::cfg {

/// Flat `key = value` configuration with dotted keys. Lines starting with
/// '#' (or trailing '#' comments) are ignored. Duplicate keys are errors, and
/// callers reject unknown keys against their allowed set.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_str_list(const std::string& key) const;

    /// Throws naming the first key outside `allowed`.
    void require_known(const std::set<std::string>& allowed) const;

    /// Sorted `key = value` lines; input to the provenance hash.
    std::string canonical() const;

    const std::map<std::string, std::string>& items() const { return kv_; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

private:
    std::map<std::string, std::string> kv_;
};

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(const std::string& s);

}  // namespace scbm::cfg

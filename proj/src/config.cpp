#include "scbm/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbm::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.kv_.count(key))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                        key + "'");
        cfg.kv_[key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_string(os.str(), path);
}

std::string Config::get_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: '" + v + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const double d = get_double(key);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
        throw std::invalid_argument("config: key '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not an unsigned integer: '" + v + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(get_str(key), ',')) {
        if (part.empty()) continue;
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' has a non-numeric entry '" + part + "'");
        }
    }
    if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
    return out;
}

std::vector<std::string> Config::get_str_list(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& part : split(get_str(key), ','))
        if (!part.empty()) out.push_back(part);
    if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
    return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : kv_)
        if (!allowed.count(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

}  // namespace scbm::cfg

#include "scbm/container_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scbm::io {

namespace {

void write_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
}

void write_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<char*>(b), 8);
}

void write_f64(std::ofstream& f, const double* v, std::size_t n) {
    // doubles serialized via their bit patterns, little-endian
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, v + i, 8);
        write_u64(f, bits);
    }
}

struct Reader {
    std::ifstream f;
    std::string path;

    void need(void* dst, std::size_t n, const std::string& field) {
        f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (f.gcount() != static_cast<std::streamsize>(n))
            throw std::runtime_error("truncated container " + path + ": while reading " + field);
    }
    std::uint32_t u32(const std::string& field) {
        unsigned char b[4];
        need(b, 4, field);
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    }
    std::uint64_t u64(const std::string& field) {
        unsigned char b[8];
        need(b, 8, field);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::string str(std::size_t n, const std::string& field) {
        std::string s(n, '\0');
        if (n) need(s.data(), n, field);
        return s;
    }
};

}  // namespace

bool ArrayContainer::has(const std::string& name) const {
    for (const auto& [k, v] : arrays)
        if (k == name) return true;
    return false;
}

const Tensor& ArrayContainer::get(const std::string& name) const {
    for (const auto& [k, v] : arrays)
        if (k == name) return v;
    throw std::runtime_error("container: missing array " + name);
}

void write_container(const std::string& path, const char magic[4], const ArrayContainer& c) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(magic, 4);
    write_u32(f, c.version);
    write_u64(f, c.meta_json.size());
    f.write(c.meta_json.data(), static_cast<std::streamsize>(c.meta_json.size()));
    write_u64(f, c.arrays.size());
    for (const auto& [name, t] : c.arrays) {
        write_u64(f, name.size());
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(f, t.ndim());
        for (std::size_t d = 0; d < t.ndim(); ++d) write_u64(f, t.dim(d));
        write_f64(f, t.data(), t.size());
    }
    if (!f) throw std::runtime_error("write failed for " + path);
}

ArrayContainer read_container(const std::string& path, const char magic[4],
                              std::uint32_t expected_version) {
    Reader r;
    r.path = path;
    r.f.open(path, std::ios::binary);
    if (!r.f) throw std::runtime_error("cannot open " + path);

    char got[4];
    r.need(got, 4, "magic");
    if (std::memcmp(got, magic, 4) != 0)
        throw std::runtime_error("bad magic in " + path + ": expected '" +
                                 std::string(magic, 4) + "', found '" + std::string(got, 4) + "'");
    ArrayContainer c;
    c.version = r.u32("version");
    if (c.version != expected_version)
        throw std::runtime_error("container version mismatch in " + path + ": file has version " +
                                 std::to_string(c.version) + ", expected " +
                                 std::to_string(expected_version));
    const std::uint64_t meta_len = r.u64("metadata length");
    c.meta_json = r.str(meta_len, "metadata");
    const std::uint64_t count = r.u64("array count");
    for (std::uint64_t a = 0; a < count; ++a) {
        const std::uint64_t name_len = r.u64("array name length");
        const std::string name = r.str(name_len, "array name");
        const std::uint64_t ndim = r.u64("rank of " + name);
        if (ndim > 8) throw std::runtime_error("corrupt container " + path + ": rank of " + name);
        std::vector<std::size_t> shape(ndim);
        std::size_t total = 1;
        for (std::uint64_t d = 0; d < ndim; ++d) {
            shape[d] = r.u64("shape of " + name);
            total *= shape[d];
        }
        Tensor t(shape);
        for (std::size_t i = 0; i < total; ++i) {
            const std::uint64_t bits = r.u64("data of " + name);
            double v;
            std::memcpy(&v, &bits, 8);
            t[i] = v;
        }
        c.arrays.emplace_back(name, std::move(t));
    }
    return c;
}

}  // namespace scbm::io

#include "licem/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace licem {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; big-endian hosts need byte swaps");

[[noreturn]] void format_fail(const std::string& path, std::streamoff offset, const std::string& what) {
    std::ostringstream os;
    os << path << " at byte " << offset << ": " << what;
    throw ParseError(os.str());
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    const std::streamoff off = in.tellg();
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        format_fail(path, off, "truncated file");
    }
    return v;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string read_string(std::istream& in, const std::string& path) {
    const std::uint16_t len = read_pod<std::uint16_t>(in, path);
    std::string s(len, '\0');
    const std::streamoff off = in.tellg();
    if (len > 0 && !in.read(s.data(), len)) {
        format_fail(path, off, "truncated string");
    }
    return s;
}

void write_string(std::ostream& out, const std::string& s) {
    if (s.size() > 0xFFFF) {
        throw IoError("string too long for embedding file: " + s.substr(0, 32) + "...");
    }
    write_pod(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

} // namespace

void EmbeddingStore::put(const std::string& id, const std::vector<double>& vec) {
    if (dim_ == 0) {
        dim_ = static_cast<int>(vec.size());
    }
    if (static_cast<int>(vec.size()) != dim_) {
        throw DimError("embedding for id '" + id + "' has dimension " + std::to_string(vec.size()) +
                       ", store expects " + std::to_string(dim_));
    }
    for (double v : vec) {
        if (!std::isfinite(v)) {
            throw ParseError("embedding for id '" + id + "' contains a non-finite value");
        }
    }
    auto [it, inserted] = index_.emplace(id, vec);
    if (!inserted) {
        throw ParseError("duplicate embedding id '" + id + "'");
    }
    order_.push_back(id);
}

const std::vector<double>& EmbeddingStore::get(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw UsageError("no embedding for id '" + id + "'");
    }
    return it->second;
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open embedding file: " + path);
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        format_fail(path, 0, "bad magic, expected LCEM");
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kFormatVersion) {
        format_fail(path, 4, "unsupported version " + std::to_string(version));
    }
    const auto dim = read_pod<std::uint32_t>(in, path);
    if (dim == 0 || dim > (1u << 24)) {
        format_fail(path, 8, "implausible dimension " + std::to_string(dim));
    }
    EmbeddingStore store(static_cast<int>(dim), read_string(in, path));
    std::vector<double> vec(dim);
    for (;;) {
        in.peek();
        if (in.eof()) {
            break;
        }
        std::string id = read_string(in, path);
        const std::streamoff off = in.tellg();
        if (!in.read(reinterpret_cast<char*>(vec.data()),
                     static_cast<std::streamsize>(sizeof(double) * dim))) {
            format_fail(path, off, "truncated vector for id '" + id + "'");
        }
        store.put(id, vec);
    }
    return store;
}

void EmbeddingStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write embedding file: " + path);
    }
    out.write(kMagic, 4);
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint32_t>(dim_));
    write_string(out, provenance_);
    for (const std::string& id : order_) {
        write_string(out, id);
        const std::vector<double>& vec = index_.at(id);
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(sizeof(double) * vec.size()));
    }
    if (!out) {
        throw IoError("short write to embedding file: " + path);
    }
}

} // namespace licem

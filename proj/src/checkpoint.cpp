#include "marketcal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mcal::ckpt {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <class T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
    return v;
}

}  // namespace

void save(const std::filesystem::path& path, const Archive& a) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write("CKPT", 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint64_t>(out, a.size());
    for (const auto& [name, t] : a) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) write_pod<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Archive load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CKPT", 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto count = read_pod<std::uint64_t>(in, path);
    Archive a;
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto len = read_pod<std::uint32_t>(in, path);
        std::string name(len, '\0');
        in.read(name.data(), len);
        Tensor t;
        const auto rank = read_pod<std::uint32_t>(in, path);
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.shape.push_back(read_pod<std::uint64_t>(in, path));
            n *= t.shape.back();
        }
        t.values.resize(n);
        in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
        a.emplace(std::move(name), std::move(t));
    }
    return a;
}

void put(Archive& a, const ad::ParamTensor& p) { a[p.name] = Tensor{p.shape, p.values}; }

void put(Archive& a, const std::string& name, std::vector<double> values) {
    a[name] = Tensor{{values.size()}, std::move(values)};
}

void get(const Archive& a, ad::ParamTensor& p) {
    auto it = a.find(p.name);
    if (it == a.end()) throw std::runtime_error("checkpoint lacks tensor " + p.name);
    if (it->second.shape != p.shape) throw std::runtime_error("checkpoint shape mismatch for " + p.name);
    p.values = it->second.values;
    p.zero_grad();
}

std::vector<double> get(const Archive& a, const std::string& name, std::size_t expected_size) {
    auto it = a.find(name);
    if (it == a.end()) throw std::runtime_error("checkpoint lacks tensor " + name);
    if (it->second.values.size() != expected_size)
        throw std::runtime_error("checkpoint size mismatch for " + name);
    return it->second.values;
}

}  // namespace mcal::ckpt

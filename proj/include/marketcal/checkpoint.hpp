#pragma once

// Binary tensor archive:
//   "CKPT" | u32 version | u64 count
//   per tensor: u32 name_len | name | u32 rank | u64 dims[rank] | f64 values (LE, row-major)

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "marketcal/autodiff.hpp"

namespace mcal::ckpt {

inline constexpr std::uint32_t kVersion = 1;

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool operator==(const Tensor&) const = default;
};

using Archive = std::map<std::string, Tensor>;

void save(const std::filesystem::path& path, const Archive& a);
Archive load(const std::filesystem::path& path);

void put(Archive& a, const ad::ParamTensor& p);
void put(Archive& a, const std::string& name, std::vector<double> values);
/// Copies the stored values into `p`; throws if missing or the shape differs.
void get(const Archive& a, ad::ParamTensor& p);
std::vector<double> get(const Archive& a, const std::string& name, std::size_t expected_size);

}  // namespace mcal::ckpt

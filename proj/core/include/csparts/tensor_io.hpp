#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace csparts {

/// In-memory form of a tensor file.
///
/// On disk: the four bytes "PSF1", u64 rank, rank u64 dims, then
/// prod(dims) float32 values. All integers and floats are little-endian.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims, std::span<const float> data);
inline void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_tensor(path, t.dims, t.data); }

Tensor read_tensor(const std::filesystem::path& path);

/// Byte-level encode/decode, used by the file functions and by tests.
std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims, std::span<const float> data);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

}  // namespace csparts

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "csparts/errors.hpp"
#include "csparts/tensor_io.hpp"

namespace csparts {

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'S', 'F', '1'};
constexpr std::uint64_t kMaxRank = 16;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims, std::span<const float> data) {
  if (dims.empty()) throw ArgumentError("tensor rank must be at least 1");
  std::uint64_t count = 1;
  for (auto d : dims) {
    if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d) throw ArgumentError("tensor dims overflow");
    count *= d;
  }
  if (count != data.size()) throw ArgumentError("tensor data length does not match dims");

  std::vector<std::uint8_t> out;
  out.reserve(4 + 8 * (1 + dims.size()) + 4 * data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u64(out, dims.size());
  for (auto d : dims) put_u64(out, d);
  for (float f : data) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("tensor: bad magic");
  if (bytes.size() < 12) throw FormatError("tensor: truncated rank");
  const std::uint64_t rank = get_u64(bytes, 4);
  if (rank == 0 || rank > kMaxRank) throw FormatError("tensor: invalid rank " + std::to_string(rank));
  const std::size_t header = 12 + 8 * rank;
  if (bytes.size() < header) throw FormatError("tensor: truncated dims");

  Tensor t;
  t.dims.resize(rank);
  std::uint64_t count = 1;
  const std::uint64_t limit = (bytes.size() - header) / 4;
  for (std::uint64_t i = 0; i < rank; ++i) {
    t.dims[i] = get_u64(bytes, 12 + 8 * i);
    if (t.dims[i] != 0 && count > std::numeric_limits<std::uint64_t>::max() / t.dims[i])
      throw FormatError("tensor: dim overflow");
    count *= t.dims[i];
  }
  if (count > limit) throw FormatError("tensor: truncated payload");
  if (count < limit || (bytes.size() - header) % 4 != 0) throw FormatError("tensor: trailing bytes after payload");

  t.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[header + 4 * i + b]) << (8 * b);
    t.data[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims, std::span<const float> data) {
  const auto bytes = encode_tensor(dims, data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(std::string(e.what()) + " in '" + path.string() + "'");
  }
}

}  // namespace csparts

#include <bit>
#include <filesystem>
#include <fstream>
#include <random>

#include "csparts/errors.hpp"
#include "csparts/tensor_io.hpp"
#include "doctest.h"

using namespace csparts;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "csparts_test_tensor";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("small tensors round trip") {
  const auto p = scratch("a.psf");
  write_tensor(p, Tensor{{2, 2}, {1, 2, 3, 4}});
  CHECK(read_tensor(p) == Tensor{{2, 2}, {1, 2, 3, 4}});
  write_tensor(p, Tensor{{1}, {0.0f}});
  CHECK(read_tensor(p) == Tensor{{1}, {0.0f}});
}

TEST_CASE("byte layout is fixed little-endian") {
  const std::uint64_t dims[1] = {1};
  const float data[1] = {1.0f};
  const auto bytes = encode_tensor(dims, data);
  const std::vector<std::uint8_t> expected = {'P', 'S', 'F', '1', 1, 0, 0, 0, 0, 0, 0, 0,
                                              1,   0,   0,   0,   0, 0, 0, 0, 0, 0, 0x80, 0x3f};
  CHECK(bytes == expected);
}

TEST_CASE("randomized round trip is bit-exact") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor t;
    const std::size_t rank = 1 + rng() % 4;
    std::size_t count = 1;
    for (std::size_t r = 0; r < rank; ++r) {
      t.dims.push_back(1 + rng() % 6);
      count *= t.dims.back();
    }
    for (std::size_t i = 0; i < count; ++i) {
      // Any finite bit pattern, including subnormals and negative zero.
      float f;
      do {
        f = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      } while (!std::isfinite(f));
      t.data.push_back(f);
    }
    const auto bytes = encode_tensor(t.dims, t.data);
    const Tensor back = decode_tensor(bytes);
    REQUIRE(back.dims == t.dims);
    REQUIRE(back.data.size() == t.data.size());
    for (std::size_t i = 0; i < count; ++i)
      REQUIRE(std::bit_cast<std::uint32_t>(back.data[i]) == std::bit_cast<std::uint32_t>(t.data[i]));
  }
  // One through the filesystem as well.
  const auto p = scratch("r.psf");
  Tensor t{{3, 1, 2}, {1.5f, -0.0f, 7e-42f, 3.0f, -2.0f, 1e30f}};
  write_tensor(p, t);
  CHECK(read_tensor(p).data.size() == 6);
  CHECK(std::bit_cast<std::uint32_t>(read_tensor(p).data[1]) == 0x80000000u);
}

TEST_CASE("decode errors") {
  const std::uint64_t dims[2] = {2, 2};
  const float data[4] = {1, 2, 3, 4};
  auto bytes = encode_tensor(dims, data);

  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_tensor(bytes), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("truncated payload") {
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_WITH_AS(decode_tensor(bytes), doctest::Contains("truncated"), FormatError);
  }
  SUBCASE("dim overflow") {
    for (int i = 0; i < 8; ++i) bytes[12 + i] = 0xff;
    for (int i = 0; i < 8; ++i) bytes[20 + i] = 0xff;
    CHECK_THROWS_WITH_AS(decode_tensor(bytes), doctest::Contains("overflow"), FormatError);
  }
  SUBCASE("encode rejects mismatched or empty dims") {
    CHECK_THROWS_AS(encode_tensor(std::span<const std::uint64_t>{}, data), ArgumentError);
    const std::uint64_t wrong[1] = {5};
    CHECK_THROWS_AS(encode_tensor(wrong, data), ArgumentError);
  }
  CHECK_THROWS_AS(read_tensor(scratch("missing.psf")), FormatError);
}

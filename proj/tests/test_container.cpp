/* Copyright 2026 The woqt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "woqt/container.hpp"
#include "woqt/errors.hpp"
#include "woqt/half.hpp"
#include "woqt/quant.hpp"

using namespace woqt;
namespace fs = std::filesystem;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Reflected CRC-32, one bit at a time.
std::uint32_t bitwise_crc32(const Bytes& b) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (const std::uint8_t byte : b) {
    crc ^= byte;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

void u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

Bytes frame(const std::string& manifest, const Bytes& payload) {
  Bytes out = {'W', 'O', 'Q', 'T', '1', 0};
  u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

PackedQuantTensor fixture() {
  const Tensor t("w", 4, 1, {1.0f, -2.0f, 3.0f, -4.0f});
  return quantize_linear(t, 4, GroupLayout::per_column(4, 1));
}

TensorBundle mixed_bundle() {
  TensorBundle b;
  b.add(Tensor("embed", 2, 3, {0.5f, -1.25f, 2.0f, 0.0f, 3.5f, -0.75f}, {"part=embed"}));
  const Tensor w("layers.0.ffn", 32, 2, std::vector<float>(64, 0.25f));
  b.add(quantize(w, QuantScheme::linear(3, ScaleStorage::f16), GroupLayout::fixed_group(32, 2, 16))
            .retagged({"layer=0", "part=ffn"}));
  b.add(quantize(w, QuantScheme::log(5, LogScaleMode::mse_optimal), GroupLayout::per_tensor(32, 2))
            .renamed("layers.0.log"));
  return b;
}

}  // namespace

TEST_CASE("bitwise CRC agrees with the library and the check value") {
  const Bytes check = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  CHECK(bitwise_crc32(check) == 0xCBF43926u);
  CHECK(crc32_of(check) == 0xCBF43926u);
}

TEST_CASE("hand-assembled container matches the encoder byte for byte") {
  const PackedQuantTensor q = fixture();
  Bytes payload = {4, 0, 1};  // bits, linear, per-column
  u32(payload, 4);            // group size
  u32(payload, 4);            // min group, capped at rows
  u32(payload, 0);            // alpha
  payload.push_back(2);       // f32 scales
  u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(8.0 / 15.0)));
  payload.push_back(0xC2);  // codes 2, -4
  payload.push_back(0x86);  // codes 6, -8
  REQUIRE(encode_packed_payload(q) == payload);

  const std::string manifest =
      "{\"tensors\":[{\"byte_length\":" + std::to_string(payload.size()) +
      ",\"byte_offset\":0,\"cols\":1,\"crc32\":" + std::to_string(bitwise_crc32(payload)) +
      ",\"dtype\":\"packed\",\"name\":\"w\",\"rows\":4,\"tags\":[]}],\"version\":1}";
  TensorBundle b;
  b.add(q);
  const Bytes expected = frame(manifest, payload);
  CHECK(encode_bundle(b) == expected);
  CHECK(decode_bundle(expected) == b);
}

TEST_CASE("round trip of float, packed f16 and log entries") {
  const TensorBundle b = mixed_bundle();
  const Bytes bytes = encode_bundle(b);
  CHECK(decode_bundle(bytes) == b);
  CHECK(encode_bundle(decode_bundle(bytes)) == bytes);
  const auto m = read_manifest(bytes);
  REQUIRE(m.size() == 3);
  CHECK(m[0].dtype == "f32");
  CHECK(m[1].tags == std::vector<std::string>{"layer=0", "part=ffn"});
  CHECK(m[2].byte_offset == m[1].byte_offset + m[1].byte_length);
}

TEST_CASE("golden file decodes to known values and re-encodes identically") {
  const fs::path path = fs::path(WOQT_TEST_DATA_DIR) / "golden_v1.woqt";
  const Bytes bytes = read_file(path);
  REQUIRE(!bytes.empty());
  const TensorBundle b = decode_bundle(bytes);
  CHECK(b == mixed_bundle());
  const auto& ffn = std::get<PackedQuantTensor>(*b.find("layers.0.ffn"));
  // 0.25 over 3 bits: s = 0.5 / 7 rounded up to a half, codes 0.25 / s.
  const float s = half_to_float(float_to_half_ceil(0.5f / 7.0f));
  CHECK(ffn.scale(0, 0) == s);
  CHECK(codes_of(ffn).at(0, 0) == static_cast<int>(std::lround(0.25 / s)));
  CHECK(encode_bundle(b) == bytes);
}

TEST_CASE("empty bundle") {
  const Bytes bytes = encode_bundle(TensorBundle{});
  CHECK(bytes == frame("{\"tensors\":[],\"version\":1}", {}));
  CHECK(decode_bundle(bytes).empty());
}

TEST_CASE("encoding is deterministic") {
  CHECK(encode_bundle(mixed_bundle()) == encode_bundle(mixed_bundle()));
}

TEST_CASE("unsupported version") {
  CHECK_THROWS_AS(decode_bundle(frame("{\"tensors\":[],\"version\":99}", {})), VersionError);
}

TEST_CASE("flipped payload byte fails the checksum") {
  Bytes bytes = encode_bundle(mixed_bundle());
  bytes.back() ^= 0x01;
  CHECK_THROWS_AS(decode_bundle(bytes), CorruptionError);
}

TEST_CASE("framing errors") {
  CHECK_THROWS_AS(decode_bundle(Bytes{'W', 'O', 'Q'}), FormatError);
  CHECK_THROWS_AS(decode_bundle(frame("not json", {})), FormatError);
  CHECK_THROWS_AS(decode_bundle(frame("{\"version\":1}", {})), FormatError);
  Bytes truncated = encode_bundle(mixed_bundle());
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_bundle(truncated), CorruptionError);
}

TEST_CASE("NaN payload is rejected") {
  Bytes payload;
  u32(payload, std::bit_cast<std::uint32_t>(1.0f));
  u32(payload, std::bit_cast<std::uint32_t>(NAN));
  const std::string manifest =
      "{\"tensors\":[{\"byte_length\":8,\"byte_offset\":0,\"cols\":2,\"crc32\":" +
      std::to_string(bitwise_crc32(payload)) +
      ",\"dtype\":\"f32\",\"name\":\"x\",\"rows\":1,\"tags\":[]}],\"version\":1}";
  CHECK_THROWS_AS(decode_bundle(frame(manifest, payload)), ValidationError);
}

TEST_CASE("payload header fields are validated") {
  Bytes payload = encode_packed_payload(fixture());
  auto bad = [&](std::size_t at, std::uint8_t v) {
    Bytes p = payload;
    p[at] = v;
    return p;
  };
  CHECK_THROWS_AS(decode_packed_payload(bad(0, 9), "w", 4, 1, {}), FormatError);
  CHECK_THROWS_AS(decode_packed_payload(bad(1, 3), "w", 4, 1, {}), FormatError);
  CHECK_THROWS_AS(decode_packed_payload(bad(2, 7), "w", 4, 1, {}), FormatError);
  CHECK_THROWS_AS(decode_packed_payload(bad(15, 3), "w", 4, 1, {}), FormatError);
  CHECK_THROWS_AS(decode_packed_payload(bad(11, 1), "w", 4, 1, {}), FormatError);
  CHECK_THROWS_AS(decode_packed_payload(payload, "w", 8, 1, {}), FormatError);
}

TEST_CASE("file IO") {
  const fs::path dir = fs::temp_directory_path() / "woqt_container_test";
  fs::create_directories(dir);
  const fs::path file = dir / "b.woqt";
  save_bundle(mixed_bundle(), file);
  CHECK(load_bundle(file) == mixed_bundle());
  CHECK_THROWS_AS(load_bundle(dir / "missing.woqt"), IoError);
  CHECK_THROWS_AS(save_bundle(mixed_bundle(), dir / "no" / "such" / "dir" / "x.woqt"), IoError);
  fs::remove_all(dir);
}

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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "woqt/quant.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

using BundleEntry = std::variant<Tensor, PackedQuantTensor>;

const std::string& entry_name(const BundleEntry& e);
const TagSet& entry_tags(const BundleEntry& e);
std::size_t entry_rows(const BundleEntry& e);
std::size_t entry_cols(const BundleEntry& e);
bool is_packed(const BundleEntry& e);

// Ordered collection of named float or packed tensors. Names are unique.
class TensorBundle {
 public:
  void add(BundleEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<BundleEntry>& entries() const { return entries_; }
  const BundleEntry& at(std::size_t i) const { return entries_.at(i); }
  // nullptr when absent.
  const BundleEntry* find(const std::string& name) const;
  std::vector<std::string> names() const;

  friend bool operator==(const TensorBundle& a, const TensorBundle& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<BundleEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

// WOQT1 container: 6 magic bytes "WOQT1\0", u32 manifest length, JSON
// manifest, payloads. Integers little-endian. Offsets in the manifest are
// relative to the first payload byte.
inline constexpr std::uint8_t kMagic[6] = {0x57, 0x4F, 0x51, 0x54, 0x31, 0x00};
inline constexpr int kFormatVersion = 1;
// Packed payload header: bits, mapping, layout kind, group size, min group,
// alpha in thousandths, scale dtype.
inline constexpr std::size_t kPackedHeaderBytes = 16;

// Mapping byte in the packed header. The log scale mode rides along since
// it is part of the scheme.
enum class MappingCode : std::uint8_t { linear = 0, log_absmax = 1, log_mse_optimal = 2 };
enum class ScaleDtypeCode : std::uint8_t { f16 = 1, f32 = 2 };

struct ManifestEntry {
  std::string name;
  std::string dtype;  // "f32" or "packed"
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::string> tags;
  std::uint64_t byte_offset = 0;
  std::uint64_t byte_length = 0;
  std::uint32_t crc32 = 0;
};

std::vector<std::uint8_t> encode_bundle(const TensorBundle& bundle);
TensorBundle decode_bundle(std::span<const std::uint8_t> bytes);
std::vector<ManifestEntry> read_manifest(std::span<const std::uint8_t> bytes);

// Payload encodings used inside the container.
std::vector<std::uint8_t> encode_packed_payload(const PackedQuantTensor& q);
PackedQuantTensor decode_packed_payload(std::span<const std::uint8_t> payload,
                                        const std::string& name, std::size_t rows,
                                        std::size_t cols, TagSet tags);

void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path);
TensorBundle load_bundle(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace woqt

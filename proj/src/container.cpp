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

#include "woqt/container.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <iterator>
#include <utility>

#include "json.hpp"
#include "woqt/errors.hpp"
#include "woqt/half.hpp"

namespace woqt {
namespace {

using json = nlohmann::json;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw InvalidArgument(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

MappingCode mapping_code(const QuantScheme& s) {
  if (s.mapping() == Mapping::linear) return MappingCode::linear;
  return s.log_mode() == LogScaleMode::absmax ? MappingCode::log_absmax
                                               : MappingCode::log_mse_optimal;
}

std::vector<std::uint8_t> encode_f32_payload(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(t.size() * 4);
  for (const float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_f32_payload(std::span<const std::uint8_t> payload, const std::string& name,
                          std::size_t rows, std::size_t cols, TagSet tags) {
  if (payload.size() != rows * cols * 4) {
    throw CorruptionError("tensor '" + name + "': f32 payload has " +
                          std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(rows * cols * 4));
  }
  std::vector<float> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(payload, 4 * i));
  }
  Tensor t(name, rows, cols, std::move(data), std::move(tags));
  t.validate_finite();
  return t;
}

template <typename T>
T required(const json& obj, const char* key) {
  if (!obj.contains(key)) throw FormatError(std::string("manifest entry lacks '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest field '") + key + "' has the wrong type");
  }
}

struct Framing {
  std::vector<ManifestEntry> entries;
  std::span<const std::uint8_t> payload;
};

Framing parse_framing(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 ||
      !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("not a WOQT1 container (bad magic)");
  }
  const std::uint32_t manifest_len = get_u32(bytes, sizeof(kMagic));
  const std::size_t manifest_at = sizeof(kMagic) + 4;
  if (manifest_len > bytes.size() - manifest_at) {
    throw FormatError("manifest length " + std::to_string(manifest_len) + " exceeds file size");
  }
  json manifest;
  try {
    const auto* first = reinterpret_cast<const char*>(bytes.data() + manifest_at);
    manifest = json::parse(first, first + manifest_len);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("version")) {
    throw FormatError("manifest lacks a version field");
  }
  if (!manifest["version"].is_number_integer() || manifest["version"].get<long long>() != kFormatVersion) {
    throw VersionError("unsupported WOQT1 manifest version " + manifest["version"].dump());
  }
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw FormatError("manifest lacks a tensors array");
  }

  Framing f;
  f.payload = bytes.subspan(manifest_at + manifest_len);
  for (const json& e : manifest["tensors"]) {
    if (!e.is_object()) throw FormatError("manifest tensor entry is not an object");
    ManifestEntry m;
    m.name = required<std::string>(e, "name");
    m.dtype = required<std::string>(e, "dtype");
    m.rows = required<std::size_t>(e, "rows");
    m.cols = required<std::size_t>(e, "cols");
    m.tags = required<std::vector<std::string>>(e, "tags");
    m.byte_offset = required<std::uint64_t>(e, "byte_offset");
    m.byte_length = required<std::uint64_t>(e, "byte_length");
    m.crc32 = required<std::uint32_t>(e, "crc32");
    if (m.dtype != "f32" && m.dtype != "packed") {
      throw FormatError("tensor '" + m.name + "' has unknown dtype '" + m.dtype + "'");
    }
    if (m.byte_offset > f.payload.size() || m.byte_length > f.payload.size() - m.byte_offset) {
      throw CorruptionError("tensor '" + m.name + "' payload lies outside the file");
    }
    f.entries.push_back(std::move(m));
  }
  return f;
}

}  // namespace

const std::string& entry_name(const BundleEntry& e) {
  return std::visit([](const auto& t) -> const std::string& { return t.name(); }, e);
}

const TagSet& entry_tags(const BundleEntry& e) {
  return std::visit([](const auto& t) -> const TagSet& { return t.tags(); }, e);
}

std::size_t entry_rows(const BundleEntry& e) {
  return std::visit([](const auto& t) { return t.rows(); }, e);
}

std::size_t entry_cols(const BundleEntry& e) {
  return std::visit([](const auto& t) { return t.cols(); }, e);
}

bool is_packed(const BundleEntry& e) { return std::holds_alternative<PackedQuantTensor>(e); }

void TensorBundle::add(BundleEntry entry) {
  const std::string name = entry_name(entry);
  if (index_.count(name) != 0) throw InvalidArgument("duplicate tensor name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(std::move(entry));
}

const BundleEntry* TensorBundle::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::string> TensorBundle::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(entry_name(e));
  return out;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_packed_payload(const PackedQuantTensor& q) {
  const QuantScheme& s = q.scheme();
  const GroupLayout& l = q.layout();
  std::vector<std::uint8_t> out;
  out.reserve(kPackedHeaderBytes + q.scales().size() * s.scale_bytes() + q.codes().size());
  put_u8(out, static_cast<std::uint8_t>(s.bits()));
  put_u8(out, static_cast<std::uint8_t>(mapping_code(s)));
  put_u8(out, static_cast<std::uint8_t>(l.kind()));
  put_u32(out, narrow_u32(l.group_size(), "group size"));
  put_u32(out, narrow_u32(l.min_group(), "min group"));
  put_u32(out, l.alpha_milli());
  put_u8(out, static_cast<std::uint8_t>(s.scale_storage() == ScaleStorage::f16
                                            ? ScaleDtypeCode::f16
                                            : ScaleDtypeCode::f32));
  for (const float v : q.scales()) {
    if (s.scale_storage() == ScaleStorage::f16) {
      const std::uint16_t h = float_to_half(v);
      put_u8(out, static_cast<std::uint8_t>(h & 0xFF));
      put_u8(out, static_cast<std::uint8_t>(h >> 8));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  out.insert(out.end(), q.codes().begin(), q.codes().end());
  return out;
}

PackedQuantTensor decode_packed_payload(std::span<const std::uint8_t> payload,
                                        const std::string& name, std::size_t rows,
                                        std::size_t cols, TagSet tags) {
  if (payload.size() < kPackedHeaderBytes) {
    throw CorruptionError("packed tensor '" + name + "': payload shorter than its header");
  }
  const int bits = payload[0];
  const std::uint8_t mapping = payload[1];
  const std::uint8_t kind = payload[2];
  const std::uint32_t group_size = get_u32(payload, 3);
  const std::uint32_t min_group = get_u32(payload, 7);
  const std::uint32_t alpha_milli = get_u32(payload, 11);
  const std::uint8_t scale_dtype = payload[15];

  if (bits < kMinBits || bits > kMaxBits) {
    throw FormatError("packed tensor '" + name + "': bit width " + std::to_string(bits));
  }
  if (mapping > static_cast<std::uint8_t>(MappingCode::log_mse_optimal)) {
    throw FormatError("packed tensor '" + name + "': unknown mapping " + std::to_string(mapping));
  }
  if (kind > static_cast<std::uint8_t>(LayoutKind::adaptive)) {
    throw FormatError("packed tensor '" + name + "': unknown layout kind " + std::to_string(kind));
  }
  if (scale_dtype != static_cast<std::uint8_t>(ScaleDtypeCode::f16) &&
      scale_dtype != static_cast<std::uint8_t>(ScaleDtypeCode::f32)) {
    throw FormatError("packed tensor '" + name + "': unknown scale dtype " +
                      std::to_string(scale_dtype));
  }
  const ScaleStorage storage =
      scale_dtype == static_cast<std::uint8_t>(ScaleDtypeCode::f16) ? ScaleStorage::f16
                                                                      : ScaleStorage::f32;
  const QuantScheme scheme =
      mapping == static_cast<std::uint8_t>(MappingCode::linear)
          ? QuantScheme::linear(bits, storage)
          : QuantScheme::log(bits,
                             mapping == static_cast<std::uint8_t>(MappingCode::log_absmax)
                                 ? LogScaleMode::absmax
                                 : LogScaleMode::mse_optimal,
                             storage);
  GroupLayout layout = GroupLayout::per_column(1, 1);
  try {
    layout = GroupLayout::from_descriptor(static_cast<LayoutKind>(kind), rows, cols, group_size,
                                          min_group, alpha_milli);
  } catch (const InvalidArgument& e) {
    throw FormatError("packed tensor '" + name + "': bad layout descriptor: " + e.what());
  }

  const std::size_t scale_bytes = layout.num_scales() * scheme.scale_bytes();
  const std::size_t code_bytes = packed_column_bytes(rows, bits) * cols;
  if (payload.size() != kPackedHeaderBytes + scale_bytes + code_bytes) {
    throw CorruptionError("packed tensor '" + name + "': payload has " +
                          std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(kPackedHeaderBytes + scale_bytes + code_bytes));
  }
  std::vector<float> scales(layout.num_scales());
  std::size_t at = kPackedHeaderBytes;
  for (float& s : scales) {
    if (storage == ScaleStorage::f16) {
      s = half_to_float(get_u16(payload, at));
      at += 2;
    } else {
      s = std::bit_cast<float>(get_u32(payload, at));
      at += 4;
    }
  }
  std::vector<std::uint8_t> codes(payload.begin() + static_cast<std::ptrdiff_t>(at),
                                  payload.end());
  return PackedQuantTensor(name, scheme, layout, std::move(codes), std::move(scales),
                           std::move(tags));
}

std::vector<std::uint8_t> encode_bundle(const TensorBundle& bundle) {
  std::vector<std::uint8_t> payload;
  json tensors = json::array();
  for (const BundleEntry& e : bundle.entries()) {
    const std::vector<std::uint8_t> bytes =
        std::visit([](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, Tensor>) {
            return encode_f32_payload(t);
          } else {
            return encode_packed_payload(t);
          }
        }, e);
    json entry;
    entry["name"] = entry_name(e);
    entry["dtype"] = is_packed(e) ? "packed" : "f32";
    entry["rows"] = entry_rows(e);
    entry["cols"] = entry_cols(e);
    entry["tags"] = std::vector<std::string>(entry_tags(e).begin(), entry_tags(e).end());
    entry["byte_offset"] = payload.size();
    entry["byte_length"] = bytes.size();
    entry["crc32"] = crc32_of(bytes);
    tensors.push_back(std::move(entry));
    payload.insert(payload.end(), bytes.begin(), bytes.end());
  }
  json manifest;
  manifest["version"] = kFormatVersion;
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, narrow_u32(text.size(), "manifest length"));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<ManifestEntry> read_manifest(std::span<const std::uint8_t> bytes) {
  return parse_framing(bytes).entries;
}

TensorBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  const Framing f = parse_framing(bytes);
  TensorBundle bundle;
  for (const ManifestEntry& m : f.entries) {
    const auto payload = f.payload.subspan(m.byte_offset, m.byte_length);
    if (crc32_of(payload) != m.crc32) {
      throw CorruptionError("tensor '" + m.name + "': checksum mismatch");
    }
    TagSet tags(m.tags.begin(), m.tags.end());
    try {
      if (m.dtype == "f32") {
        bundle.add(decode_f32_payload(payload, m.name, m.rows, m.cols, std::move(tags)));
      } else {
        bundle.add(decode_packed_payload(payload, m.name, m.rows, m.cols, std::move(tags)));
      }
    } catch (const InvalidArgument& e) {
      // Shape problems and duplicate names in a file are framing errors.
      throw FormatError("tensor '" + m.name + "': " + e.what());
    }
  }
  return bundle;
}

void save_bundle(const TensorBundle& bundle, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_bundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

TensorBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return decode_bundle(bytes);
}

}  // namespace woqt

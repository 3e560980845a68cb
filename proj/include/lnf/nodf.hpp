#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lnf/error.hpp"

namespace lnf::nodf {

// Bit-exact dataset/checkpoint container. Byte layout (little-endian):
//   magic "NODF1\0" | version u16 | meta_len u32 | metadata (key=value lines)
//   | count u32 | per component: name_len u16, name, role u8, dtype u8,
//     rank u8, dims u32[rank] | header crc32 u32 | payload.
// Component payloads appear in directory order, row-major, each starting at
// an 8-byte-aligned offset (zero padding). The CRC covers every byte before
// it, so any single-byte header corruption is rejected. Full layout notes
// with a hex-annotated example live in docs/nodf_format.md.
enum class Role : uint8_t { Input = 0, Output = 1, Aux = 2 };
enum class Dtype : uint8_t { F64 = 0, U32 = 1, Bytes = 2 };

struct Component {
  std::string name;
  Role role = Role::Input;
  Dtype dtype = Dtype::F64;
  std::vector<uint32_t> dims;

  std::vector<double> f64;
  std::vector<uint32_t> u32;
  std::vector<uint8_t> bytes;

  uint64_t n_elements() const;
  uint64_t byte_size() const;

  static Component make_f64(std::string name, Role role,
                            std::vector<uint32_t> dims, std::vector<double> data);
  static Component make_u32(std::string name, Role role,
                            std::vector<uint32_t> dims, std::vector<uint32_t> data);
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct NodfFile {
  Metadata metadata;
  std::vector<Component> components;

  const Component* find(const std::string& name) const;
  const Component& at(const std::string& name) const;
  std::string meta(const std::string& key, const std::string& fallback = "") const;
  int64_t n_samples() const;  // dims[0] of the input/output components
};

void write_nodf(const NodfFile& file, const std::filesystem::path& path);
NodfFile read_nodf(const std::filesystem::path& path);

// Encode/decode without touching disk (used by tests and the fuzz suite).
std::vector<uint8_t> encode_nodf(const NodfFile& file);
NodfFile decode_nodf(const std::vector<uint8_t>& bytes);

// Offset of the first payload byte (= size of the CRC-protected header plus
// the CRC field, before alignment padding).
size_t header_size(const std::vector<uint8_t>& encoded);

}  // namespace lnf::nodf

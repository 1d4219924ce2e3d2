#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vihoi::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// Little-endian float32 packing, independent of host byte order.
Bytes pack_f32(std::span<const float> values);
std::vector<float> unpack_f32(std::span<const std::uint8_t> bytes);

// Minimal POSIX ustar archive. Entries keep insertion order; timestamps and
// ownership are zeroed so equal contents give equal bytes.
class Archive {
 public:
  void add(const std::string& name, Bytes bytes);
  void add_text(const std::string& name, std::string_view text);
  bool contains(const std::string& name) const;
  const Bytes& get(const std::string& name) const;
  std::string get_text(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }

  Bytes serialize() const;
  static Archive parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, Bytes> entries_;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(std::string_view text);

}  // namespace vihoi::io

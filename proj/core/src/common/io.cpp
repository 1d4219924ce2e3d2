#include "vihoi/common/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vihoi/common/error.hpp"

namespace vihoi::io {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text(const fs::path& path) {
  const Bytes bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes pack_f32(std::span<const float> values) {
  Bytes out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return out;
}

std::vector<float> unpack_f32(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) fail(ErrorCode::kFormat, "float32 payload size not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ustar

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width includes the terminating NUL.
  std::string digits(width - 1, '0');
  for (std::size_t i = width - 1; i-- > 0 && value;) {
    digits[i] = static_cast<char>('0' + (value & 7));
    value >>= 3;
  }
  std::memcpy(field, digits.data(), width - 1);
  field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i]; ++i) {
    if (field[i] == ' ') continue;
    if (field[i] < '0' || field[i] > '7') fail(ErrorCode::kFormat, "bad octal field in archive");
    v = (v << 3) | static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

}  // namespace

void Archive::add(const std::string& name, Bytes bytes) {
  if (name.empty() || name.size() > 99) fail(ErrorCode::kInvalidArgument, "archive entry name must be 1..99 chars: " + name);
  if (!entries_.contains(name)) order_.push_back(name);
  entries_[name] = std::move(bytes);
}

void Archive::add_text(const std::string& name, std::string_view text) {
  add(name, Bytes(text.begin(), text.end()));
}

bool Archive::contains(const std::string& name) const { return entries_.contains(name); }

const Bytes& Archive::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorCode::kFormat, "archive has no entry " + name);
  return it->second;
}

std::string Archive::get_text(const std::string& name) const {
  const Bytes& b = get(name);
  return std::string(b.begin(), b.end());
}

Bytes Archive::serialize() const {
  Bytes out;
  for (const auto& name : order_) {
    const Bytes& data = entries_.at(name);
    std::uint8_t header[kBlock] = {};
    std::memcpy(header, name.data(), name.size());
    put_octal(header + 100, 8, 0644);
    put_octal(header + 108, 8, 0);
    put_octal(header + 116, 8, 0);
    put_octal(header + 124, 12, data.size());
    put_octal(header + 136, 12, 0);
    std::memset(header + 148, ' ', 8);
    header[156] = '0';
    std::memcpy(header + 257, "ustar", 6);
    header[263] = '0';
    header[264] = '0';
    unsigned checksum = 0;
    for (std::uint8_t c : header) checksum += c;
    put_octal(header + 148, 7, checksum);
    header[155] = ' ';
    out.insert(out.end(), header, header + kBlock);
    out.insert(out.end(), data.begin(), data.end());
    out.resize(out.size() + (kBlock - data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

Archive Archive::parse(std::span<const std::uint8_t> bytes) {
  Archive archive;
  std::size_t pos = 0;
  while (pos + kBlock <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    if (std::all_of(header, header + kBlock, [](std::uint8_t c) { return c == 0; })) break;
    unsigned checksum = 0;
    for (std::size_t i = 0; i < kBlock; ++i) checksum += (i >= 148 && i < 156) ? ' ' : header[i];
    if (checksum != get_octal(header + 148, 8)) fail(ErrorCode::kFormat, "archive header checksum mismatch");
    const std::string name(reinterpret_cast<const char*>(header), strnlen(reinterpret_cast<const char*>(header), 100));
    const std::uint64_t size = get_octal(header + 124, 12);
    pos += kBlock;
    if (pos + size > bytes.size()) fail(ErrorCode::kFormat, "truncated archive entry " + name);
    archive.add(name, Bytes(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + size)));
    pos += size + (kBlock - size % kBlock) % kBlock;
  }
  return archive;
}

void Archive::save(const fs::path& path) const { write_file_atomic(path, serialize()); }

Archive Archive::load(const fs::path& path) { return parse(read_file(path)); }

// ---------------------------------------------------------------------------

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += (i + 1 < bytes.size()) ? kB64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  Bytes out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' ) break;
    if (c == '\n' || c == '\r' || c == ' ') continue;
    const int v = value(c);
    if (v < 0) fail(ErrorCode::kFormat, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace vihoi::io

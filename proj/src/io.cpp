#include "ctxf/io.hpp"

#include <bit>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace ctxf::io {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
  return is;
}

bool is_little_endian_host() { return std::endian::native == std::endian::little; }

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

void write_f32s(std::ostream& os, const float* data, std::size_t n) {
  if (is_little_endian_host()) {
    write_bytes(os, data, n * sizeof(float));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    write_u32(os, bits);
  }
}

std::uint32_t read_u32(std::istream& is, const std::string& context) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw std::runtime_error("truncated file while reading " + context);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void read_bytes(std::istream& is, void* data, std::size_t n, const std::string& context) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw std::runtime_error("truncated file while reading " + context);
}

std::string read_string(std::istream& is, const std::string& context) {
  std::uint32_t n = read_u32(is, context + " length");
  if (n > (1u << 20)) throw std::runtime_error("implausible string length in " + context);
  std::string s(n, '\0');
  if (n > 0) read_bytes(is, s.data(), n, context);
  return s;
}

void read_f32s(std::istream& is, float* data, std::size_t n, const std::string& context) {
  if (is_little_endian_host()) {
    read_bytes(is, data, n * sizeof(float), context);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = read_u32(is, context);
    std::memcpy(&data[i], &bits, 4);
  }
}

void expect_magic(std::istream& is, const char magic[4], const std::string& path) {
  char got[4];
  is.read(got, 4);
  if (is.gcount() != 4 || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error("'" + path + "' is not a " + std::string(magic, 4) + " file");
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream is = open_in(path);
  is.seekg(0, std::ios::end);
  std::streamoff size = is.tellg();
  is.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  if (size > 0) read_bytes(is, buf.data(), buf.size(), "'" + path + "'");
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os = open_out(path);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace ctxf::io

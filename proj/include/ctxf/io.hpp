#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace ctxf::io {

// Little-endian binary primitives shared by every on-disk container. All
// readers throw std::runtime_error naming the file and the field that failed,
// so a truncated or foreign file is reported precisely instead of yielding
// garbage values.

std::ofstream open_out(const std::string& path);
std::ifstream open_in(const std::string& path);

void write_u32(std::ostream& os, std::uint32_t v);
void write_bytes(std::ostream& os, const void* data, std::size_t n);
void write_string(std::ostream& os, const std::string& s);  // u32 length + bytes
void write_f32s(std::ostream& os, const float* data, std::size_t n);

std::uint32_t read_u32(std::istream& is, const std::string& context);
void read_bytes(std::istream& is, void* data, std::size_t n, const std::string& context);
std::string read_string(std::istream& is, const std::string& context);
void read_f32s(std::istream& is, float* data, std::size_t n, const std::string& context);

// Reads and verifies a 4-byte magic token at the current position.
void expect_magic(std::istream& is, const char magic[4], const std::string& path);

bool is_little_endian_host();

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ctxf::io

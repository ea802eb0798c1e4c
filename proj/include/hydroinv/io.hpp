#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hydroinv/matrix.hpp"

namespace hydroinv::io {

/// Shortest form that still reads back exactly (17 significant digits).
std::string format_double(double v);
/// Strict parse of a complete decimal field; throws InputError on trailing junk.
double parse_double(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Comma-separated, one row per line, optional header line.
void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& header = {});
void write_matrix_file(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});
/// When `has_header` the first line is returned through `header`.
Matrix read_matrix(std::istream& in, bool has_header, std::vector<std::string>* header = nullptr);
Matrix read_matrix_file(const std::string& path, bool has_header, std::vector<std::string>* header = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// FNV-1a 64-bit hash, hex encoded; used as the input digest in manifests.
std::string digest(std::string_view bytes);
std::string file_digest(const std::string& path);

void write_f64_le(std::ostream& out, const std::vector<double>& values);
std::vector<double> read_f64_le(std::istream& in, std::size_t count);

}  // namespace hydroinv::io

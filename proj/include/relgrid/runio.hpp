#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relgrid {

/// Minimal CSV table: first row may be a header, cells kept as strings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path, bool has_header = true);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

double parse_double(const std::string& cell, const std::string& context);
int parse_int(const std::string& cell, const std::string& context);

/// FNV-1a 64-bit digest, hex-encoded; used for input digests in run manifests.
std::string fnv1a64_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

/// Fixed-format float used in emitted CSVs so outputs are byte-stable.
std::string format_number(double x, int precision = 10);

}  // namespace relgrid

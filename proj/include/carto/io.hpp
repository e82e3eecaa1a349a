#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace carto::io {

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, no embedded
/// newlines. Blank lines and lines starting with '#' are skipped.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path, char delimiter = ',');

  /// Reads the next record. Returns false at end of file.
  bool next(std::vector<std::string>& fields);

  std::size_t line_number() const noexcept { return line_no_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  char delim_;
  std::size_t line_no_ = 0;
  std::string line_;
};

std::vector<std::string> split_record(std::string_view line, char delimiter,
                                      std::size_t line_no);

std::string csv_field(std::string_view value);

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

double parse_double(std::string_view text, const std::filesystem::path& path,
                    std::size_t line_no);
long long parse_integer(std::string_view text,
                        const std::filesystem::path& path, std::size_t line_no);

std::ofstream open_output(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

std::string trim(std::string_view text);

}  // namespace carto::io

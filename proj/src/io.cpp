#include "carto/io.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "carto/error.hpp"

namespace carto::io {

CsvReader::CsvReader(const std::filesystem::path& path, char delimiter)
    : path_(path), in_(path), delim_(delimiter) {
  if (!in_) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
}

bool CsvReader::next(std::vector<std::string>& fields) {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (line_no_ == 1 && line_.starts_with("\xEF\xBB\xBF")) line_.erase(0, 3);
    const auto first = line_.find_first_not_of(" \t");
    if (first == std::string::npos || line_[first] == '#') continue;
    fields = split_record(line_, delim_, line_no_);
    return true;
  }
  return false;
}

std::vector<std::string> split_record(std::string_view line, char delimiter,
                                      std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (ch == delimiter) {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::Parse,
                fmt::format("line {}: unterminated quoted field", line_no));
  }
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) { return fmt::format("{}", value); }

double parse_double(std::string_view text, const std::filesystem::path& path,
                    std::size_t line_no) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::Parse,
                fmt::format("{}:{}: expected a number, got '{}'",
                            path.string(), line_no, text));
  }
  return value;
}

long long parse_integer(std::string_view text,
                        const std::filesystem::path& path,
                        std::size_t line_no) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::Parse,
                fmt::format("{}:{}: expected an integer, got '{}'",
                            path.string(), line_no, text));
  }
  return value;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  auto out = open_output(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view text) {
  const auto b = text.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = text.find_last_not_of(" \t");
  return std::string(text.substr(b, e - b + 1));
}

}  // namespace carto::io

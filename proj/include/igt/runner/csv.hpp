#ifndef IGT_RUNNER_CSV_HPP
#define IGT_RUNNER_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace igt::runner {

/// Formats a double with 17 significant digits; NaN and infinities are
/// written as nan / inf / -inf.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Header line first, comma separated, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    write_fields(header);
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_)
      throw std::logic_error("CsvWriter: row width does not match header");
    std::string line;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (k) line += ',';
      line += format_double(values[k]);
    }
    line += '\n';
    out_ << line;
  }

  /// Row with a leading integer step column.
  void row(std::uint64_t t, const std::vector<double>& values) {
    if (values.size() + 1 != columns_)
      throw std::logic_error("CsvWriter: row width does not match header");
    std::string line = std::to_string(t);
    for (double v : values) {
      line += ',';
      line += format_double(v);
    }
    line += '\n';
    out_ << line;
  }

  void close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("CsvWriter: write failed");
  }

 private:
  void write_fields(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) line += ',';
      line += fields[k];
    }
    line += '\n';
    out_ << line;
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace igt::runner

#endif  // IGT_RUNNER_CSV_HPP

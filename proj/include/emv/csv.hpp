#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace emv {

/// Six significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_number(double v);

/// Provenance line written before the column header.
struct CsvProvenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string mode;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  /// Throws std::invalid_argument if the row width differs from the header.
  void add_row(std::vector<std::string> row);
  void append(const CsvTable& other);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// "# config_hash=...,seed=...,mode=..." then the header and rows.
void write_csv(std::ostream& out, const CsvProvenance& provenance, const CsvTable& table);

/// 64-bit FNV-1a, printed as 16 hex digits by `hex64`.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& text, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace emv

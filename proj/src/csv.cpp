#include "emv/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace emv {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw std::invalid_argument("csv row width does not match header");
  rows_.push_back(std::move(row));
}

void CsvTable::append(const CsvTable& other) {
  if (other.columns_ != columns_) throw std::invalid_argument("csv tables have different columns");
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

namespace {

void write_fields(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

}  // namespace

void write_csv(std::ostream& out, const CsvProvenance& provenance, const CsvTable& table) {
  out << "# config_hash=" << provenance.config_hash << ",seed=" << provenance.seed << ",mode=" << provenance.mode
      << '\n';
  write_fields(out, table.columns());
  for (const auto& row : table.rows()) write_fields(out, row);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t basis) { return fnv1a(text.data(), text.size(), basis); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace emv

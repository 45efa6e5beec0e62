#include "nnmpc/harness/csv.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "nnmpc/errors.h"

namespace nnmpc::harness {

int CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw InvalidArgument(fmt::format("CSV has no column '{}'", name));
}

bool CsvTable::HasColumn(const std::string& name) const {
  for (const std::string& h : header) {
    if (h == name) return true;
  }
  return false;
}

double CsvTable::Number(std::size_t row, int column) const {
  const std::string& cell = rows.at(row).at(column);
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str()) {
    throw InvalidArgument(fmt::format("CSV cell '{}' is not a number", cell));
  }
  return v;
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void WriteCsv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw FileError(fmt::format("cannot write '{}'", path));
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw FileError(fmt::format("failed writing '{}'", path));
}

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError(fmt::format("CSV file '{}' not found", path));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument(fmt::format("CSV file '{}' is empty", path));
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = SplitLine(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = SplitLine(line);
    if (cells.size() != table.header.size()) {
      throw InvalidArgument(fmt::format(
          "CSV file '{}' has a row with {} cells, header has {}", path,
          cells.size(), table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

void WriteMatrixCsv(const std::string& path,
                    const std::vector<std::string>& header,
                    const Eigen::MatrixXd& data) {
  if (static_cast<Eigen::Index>(header.size()) != data.cols()) {
    throw InvalidArgument("header width does not match the data");
  }
  CsvTable t;
  t.header = header;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    std::vector<std::string> row;
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      row.push_back(FormatNumber(data(r, c)));
    }
    t.rows.push_back(std::move(row));
  }
  WriteCsv(path, t);
}

Eigen::MatrixXd ReadMatrixCsv(const std::string& path,
                              std::vector<std::string>* header) {
  const CsvTable t = ReadCsv(path);
  Eigen::MatrixXd m(t.rows.size(), t.header.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      m(r, c) = t.Number(r, static_cast<int>(c));
    }
  }
  if (header) *header = t.header;
  return m;
}

}  // namespace nnmpc::harness

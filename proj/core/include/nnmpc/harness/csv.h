#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nnmpc::harness {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws InvalidArgument when absent.
  int Column(const std::string& name) const;
  bool HasColumn(const std::string& name) const;
  double Number(std::size_t row, int column) const;
};

// Shortest representation that parses back to the same double.
std::string FormatNumber(double value);

void WriteCsv(const std::string& path, const CsvTable& table);
CsvTable ReadCsv(const std::string& path);

// Numeric matrix with a header row.
void WriteMatrixCsv(const std::string& path,
                    const std::vector<std::string>& header,
                    const Eigen::MatrixXd& data);
Eigen::MatrixXd ReadMatrixCsv(const std::string& path,
                              std::vector<std::string>* header = nullptr);

}  // namespace nnmpc::harness

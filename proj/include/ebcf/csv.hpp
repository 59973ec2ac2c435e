#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ebcf/common.hpp"

namespace ebcf {

/// Strictly numeric CSV table: one header row, comma separation, no quoting.
/// Ragged rows or non-numeric cells are hard errors naming the row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position, or -1 when absent.
  int column(const std::string& name) const;
  Index n_rows() const { return static_cast<Index>(rows.size()); }
};

CsvTable read_csv(const std::string& path);

/// Output column; integer columns are formatted without a decimal point.
struct CsvColumn {
  std::string name;
  std::vector<double> values;
  bool integer = false;
};

/// Writes columns of equal length. Doubles use shortest round-trip
/// formatting, so identical values give identical bytes.
void write_csv(const std::string& path, const std::vector<CsvColumn>& columns);

std::string format_double(double v);

/// In-memory form of a dataset file: covariates x0..x{d-1}, observation z,
/// noise s.d. sigma, optional ground-truth mu, optional explicit index.
struct Dataset {
  MatrixXd X;  // n x d, d may be 0
  VectorXd z;
  VectorXd sigma;
  VectorXd mu;  // empty unless has_mu
  bool has_mu = false;
  std::vector<Index> index;  // defaults to row order
};

Dataset load_dataset(const std::string& path);

/// Predictions file with header `index,prediction`; indices must be unique.
std::unordered_map<Index, double> load_predictions(const std::string& path);

}  // namespace ebcf

#include "ebcf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ebcf {

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = trim(raw);
  if (cell.empty()) {
    throw std::invalid_argument("csv: missing value at row " + std::to_string(row) +
                                ", column " + std::to_string(col));
  }
  double value;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::invalid_argument("csv: non-numeric value '" + cell + "' at row " +
                                std::to_string(row) + ", column " + std::to_string(col));
  }
  return value;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("csv: cannot open '" + path + "'");

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("csv: '" + path + "' is empty");
  }
  for (const auto& name : split_line(line)) table.header.push_back(trim(name));

  std::size_t row = 1;  // header is row 0
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++row;
      continue;
    }
    const auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw std::invalid_argument("csv: row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(table.header.size()));
    }
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) parsed[c] = parse_cell(cells[c], row, c);
    table.rows.push_back(std::move(parsed));
    ++row;
  }
  return table;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns) {
  if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
  const std::size_t n = columns.front().values.size();
  for (const auto& col : columns) {
    if (col.values.size() != n) {
      throw std::invalid_argument("write_csv: column '" + col.name +
                                  "' length differs from the first column");
    }
  }

  std::ofstream out(path, std::ios::binary);  // binary keeps \n on every platform
  if (!out) throw std::invalid_argument("write_csv: cannot open '" + path + "' for writing");

  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << columns[c].name;
  }
  out << '\n';
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      if (columns[c].integer) {
        out << static_cast<long long>(columns[c].values[r]);
      } else {
        out << format_double(columns[c].values[r]);
      }
    }
    out << '\n';
  }
  if (!out) throw std::invalid_argument("write_csv: failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int z_col = table.column("z");
  const int sigma_col = table.column("sigma");
  if (z_col < 0 || sigma_col < 0) {
    throw std::invalid_argument("dataset: '" + path + "' must have 'z' and 'sigma' columns");
  }
  const int mu_col = table.column("mu");
  const int index_col = table.column("index");

  // Covariates are x0..x{d-1}, required to be contiguous from x0.
  int dim = 0;
  while (table.column("x" + std::to_string(dim)) >= 0) ++dim;

  const Index n = table.n_rows();
  if (n == 0) throw std::invalid_argument("dataset: '" + path + "' has no data rows");

  Dataset data;
  data.X.resize(n, dim);
  data.z.resize(n);
  data.sigma.resize(n);
  data.has_mu = mu_col >= 0;
  if (data.has_mu) data.mu.resize(n);
  data.index.resize(static_cast<std::size_t>(n));

  std::vector<int> x_cols(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) x_cols[static_cast<std::size_t>(d)] = table.column("x" + std::to_string(d));

  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    data.z(i) = row[static_cast<std::size_t>(z_col)];
    data.sigma(i) = row[static_cast<std::size_t>(sigma_col)];
    if (!(data.sigma(i) > 0.0)) {
      throw std::invalid_argument("dataset: sigma must be positive at row " +
                                  std::to_string(i + 1));
    }
    if (data.has_mu) data.mu(i) = row[static_cast<std::size_t>(mu_col)];
    for (int d = 0; d < dim; ++d) {
      data.X(i, d) = row[static_cast<std::size_t>(x_cols[static_cast<std::size_t>(d)])];
    }
    data.index[static_cast<std::size_t>(i)] =
        index_col >= 0 ? static_cast<Index>(row[static_cast<std::size_t>(index_col)]) : i;
  }
  return data;
}

std::unordered_map<Index, double> load_predictions(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int index_col = table.column("index");
  const int pred_col = table.column("prediction");
  if (index_col < 0 || pred_col < 0) {
    throw std::invalid_argument("predictions: '" + path +
                                "' must have 'index' and 'prediction' columns");
  }
  std::unordered_map<Index, double> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const Index idx = static_cast<Index>(table.rows[r][static_cast<std::size_t>(index_col)]);
    if (!out.emplace(idx, table.rows[r][static_cast<std::size_t>(pred_col)]).second) {
      throw std::invalid_argument("predictions: duplicate index " + std::to_string(idx) +
                                  " at row " + std::to_string(r + 1));
    }
  }
  if (out.empty()) throw std::invalid_argument("predictions: '" + path + "' has no rows");
  return out;
}

}  // namespace ebcf

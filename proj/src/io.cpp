#include "rsr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rsr {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

Index CsvTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == name) return static_cast<Index>(i);
  }
  throw Error(Errc::io_error, "no column named '" + name + "'");
}

Vector CsvTable::numeric_column(const std::string& name) const {
  const Index c = column_index(name);
  Vector v(n_rows());
  for (Index r = 0; r < n_rows(); ++r) {
    const std::string& cell = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
    if (cell.empty()) {
      throw Error(Errc::io_error, "missing value in column '" + name + "' at data row " +
                                      std::to_string(r + 1));
    }
    size_t consumed = 0;
    try {
      v[r] = std::stod(cell, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != cell.size()) {
      throw Error(Errc::io_error, "non-numeric value '" + cell + "' in column '" + name +
                                      "' at data row " + std::to_string(r + 1));
    }
  }
  return v;
}

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  CsvTable t;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno > 1 && line.find_first_not_of(" \t\r") == std::string::npos)) {
      continue;
    }
    auto fields = split_csv_line(line);
    if (lineno == 1) {
      t.headers = std::move(fields);
      continue;
    }
    if (fields.size() != t.headers.size()) {
      throw Error(Errc::io_error, path + ":" + std::to_string(lineno) + ": expected " +
                                      std::to_string(t.headers.size()) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.headers.empty()) throw Error(Errc::io_error, path + ": missing header row");
  return t;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  for (size_t i = 0; i < headers.size(); ++i) {
    out << headers[i] << (i + 1 < headers.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
  }
}

Vector Dataset::log_offset() const {
  if (expected.size() == 0) return Vector();
  Vector off(expected.size());
  for (Index i = 0; i < expected.size(); ++i) {
    if (!(expected[i] > 0.0)) {
      throw Error(Errc::invalid_parameter,
                  "expected count must be positive at row " + std::to_string(i + 1));
    }
    off[i] = std::log(expected[i]);
  }
  return off;
}

Dataset Dataset::from_csv(const std::string& path, const std::string& response_col,
                          const std::vector<std::string>& covariate_cols,
                          const std::optional<std::string>& offset_col) {
  const CsvTable t = CsvTable::read(path);
  Dataset d;
  d.response = t.numeric_column(response_col);
  d.covariates.resize(t.n_rows(), static_cast<Index>(covariate_cols.size()));
  for (size_t j = 0; j < covariate_cols.size(); ++j) {
    d.covariates.col(static_cast<Index>(j)) = t.numeric_column(covariate_cols[j]);
  }
  d.covariate_names = covariate_cols;
  if (offset_col) d.expected = t.numeric_column(*offset_col);
  return d;
}

}  // namespace rsr

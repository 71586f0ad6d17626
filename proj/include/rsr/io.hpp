#pragma once

#include "rsr/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rsr {

std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  Index n_rows() const { return static_cast<Index>(rows.size()); }
  Index column_index(const std::string& name) const;
  Vector numeric_column(const std::string& name) const;

  static CsvTable read(const std::string& path);
  void write(const std::string& path) const;
};

// Response, covariates and optional expected counts for one areal dataset.
// Expected counts are kept raw; the model layer takes their log as offset.
struct Dataset {
  Vector response;
  Matrix covariates;  // n x k, column order follows the declared roles
  std::vector<std::string> covariate_names;
  Vector expected;  // raw expected counts; empty when absent

  Index n() const { return response.size(); }
  Vector log_offset() const;

  static Dataset from_csv(const std::string& path, const std::string& response_col,
                          const std::vector<std::string>& covariate_cols,
                          const std::optional<std::string>& offset_col = std::nullopt);
};

}  // namespace rsr

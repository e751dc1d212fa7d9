#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffit/errors.hpp"

namespace ffit {

struct ObservableSpec {
  std::string name;
  double lower;
  double upper;
};

// Immutable column-major table. One contiguous double column per observable;
// batch kernels read these columns directly.
class DataSet {
 public:
  DataSet() = default;
  DataSet(std::vector<std::string> names, std::vector<std::vector<double>> columns);

  struct LoadResult;  // defined below: needs the complete DataSet type

  // CSV: comma separated, '.' decimal point, first line is a header,
  // no quoting. Rows with any value outside its observable's range are
  // dropped and counted.
  static LoadResult from_csv(const std::string& path,
                             std::span<const ObservableSpec> schema);

  void write_csv(const std::string& path) const;

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_columns() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool has_column(std::string_view name) const;
  std::span<const double> column(std::string_view name) const;
  std::map<std::string, double> row(std::size_t i) const;

 private:
  std::size_t column_index(std::string_view name) const;

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::size_t n_rows_ = 0;
};

struct DataSet::LoadResult {
  DataSet data;
  std::size_t dropped = 0;  // rows outside an observable's range
};

}  // namespace ffit

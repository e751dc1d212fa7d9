#include "ffit/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ffit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    std::size_t i = 0;
    while (i < f.size() && f[i] == ' ') ++i;
    f.erase(0, i);
  }
  return fields;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::Data, "unparsable numeric cell at row " +
                                     std::to_string(row) + ", column '" + col + "': '" +
                                     cell + "'");
  }
  return v;
}

}  // namespace

DataSet::DataSet(std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size()) {
    throw Error(ErrorCode::Usage, "column name/data count mismatch");
  }
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& c : columns_) {
    if (c.size() != n_rows_) {
      throw Error(ErrorCode::Usage, "columns have unequal lengths");
    }
  }
}

DataSet::LoadResult DataSet::from_csv(const std::string& path,
                                      std::span<const ObservableSpec> schema) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Data, "cannot open file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::Data, "empty file: " + path);
  }
  const std::vector<std::string> header = split_csv_line(line);

  // Map each schema observable to its file column (order-insensitive).
  std::vector<std::size_t> file_index(schema.size());
  for (std::size_t s = 0; s < schema.size(); ++s) {
    bool found = false;
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == schema[s].name) {
        file_index[s] = h;
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::Data,
                  "missing column '" + schema[s].name + "' in " + path);
    }
  }

  std::vector<std::vector<double>> cols(schema.size());
  std::vector<double> parsed(schema.size());
  std::size_t dropped = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      throw Error(ErrorCode::Data, "row " + std::to_string(row) + " has " +
                                       std::to_string(fields.size()) +
                                       " fields, header has " +
                                       std::to_string(header.size()));
    }
    bool in_range = true;
    for (std::size_t s = 0; s < schema.size(); ++s) {
      const double v = parse_double(fields[file_index[s]], row, schema[s].name);
      parsed[s] = v;
      if (!(v >= schema[s].lower && v <= schema[s].upper)) in_range = false;
    }
    if (!in_range) {
      ++dropped;
      continue;
    }
    for (std::size_t s = 0; s < schema.size(); ++s) cols[s].push_back(parsed[s]);
  }

  std::vector<std::string> names;
  names.reserve(schema.size());
  for (const auto& s : schema) names.push_back(s.name);
  return LoadResult{DataSet(std::move(names), std::move(cols)), dropped};
}

void DataSet::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::Data, "cannot write file: " + path);
  }
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (c) out << ',';
    out << names_[c];
  }
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out << ',';
      // Round-trip exact formatting.
      const int len = std::snprintf(buf, sizeof(buf), "%.17g", columns_[c][i]);
      out.write(buf, len);
    }
    out << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::Data, "write failed: " + path);
  }
}

bool DataSet::has_column(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t DataSet::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw Error(ErrorCode::Data, "unknown column: " + std::string(name));
}

std::span<const double> DataSet::column(std::string_view name) const {
  return columns_[column_index(name)];
}

std::map<std::string, double> DataSet::row(std::size_t i) const {
  if (i >= n_rows_) {
    throw Error(ErrorCode::Usage, "row index " + std::to_string(i) +
                                      " out of bounds (n_rows=" +
                                      std::to_string(n_rows_) + ")");
  }
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < names_.size(); ++c) out[names_[c]] = columns_[c][i];
  return out;
}

}  // namespace ffit

#include "zimp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace zimp {

std::string format_double(double v) {
  if (std::isnan(v)) return "na";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  const Index d = ds.dim();
  for (Index j = 0; j < d; ++j) out << "x_" << j << ',';
  out << 'y';
  for (Index j = 0; j < d; ++j) out << ",p_" << j;
  out << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < d; ++j) out << format_double(ds.X(i, j)) << ',';
    out << format_double(ds.y(i));
    for (Index j = 0; j < d; ++j) out << ',' << (ds.P(i, j) != 0.0 ? '1' : '0');
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

RawDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: empty file " + path);
  const auto header = split_csv_line(line);
  // Header layout pins d.
  Index d = 0;
  while (d < static_cast<Index>(header.size()) &&
         header[static_cast<std::size_t>(d)] == "x_" + std::to_string(d))
    ++d;
  if (d == 0 || static_cast<std::size_t>(2 * d + 1) != header.size() ||
      header[static_cast<std::size_t>(d)] != "y")
    throw std::runtime_error("read_dataset_csv: unrecognized header in " + path);

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != static_cast<std::size_t>(2 * d + 1))
      throw std::runtime_error("read_dataset_csv: line " + std::to_string(lineno) +
                               " has " + std::to_string(fields.size()) + " fields");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw std::runtime_error("read_dataset_csv: line " + std::to_string(lineno) +
                                 " has a non-numeric field '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }

  RawDataset ds;
  const Index n = static_cast<Index>(rows.size());
  ds.X.resize(n, d);
  ds.y.resize(n);
  ds.P.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < d; ++j) ds.X(i, j) = row[static_cast<std::size_t>(j)];
    ds.y(i) = row[static_cast<std::size_t>(d)];
    for (Index j = 0; j < d; ++j) {
      const double p = row[static_cast<std::size_t>(d + 1 + j)];
      if (p != 0.0 && p != 1.0)
        throw std::runtime_error("read_dataset_csv: mask entry not in {0,1} at line " +
                                 std::to_string(i + 2));
      ds.P(i, j) = p;
    }
  }
  return ds;
}

}  // namespace zimp

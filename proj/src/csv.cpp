#include "auq/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace auq {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_cell(const std::string& cell, int data_row,
                  const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::runtime_error("csv: cell '" + cell + "' at row " +
                             std::to_string(data_row) + ", column '" + column +
                             "' is not numeric");
  }
  return value;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

using HeaderCheck = void (*)(const std::vector<std::string>&, const void*);

RawCsv read_raw(const std::filesystem::path& path,
                HeaderCheck check = nullptr, const void* check_arg = nullptr) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("csv: '" + path.string() + "' is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  RawCsv raw;
  raw.header = split_line(line);
  if (raw.header.empty()) {
    throw std::runtime_error("csv: header row is empty");
  }
  if (check != nullptr) {
    check(raw.header, check_arg);
  }
  int data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++data_row;
    const auto cells = split_line(line);
    if (cells.size() != raw.header.size()) {
      throw std::runtime_error(
          "csv: row " + std::to_string(data_row) + " has " +
          std::to_string(cells.size()) + " cells, header has " +
          std::to_string(raw.header.size()));
    }
    std::vector<double> parsed;
    parsed.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      parsed.push_back(parse_cell(cells[c], data_row, raw.header[c]));
    }
    raw.rows.push_back(std::move(parsed));
  }
  if (raw.rows.empty()) {
    throw std::runtime_error("csv: '" + path.string() + "' has no data rows");
  }
  return raw;
}

Dataset build_dataset(RawCsv raw, std::size_t target) {
  const auto n = raw.rows.size();
  const auto total = raw.header.size();
  if (total < 2) {
    throw std::runtime_error("csv: need at least one feature column");
  }
  Eigen::MatrixXd inputs(n, total - 1);
  Eigen::MatrixXd targets(n, 1);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < total; ++c) {
    if (c != target) names.push_back(raw.header[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index feature = 0;
    for (std::size_t c = 0; c < total; ++c) {
      if (c == target) {
        targets(static_cast<Eigen::Index>(i), 0) = raw.rows[i][c];
      } else {
        inputs(static_cast<Eigen::Index>(i), feature++) = raw.rows[i][c];
      }
    }
  }
  Dataset ds = Dataset::regression(std::move(inputs), std::move(targets));
  ds.feature_names = std::move(names);
  return ds;
}

void write_value(std::ostream& out, double v) {
  char buf[40];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc{}) {
    throw std::runtime_error("csv: failed to format value");
  }
  out.write(buf, ptr - buf);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path,
                 const std::string& target_column) {
  const auto check = +[](const std::vector<std::string>& header,
                         const void* arg) {
    const auto& name = *static_cast<const std::string*>(arg);
    for (const auto& col : header) {
      if (col == name) return;
    }
    throw std::runtime_error("csv: target column '" + name + "' not found");
  };
  RawCsv raw = read_raw(path, check, &target_column);
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (raw.header[c] == target_column) {
      return build_dataset(std::move(raw), c);
    }
  }
  throw std::runtime_error("csv: target column '" + target_column +
                           "' not found");
}

Dataset load_csv(const std::filesystem::path& path, int target_column) {
  const auto check = +[](const std::vector<std::string>& header,
                         const void* arg) {
    const int index = *static_cast<const int*>(arg);
    if (index < 0 || static_cast<std::size_t>(index) >= header.size()) {
      throw std::runtime_error("csv: target column index " +
                               std::to_string(index) + " outside [0, " +
                               std::to_string(header.size()) + ")");
    }
  };
  RawCsv raw = read_raw(path, check, &target_column);
  return build_dataset(std::move(raw), static_cast<std::size_t>(target_column));
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
  if (ds.classification()) {
    throw std::invalid_argument("save_csv: only regression datasets");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot write '" + path.string() + "'");
  }
  const auto d = ds.dim();
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool named = static_cast<std::size_t>(j) < ds.feature_names.size();
    out << (named ? ds.feature_names[static_cast<std::size_t>(j)]
                  : "x" + std::to_string(j))
        << ',';
  }
  for (Eigen::Index j = 0; j < ds.target_dim(); ++j) {
    out << 'y' << j << (j + 1 < ds.target_dim() ? "," : "");
  }
  out << '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      write_value(out, ds.inputs(i, j));
      out << ',';
    }
    for (Eigen::Index j = 0; j < ds.target_dim(); ++j) {
      write_value(out, ds.targets(i, j));
      if (j + 1 < ds.target_dim()) out << ',';
    }
    out << '\n';
  }
}

void save_table(const std::filesystem::path& path,
                const std::vector<std::string>& columns,
                const Eigen::MatrixXd& values) {
  if (columns.empty() ||
      static_cast<Eigen::Index>(columns.size()) != values.cols()) {
    throw std::invalid_argument("save_table: header/column count mismatch");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot write '" + path.string() + "'");
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << columns[c] << (c + 1 < columns.size() ? "," : "");
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      write_value(out, values(i, j));
      if (j + 1 < values.cols()) out << ',';
    }
    out << '\n';
  }
}

Table load_table(const std::filesystem::path& path) {
  RawCsv raw = read_raw(path);
  Table t;
  t.columns = raw.header;
  t.values.resize(static_cast<Eigen::Index>(raw.rows.size()),
                  static_cast<Eigen::Index>(raw.header.size()));
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    for (std::size_t j = 0; j < raw.header.size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          raw.rows[i][j];
    }
  }
  return t;
}

}  // namespace auq

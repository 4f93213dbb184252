#pragma once
// Plain-CSV ingestion and emission: UTF-8, comma-separated, mandatory header
// row, decimal-point reals, no quoting.

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "auq/dataset.hpp"

namespace auq {

// A regression Dataset whose target is the named header column; every other
// column becomes a feature, row order preserved. Throws on a missing file,
// an absent target column, ragged rows, or a non-numeric cell (the message
// cites the 1-based data row and the column name).
Dataset load_csv(const std::filesystem::path& path,
                 const std::string& target_column);

// Same, target chosen by 0-based column index.
Dataset load_csv(const std::filesystem::path& path, int target_column);

// Inverse of load_csv: features first (stored names, or x0..x{d-1}), then
// target columns y0..y{k-1}. Values printed with enough digits that a
// round-trip reload is bit-exact.
void save_csv(const std::filesystem::path& path, const Dataset& ds);

// Generic numeric table writer for report artifacts.
void save_table(const std::filesystem::path& path,
                const std::vector<std::string>& columns,
                const Eigen::MatrixXd& values);

// Reads a numeric table back; returns header + values.
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};
Table load_table(const std::filesystem::path& path);

}  // namespace auq

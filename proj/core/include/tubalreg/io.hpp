#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tubalreg/dataset.hpp"
#include "tubalreg/model.hpp"
#include "tubalreg/solver.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg::io {

namespace fs = std::filesystem;

/// Binary tensor file: "TB31", d1, d2, d3 as little-endian u64, then
/// d1*d2*d3 little-endian f64 in slice-major order.
void write_tb3(const fs::path& path, const Tensor3& t);
Tensor3 read_tb3(const fs::path& path);

/// Comma-separated numeric matrix as a d1 x d2 x 1 tensor.
Tensor3 read_csv_matrix(const fs::path& path);

enum class DatasetLayout { Stacked, PerSample };

/// Directory with manifest.json, y.csv and either X.tb3 (samples stacked
/// along mode 3, d1 x d2 x (d3*n)) or X_<i>.tb3 per sample.
void save_dataset(const fs::path& dir, const Dataset& data,
                  DatasetLayout layout = DatasetLayout::Stacked);
Dataset load_dataset(const fs::path& dir);

void write_trace_csv(const fs::path& path, std::span<const IterationRecord> trace);
std::vector<IterationRecord> read_trace_csv(const fs::path& path);

/// Fold rows of each grid point followed by an aggregate row with fold "all";
/// only the aggregate row of the chosen point has selected = 1. Rows must be
/// grouped by grid point, as in CvResult::table.
void write_cv_csv(const fs::path& path, std::span<const CvRow> rows);

/// Grayscale PGM of the mean frontal slice, min..max mapped to 0..255.
void write_pgm(const fs::path& path, const Tensor3& t);

/// Writes `text` to `path` atomically (temp file + rename).
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Shortest round-tripping decimal form.
std::string format_double(double v);

}  // namespace tubalreg::io

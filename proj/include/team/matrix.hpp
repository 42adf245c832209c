#ifndef TEAM_MATRIX_HPP
#define TEAM_MATRIX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace team {

// N x p expression table with per-row cohort labels. Immutable by convention
// after construction; all pipeline stages treat it as read-only.
struct MarkerMatrix {
  std::vector<double> values;  // row-major, rows() x cols()
  std::vector<std::uint8_t> cohort;  // 1 or 2
  std::vector<std::string> sample_id;  // empty when no sample column
  std::vector<std::string> marker_names;

  std::size_t rows() const { return cohort.size(); }
  std::size_t cols() const { return marker_names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values.data() + r * cols(), cols());
  }
  std::size_t cohort_count(int which) const;

  // Throws DataError when any invariant is broken (bad labels, an empty
  // cohort, non-finite values).
  void validate() const;
};

struct ReadSchema {
  char delimiter = ',';
  std::string cohort_column = "cohort";
  std::string sample_column;  // optional
  // Markers to read, in order. Empty means every remaining column.
  std::vector<std::string> marker_columns;
};

MarkerMatrix read_matrix(const std::string& path, const ReadSchema& schema);

// Two-file mode: one file per cohort, identical marker layout, no cohort
// column required. Rows from the first path become cohort 1.
MarkerMatrix read_matrix_two_files(const std::string& cohort1_path,
                                   const std::string& cohort2_path, const ReadSchema& schema);

// Emits the same delimited format read_matrix accepts; values are written
// with enough digits to round-trip bit-for-bit.
void write_matrix(const MarkerMatrix& matrix, const std::string& path, char delimiter = ',');

// Per-channel quantile normalization across samples: each sample's values are
// replaced rank-wise by the mean of the samples' order statistics, with the
// reference interpolated linearly at fractional ranks when sample sizes
// differ. Tied values receive the mean of the reference over their tied rank
// span. A constant (sample, channel) pair passes through unchanged and is
// reported in *warnings.
MarkerMatrix quantile_normalize(const MarkerMatrix& matrix,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace team

#endif  // TEAM_MATRIX_HPP

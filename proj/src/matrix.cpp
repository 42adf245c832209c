#include "team/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "team/errors.hpp"

namespace team {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delimiter)) out.push_back(field);
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_marker(const std::string& field, std::size_t row, const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw DataError("non-numeric value at row " + std::to_string(row) + ", column " + column);
  }
  return v;
}

struct ColumnPlan {
  int cohort_idx = -1;  // -1 in two-file mode
  int sample_idx = -1;
  std::vector<int> marker_idx;
  std::vector<std::string> marker_names;
};

ColumnPlan plan_columns(const std::vector<std::string>& header, const ReadSchema& schema,
                        bool need_cohort, const std::string& path) {
  ColumnPlan plan;
  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  if (need_cohort) {
    plan.cohort_idx = find_col(schema.cohort_column);
    if (plan.cohort_idx < 0)
      throw DataError(path + ": missing cohort column '" + schema.cohort_column + "'");
  }
  if (!schema.sample_column.empty()) {
    plan.sample_idx = find_col(schema.sample_column);
    if (plan.sample_idx < 0)
      throw DataError(path + ": missing sample column '" + schema.sample_column + "'");
  }
  if (!schema.marker_columns.empty()) {
    for (const auto& name : schema.marker_columns) {
      const int idx = find_col(name);
      if (idx < 0) throw DataError(path + ": missing marker column '" + name + "'");
      plan.marker_idx.push_back(idx);
      plan.marker_names.push_back(name);
    }
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<int>(i) == plan.cohort_idx || static_cast<int>(i) == plan.sample_idx)
        continue;
      plan.marker_idx.push_back(static_cast<int>(i));
      plan.marker_names.push_back(header[i]);
    }
  }
  if (plan.marker_idx.empty()) throw DataError(path + ": no marker columns");
  return plan;
}

void read_rows(const std::string& path, const ReadSchema& schema, bool need_cohort,
               std::uint8_t fixed_cohort, MarkerMatrix& out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  strip_cr(line);
  const auto header = split_line(line, schema.delimiter);
  const auto plan = plan_columns(header, schema, need_cohort, path);
  if (out.marker_names.empty()) {
    out.marker_names = plan.marker_names;
  } else if (out.marker_names != plan.marker_names) {
    throw DataError(path + ": marker columns do not match the first file");
  }
  const std::size_t p = plan.marker_idx.size();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const auto fields = split_line(line, schema.delimiter);
    if (fields.size() != header.size())
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    if (need_cohort) {
      const std::string& c = fields[static_cast<std::size_t>(plan.cohort_idx)];
      if (c == "1")
        out.cohort.push_back(1);
      else if (c == "2")
        out.cohort.push_back(2);
      else
        throw DataError(path + ": unknown cohort value '" + c + "' at row " +
                        std::to_string(row));
    } else {
      out.cohort.push_back(fixed_cohort);
    }
    if (plan.sample_idx >= 0)
      out.sample_id.push_back(fields[static_cast<std::size_t>(plan.sample_idx)]);
    for (std::size_t j = 0; j < p; ++j) {
      out.values.push_back(parse_marker(fields[static_cast<std::size_t>(plan.marker_idx[j])],
                                        row, out.marker_names[j]));
    }
  }
}

}  // namespace

std::size_t MarkerMatrix::cohort_count(int which) const {
  std::size_t n = 0;
  for (auto c : cohort) n += (c == which);
  return n;
}

void MarkerMatrix::validate() const {
  const std::size_t p = cols();
  if (p == 0) throw DataError("matrix has no marker columns");
  if (values.size() != rows() * p) throw DataError("matrix value buffer has the wrong size");
  if (!sample_id.empty() && sample_id.size() != rows())
    throw DataError("sample_id length does not match row count");
  for (auto c : cohort)
    if (c != 1 && c != 2) throw DataError("cohort labels must be 1 or 2");
  if (cohort_count(1) == 0 || cohort_count(2) == 0)
    throw DataError("both cohorts must be nonempty");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("matrix contains a non-finite value");
}

MarkerMatrix read_matrix(const std::string& path, const ReadSchema& schema) {
  MarkerMatrix out;
  read_rows(path, schema, /*need_cohort=*/true, 0, out);
  out.validate();
  return out;
}

MarkerMatrix read_matrix_two_files(const std::string& cohort1_path,
                                   const std::string& cohort2_path, const ReadSchema& schema) {
  MarkerMatrix out;
  read_rows(cohort1_path, schema, /*need_cohort=*/false, 1, out);
  read_rows(cohort2_path, schema, /*need_cohort=*/false, 2, out);
  out.validate();
  return out;
}

void write_matrix(const MarkerMatrix& matrix, const std::string& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  const bool has_sample = !matrix.sample_id.empty();
  if (has_sample) out << "sample" << delimiter;
  out << "cohort";
  for (const auto& name : matrix.marker_names) out << delimiter << name;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (has_sample) out << matrix.sample_id[r] << delimiter;
    out << static_cast<int>(matrix.cohort[r]);
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", matrix.at(r, c));
      out << delimiter << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing: " + path);
}

namespace {

// Linear interpolation of a sample's order statistics at fractional position
// pos in [0, n-1]. Integer positions return the order statistic itself.
double quantile_at_pos(const std::vector<double>& sorted, double pos) {
  const std::size_t n = sorted.size();
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

MarkerMatrix quantile_normalize(const MarkerMatrix& matrix, std::vector<std::string>* warnings) {
  if (matrix.sample_id.empty())
    throw ConfigError("quantile_normalize: matrix has no sample identifiers");
  // Group rows by sample.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < matrix.rows(); ++r) groups[matrix.sample_id[r]].push_back(r);
  MarkerMatrix out = matrix;
  if (groups.size() < 2) return out;  // nothing to normalize against

  const std::size_t p = matrix.cols();
  for (std::size_t ch = 0; ch < p; ++ch) {
    struct SampleChannel {
      const std::vector<std::size_t>* rows;
      std::vector<std::size_t> order;  // row indices sorted by value
      std::vector<double> sorted;
      bool constant;
    };
    std::vector<SampleChannel> samples;
    samples.reserve(groups.size());
    for (const auto& [name, rows] : groups) {
      SampleChannel sc;
      sc.rows = &rows;
      sc.order = rows;
      std::sort(sc.order.begin(), sc.order.end(), [&](std::size_t a, std::size_t b) {
        const double va = matrix.at(a, ch), vb = matrix.at(b, ch);
        return va < vb || (va == vb && a < b);
      });
      sc.sorted.reserve(rows.size());
      for (auto r : sc.order) sc.sorted.push_back(matrix.at(r, ch));
      sc.constant = sc.sorted.front() == sc.sorted.back();
      if (sc.constant && warnings)
        warnings->push_back("channel '" + matrix.marker_names[ch] + "' is constant in sample '" +
                            name + "'; left unchanged");
      samples.push_back(std::move(sc));
    }
    // Constant (sample, channel) pairs carry no rank information: they pass
    // through unchanged and do not contribute to the reference.
    std::vector<const SampleChannel*> contributing;
    for (const auto& sc : samples)
      if (!sc.constant) contributing.push_back(&sc);
    if (contributing.size() < 2) continue;

    // Mean of the contributing samples' order statistics at rank r of an
    // n_s-sized sample; positions are formed as exact rational products so an
    // equal-sized sample evaluates at its own order statistics bit for bit
    // (which also makes a second normalization pass a no-op).
    auto reference = [&](std::size_t r, std::size_t n_s) {
      double first = 0.0;
      bool all_equal = true;
      double sum = 0.0;
      for (std::size_t t = 0; t < contributing.size(); ++t) {
        const std::size_t n_t = contributing[t]->sorted.size();
        const double pos = (n_s == 1)
                               ? 0.0
                               : static_cast<double>(r * (n_t - 1)) / static_cast<double>(n_s - 1);
        const double value = quantile_at_pos(contributing[t]->sorted, pos);
        if (t == 0)
          first = value;
        else
          all_equal = all_equal && value == first;
        sum += value;
      }
      if (all_equal) return first;
      return sum / static_cast<double>(contributing.size());
    };

    for (const auto& sc : samples) {
      if (sc.constant) continue;
      const std::size_t n = sc.order.size();
      std::vector<double> ref_values(n);
      for (std::size_t r = 0; r < n; ++r) ref_values[r] = reference(r, n);
      // Tied spans share the mean of their reference values.
      std::size_t start = 0;
      while (start < n) {
        std::size_t end = start + 1;
        while (end < n && sc.sorted[end] == sc.sorted[start]) ++end;
        double mean = 0.0;
        for (std::size_t r = start; r < end; ++r) mean += ref_values[r];
        mean /= static_cast<double>(end - start);
        for (std::size_t r = start; r < end; ++r)
          out.values[sc.order[r] * p + ch] = mean;
        start = end;
      }
    }
  }
  return out;
}

}  // namespace team

#include "team/cli_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "team/errors.hpp"

namespace team {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string join_markers(const std::vector<std::string>& markers) {
  std::string out;
  for (const auto& m : markers) {
    if (!out.empty()) out += '-';
    out += m;
  }
  return out;
}

std::vector<int> marker_indices(const MarkerMatrix& matrix,
                                const std::vector<std::string>& markers) {
  std::vector<int> idx;
  for (const auto& name : markers) {
    auto it = std::find(matrix.marker_names.begin(), matrix.marker_names.end(), name);
    if (it == matrix.marker_names.end())
      throw ConfigError("unknown marker '" + name + "' in --dims");
    idx.push_back(static_cast<int>(it - matrix.marker_names.begin()));
  }
  return idx;
}

MarkerMatrix project_columns(const MarkerMatrix& matrix, const std::vector<int>& columns) {
  MarkerMatrix out;
  out.cohort = matrix.cohort;
  out.sample_id = matrix.sample_id;
  for (int c : columns) out.marker_names.push_back(matrix.marker_names[static_cast<std::size_t>(c)]);
  out.values.reserve(matrix.rows() * columns.size());
  for (std::size_t r = 0; r < matrix.rows(); ++r)
    for (int c : columns) out.values.push_back(matrix.at(r, static_cast<std::size_t>(c)));
  return out;
}

}  // namespace

void write_run_leaf_table(const LeafBinning& binning,
                          const std::vector<std::string>& marker_names,
                          const TeamResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  const auto& part = *binning.partition;
  const std::size_t p = marker_names.size();
  out << "leaf_id";
  for (std::size_t d = 0; d < p; ++d)
    out << ",lo_" << marker_names[d] << ",hi_" << marker_names[d];
  out << ",n,X,Xtilde,p_first_tested,rejected,rejection_layer\n";
  char buf[40];
  auto emit = [&](double v) {
    if (v == kInf)
      out << "inf";
    else if (v == -kInf)
      out << "-inf";
    else {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf;
    }
  };
  for (std::size_t i = 0; i < binning.m(); ++i) {
    out << (i + 1);
    const auto& region = part.region(i);
    for (std::size_t d = 0; d < p; ++d) {
      out << ',';
      emit(region.lo[d]);
      out << ',';
      emit(region.hi[d]);
    }
    out << ',' << binning.n[i] << ',' << binning.X[i] << ',' << binning.Xtilde[i] << ',';
    emit(result.leaf_pvalue[i]);
    out << ',' << (result.rejected(i) ? 1 : 0) << ',' << result.rejection_layer[i] << '\n';
  }
  if (!out) throw DataError("failed writing: " + path);
}

void write_run_summary_json(const LeafBinning& binning, const TeamResult& result,
                            const RunOptions& options,
                            const std::vector<std::string>& markers, const std::string& path) {
  nlohmann::ordered_json j;
  j["markers"] = markers;
  j["N1"] = binning.N1;
  j["N2"] = binning.N2;
  j["theta0"] = static_cast<double>(binning.N2) / static_cast<double>(binning.N1 + binning.N2);
  j["m"] = binning.m();
  j["alpha"] = options.alpha;
  j["scheme"] = options.scheme == Scheme::kSequential ? "sequential" : "adaptive";
  j["flip_cohorts"] = options.flip_cohorts;
  j["seed"] = options.seed;
  j["stop_layer"] = result.stop_layer;
  j["total_rejections"] = result.total_rejections();
  nlohmann::ordered_json layers = nlohmann::json::array();
  for (const auto& record : result.layers) {
    nlohmann::ordered_json lj;
    lj["layer"] = record.layer;
    lj["m_layer"] = record.m_layer;
    lj["c_hat"] = record.c_hat;
    lj["a_floor"] = record.a_floor;
    lj["sup_found"] = record.sup_found;
    lj["node_rejections"] = record.node_rejections;
    lj["mapped_leaves"] = record.mapped_leaves;
    lj["leftover_leaves"] = record.leftover_leaves;
    layers.push_back(lj);
  }
  j["layers"] = layers;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing: " + path);
}

std::vector<SubAnalysisOutput> cmd_run(const RunOptions& options, std::string* log) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw ConfigError("alpha must lie in (0,1)");
  const bool two_files = !options.input_cohort1.empty() || !options.input_cohort2.empty();
  if (two_files && (options.input_cohort1.empty() || options.input_cohort2.empty()))
    throw ConfigError("two-file mode needs both --input-cohort1 and --input-cohort2");
  if (two_files == !options.input.empty())
    throw ConfigError("give either --input or both --input-cohort1/--input-cohort2");

  MarkerMatrix matrix = two_files
      ? read_matrix_two_files(options.input_cohort1, options.input_cohort2, options.schema)
      : read_matrix(options.input, options.schema);
  if (options.flip_cohorts)
    for (auto& c : matrix.cohort) c = (c == 1) ? 2 : 1;
  if (options.normalize) {
    std::vector<std::string> warnings;
    matrix = quantile_normalize(matrix, &warnings);
    if (log)
      for (const auto& w : warnings) *log += "warning: " + w + "\n";
  }

  std::vector<std::vector<std::string>> subsets = options.dim_subsets;
  if (subsets.empty()) subsets.push_back(matrix.marker_names);

  std::vector<SubAnalysisOutput> outputs;
  for (const auto& markers : subsets) {
    if (markers.empty()) throw ConfigError("empty marker subset in --dims");
    const MarkerMatrix sub = project_columns(matrix, marker_indices(matrix, markers));

    PartitionSpec spec;
    spec.scheme = options.scheme;
    spec.leaf_order = options.leaf_order;
    const int dims = static_cast<int>(markers.size());
    const std::int64_t rows = static_cast<std::int64_t>(sub.rows());
    if (options.scheme == Scheme::kSequential) {
      spec.bins_per_dim = options.bins_per_dim;
      if (spec.bins_per_dim == 0) {
        if (options.target_bin_count > 0) {
          spec.bins_per_dim = std::max(
              2, static_cast<int>(std::lround(std::pow(
                     static_cast<double>(rows) / static_cast<double>(options.target_bin_count),
                     1.0 / dims))));
        } else {
          spec.bins_per_dim = default_bins_per_dim(rows, dims);
        }
      }
    } else {
      spec.splits = options.splits;
      if (spec.splits == 0) {
        const double target = options.target_bin_count > 0
                                  ? static_cast<double>(options.target_bin_count)
                                  : std::cbrt(2.0 * static_cast<double>(rows));
        spec.splits = std::max(1, static_cast<int>(std::lround(
                                      std::log2(static_cast<double>(rows) / target))));
      }
    }

    const LeafBinning binning = build_partition(sub, spec);
    TeamConfig config;
    config.alpha = options.alpha;
    config.stop = options.stop;
    if (config.stop.max_layers == 0 && config.stop.min_rejections < 0 &&
        config.stop.rejection_ratio <= 0.0) {
      // No stopping clause given: apply the layer-count sizing rule so the
      // run does not descend to degenerate two-node layers.
      config.stop.max_layers = default_layer_count(static_cast<std::int64_t>(binning.m()));
    }
    const TeamResult result = run_team(binning, config);

    SubAnalysisOutput rec;
    rec.markers = markers;
    rec.m = binning.m();
    rec.total_rejections = result.total_rejections();
    rec.stop_layer = result.stop_layer;
    const std::string tag = join_markers(markers);
    rec.leaf_table_path = options.out + "_" + tag + "_leaves.csv";
    rec.summary_path = options.out + "_" + tag + "_summary.json";
    write_run_leaf_table(binning, markers, result, rec.leaf_table_path);
    write_run_summary_json(binning, result, options, markers, rec.summary_path);
    if (log) {
      std::ostringstream line;
      line << "markers [" << tag << "]: m=" << rec.m << " N1=" << binning.N1
           << " N2=" << binning.N2 << " rejected=" << rec.total_rejections
           << " stop_layer=" << rec.stop_layer << "\n";
      for (const auto& record : result.layers) {
        line << "  layer " << record.layer << ": m=" << record.m_layer
             << " c_hat=" << record.c_hat << " node_rejections=" << record.node_rejections
             << " mapped_leaves=" << record.mapped_leaves << "\n";
      }
      *log += line.str();
    }
    outputs.push_back(std::move(rec));
  }
  return outputs;
}

SimSetting read_sim_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open spec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unparsable spec file " + path + ": " + e.what());
  }
  SimSetting s;
  try {
    s.name = j.value("name", std::string("custom"));
    s.dim = j.at("dim").get<int>();
    s.n1 = j.at("n1").get<std::int64_t>();
    s.n2 = j.at("n2").get<std::int64_t>();
    auto read_mixture = [&](const nlohmann::json& arr) {
      std::vector<GaussComponent> comps;
      for (const auto& cj : arr) {
        GaussComponent c;
        c.weight = cj.at("weight").get<double>();
        const auto mean = cj.at("mean");
        c.mean[0] = mean.at(0).get<double>();
        if (s.dim == 2) c.mean[1] = mean.at(1).get<double>();
        const auto cov = cj.at("cov");
        c.cov[0][0] = cov.at(0).at(0).get<double>();
        if (s.dim == 2) {
          c.cov[0][1] = cov.at(0).at(1).get<double>();
          c.cov[1][0] = cov.at(1).at(0).get<double>();
          c.cov[1][1] = cov.at(1).at(1).get<double>();
        }
        comps.push_back(c);
      }
      return comps;
    };
    s.cohort1 = read_mixture(j.at("cohort1"));
    s.cohort2 = read_mixture(j.at("cohort2"));
    if (j.contains("extra")) {
      const auto& e = j.at("extra");
      s.extra_count = e.at("count").get<std::int64_t>();
      for (const auto& rj : e.at("rects")) {
        Rect r;
        r.xlo = rj.at(0).get<double>();
        r.xhi = rj.at(1).get<double>();
        r.ylo = rj.at(2).get<double>();
        r.yhi = rj.at(3).get<double>();
        s.extra_rects.push_back(r);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("spec file " + path + " is missing fields: " + e.what());
  }
  s.validate();
  return s;
}

void cmd_simulate(const SimulateOptions& options, std::string* log) {
  if (options.reps < 1) throw ConfigError("reps must be >= 1");
  const SimSetting setting = options.spec_path.empty()
                                 ? SimSetting::by_name(options.setting_name)
                                 : read_sim_spec(options.spec_path);
  const ReplicationTable table =
      run_replications(setting, options.reps, options.config, options.seed);
  write_replication_rows(table, options.out + "_reps.csv");
  write_replication_summary(table, options.out + "_summary.csv");
  if (log) {
    std::ostringstream line;
    line << "setting " << setting.name << ": reps=" << options.reps << "\n";
    for (const auto& s : table.summary) {
      line << "  L=" << s.layer << ": fdp=" << s.fdp_mean << " fn=" << s.fn_mean
           << " discoveries=" << s.disc_mean << "\n";
    }
    *log += line.str();
  }
}

namespace {

struct RejectedRegion {
  std::vector<double> lo, hi;
};

struct RejectionTable {
  std::vector<std::string> markers;
  std::vector<RejectedRegion> rejected;
};

double parse_bound(const std::string& field, const std::string& path) {
  if (field == "inf") return kInf;
  if (field == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0')
    throw DataError(path + ": bad bound value '" + field + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

RejectionTable read_rejection_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open leaf table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty leaf table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line, ',');
  RejectionTable table;
  std::vector<std::size_t> lo_cols, hi_cols;
  std::size_t rejected_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("lo_", 0) == 0) {
      table.markers.push_back(header[i].substr(3));
      lo_cols.push_back(i);
    } else if (header[i].rfind("hi_", 0) == 0) {
      hi_cols.push_back(i);
    } else if (header[i] == "rejected") {
      rejected_col = i;
    }
  }
  if (table.markers.empty() || lo_cols.size() != hi_cols.size())
    throw DataError(path + ": no bound columns found");
  if (rejected_col == header.size()) throw DataError(path + ": no 'rejected' column");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line, ',');
    if (fields.size() != header.size()) throw DataError(path + ": ragged leaf table row");
    if (fields[rejected_col] != "1") continue;
    RejectedRegion region;
    for (std::size_t d = 0; d < lo_cols.size(); ++d) {
      region.lo.push_back(parse_bound(fields[lo_cols[d]], path));
      region.hi.push_back(parse_bound(fields[hi_cols[d]], path));
    }
    table.rejected.push_back(std::move(region));
  }
  return table;
}

bool region_contains(const RejectedRegion& region, const std::vector<double>& coords) {
  for (std::size_t d = 0; d < coords.size(); ++d) {
    if (!(coords[d] >= region.lo[d])) return false;
    if (region.hi[d] != kInf && !(coords[d] < region.hi[d])) return false;
  }
  return true;
}

}  // namespace

void cmd_classify(const ClassifyOptions& options, std::string* log) {
  if (options.leaf_tables.empty()) throw ConfigError("classify needs at least one leaf table");
  std::vector<RejectionTable> tables;
  for (const auto& path : options.leaf_tables) tables.push_back(read_rejection_table(path));
  const std::size_t k = tables.size();

  std::ifstream in(options.events);
  if (!in) throw DataError("cannot open events file: " + options.events);
  std::string line;
  if (!std::getline(in, line)) throw DataError(options.events + ": empty events file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line, options.delimiter);
  // Column lookup per table.
  std::vector<std::vector<std::size_t>> table_cols(k);
  for (std::size_t t = 0; t < k; ++t) {
    for (const auto& marker : tables[t].markers) {
      auto it = std::find(header.begin(), header.end(), marker);
      if (it == header.end())
        throw DataError("events file lacks column '" + marker + "' required by " +
                        options.leaf_tables[t]);
      table_cols[t].push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }

  std::ofstream out(options.out);
  if (!out) throw DataError("cannot open file for writing: " + options.out);
  out << "event_id,count,class,note\n";
  std::size_t row = 0;
  std::vector<std::int64_t> class_counts(4, 0);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv(line, options.delimiter);
    if (fields.size() != header.size())
      throw DataError(options.events + ": ragged row " + std::to_string(row));
    int count = 0;
    std::vector<double> coords;
    for (std::size_t t = 0; t < k; ++t) {
      coords.clear();
      for (std::size_t c : table_cols[t]) {
        char* end = nullptr;
        const double v = std::strtod(fields[c].c_str(), &end);
        if (end == fields[c].c_str() || *end != '\0' || !std::isfinite(v))
          throw DataError("non-numeric value at row " + std::to_string(row) + ", column " +
                          header[c]);
        coords.push_back(v);
      }
      for (const auto& region : tables[t].rejected) {
        if (region_contains(region, coords)) {
          ++count;
          break;
        }
      }
    }
    std::string cls;
    std::string note;
    if (k != 6) {
      // The published bands are defined for exactly six pairwise
      // sub-analyses; any other count is reported raw.
      cls = "unclassified";
    } else if (count < 2) {
      cls = "nonfunctional";
      class_counts[0]++;
    } else if (count == 2) {
      cls = "nonfunctional";
      note = "band_gap";
      class_counts[0]++;
    } else if (count <= 4) {
      cls = "monofunctional";
      class_counts[1]++;
    } else if (count == 5) {
      cls = "bifunctional";
      class_counts[2]++;
    } else {
      cls = "polyfunctional";
      class_counts[3]++;
    }
    out << row << ',' << count << ',' << cls << ',' << note << '\n';
  }
  if (!out) throw DataError("failed writing: " + options.out);
  if (log && k == 6) {
    std::ostringstream s;
    const double total = std::max<std::int64_t>(1, row);
    s << "events=" << row << " nonfunctional=" << class_counts[0] / total
      << " monofunctional=" << class_counts[1] / total
      << " bifunctional=" << class_counts[2] / total
      << " polyfunctional=" << class_counts[3] / total << "\n";
    *log += s.str();
  }
}

}  // namespace team

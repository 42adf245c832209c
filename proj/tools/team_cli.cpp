#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "team/cli_ops.hpp"
#include "team/errors.hpp"

namespace {

// Expand `--config FILE` into the flags it mirrors: flat `key=value` lines,
// '#' comments, flag keys taking true/false. File-derived flags are inserted
// right after the subcommand so explicit flags override them (options take
// the last occurrence).
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t config_at = args.size();
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_at = i;
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_at = i;
      path = args[i].substr(9);
      break;
    }
  }
  if (config_at == args.size()) return args;
  args.erase(args.begin() + static_cast<std::ptrdiff_t>(config_at),
             args.begin() + static_cast<std::ptrdiff_t>(config_at) +
                 (args[config_at] == "--config" ? 2 : 1));
  std::ifstream in(path);
  if (!in) throw team::ConfigError("cannot open config file: " + path);
  std::vector<std::string> expanded;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw team::ConfigError("config line is not key=value: " + line);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw team::ConfigError("config line has an empty key: " + line);
    if (value == "true" || value == "false") {
      if (value == "true") expanded.push_back("--" + key);
    } else {
      expanded.push_back("--" + key);
      expanded.push_back(value);
    }
  }
  // Insert after the subcommand token (args[0] when a subcommand was given).
  const std::size_t at = (!args.empty() && !args[0].empty() && args[0][0] != '-') ? 1 : 0;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), expanded.begin(), expanded.end());
  return args;
}

// "a,b;c,d" -> {{a,b},{c,d}}
std::vector<std::vector<std::string>> parse_dim_subsets(const std::string& spec) {
  std::vector<std::vector<std::string>> subsets;
  std::string subset;
  std::stringstream outer(spec);
  while (std::getline(outer, subset, ';')) {
    std::vector<std::string> markers;
    std::string marker;
    std::stringstream inner(subset);
    while (std::getline(inner, marker, ',')) {
      if (!marker.empty()) markers.push_back(marker);
    }
    if (!markers.empty()) subsets.push_back(std::move(markers));
  }
  return subsets;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation-tree FDR testing for two-cohort marker data"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // run
  auto* run = app.add_subcommand("run", "Run the test on tabular cohort data");
  std::string config_path;
  run->add_option("--config", config_path, "Flat key=value config file; flags override it");
  team::RunOptions run_options;
  std::string delimiter = ",";
  std::string dims_spec;
  std::string scheme = "sequential";
  std::string leaf_order = "serpentine";
  run->add_option("--input", run_options.input, "Input file with a cohort column");
  run->add_option("--input-cohort1", run_options.input_cohort1, "Cohort-1 file (two-file mode)");
  run->add_option("--input-cohort2", run_options.input_cohort2, "Cohort-2 file (two-file mode)");
  run->add_option("--delimiter", delimiter, "Field delimiter (default ,)");
  run->add_option("--cohort-col", run_options.schema.cohort_column, "Cohort column name");
  run->add_option("--sample-col", run_options.schema.sample_column, "Sample column name");
  run->add_option("--markers", run_options.schema.marker_columns,
                  "Marker columns to read (default: all)")
      ->delimiter(',');
  run->add_flag("--normalize", run_options.normalize,
                "Quantile-normalize channels across samples before pooling");
  run->add_flag("--flip-cohorts", run_options.flip_cohorts, "Swap cohort labels 1 and 2");
  run->add_option("--dims", dims_spec,
                  "Sub-analysis marker subsets: comma inside a subset, semicolon between");
  run->add_option("--alpha", run_options.alpha, "FDR level (0,1)");
  run->add_option("--scheme", scheme, "Partition scheme: sequential|adaptive");
  run->add_option("--leaf-order", leaf_order, "Leaf numbering: serpentine|lexicographic");
  run->add_option("--bins-per-dim", run_options.bins_per_dim, "Sequential bins per dimension");
  run->add_option("--splits", run_options.splits, "Adaptive median-split levels");
  run->add_option("--target-bin-count", run_options.target_bin_count,
                  "Pick bins per dim from a target per-leaf count");
  run->add_option("--max-layers", run_options.stop.max_layers, "Stop after this many layers");
  run->add_option("--min-rejections", run_options.stop.min_rejections,
                  "Stop when a layer rejects fewer nodes than this");
  run->add_option("--rejection-ratio", run_options.stop.rejection_ratio,
                  "Stop when layer rejections fall below this ratio of the previous layer");
  run->add_option("--seed", run_options.seed, "Recorded in the summary");
  run->add_option("--out", run_options.out, "Output path prefix");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a replication study");
  simulate->add_option("--config", config_path,
                       "Flat key=value config file; flags override it");
  team::SimulateOptions sim_options;
  std::string setting;
  simulate->add_option("setting", setting, "S1|S2|S3|S4 or a custom spec via --spec");
  simulate->add_option("--spec", sim_options.spec_path, "Custom setting JSON file");
  simulate->add_option("--reps", sim_options.reps, "Replications");
  simulate->add_option("--seed", sim_options.seed, "Base seed");
  simulate->add_option("--alpha", sim_options.config.alpha, "FDR level (0,1)");
  simulate->add_option("--bins-per-dim", sim_options.config.bins_per_dim,
                       "Bins per dimension (default: setting rule)");
  simulate->add_option("--layers", sim_options.config.max_layers,
                       "Max layers (default: 1000 <= m/2^(L-1) < 2000 rule)");
  simulate->add_option("--min-rejections", sim_options.config.extra_stop.min_rejections,
                       "Extra stop: fewer node rejections than this");
  simulate->add_option("--rejection-ratio", sim_options.config.extra_stop.rejection_ratio,
                       "Extra stop: rejection ratio below this");
  simulate->add_option("--threads", sim_options.config.threads, "Worker threads");
  simulate->add_option("--out", sim_options.out, "Output path prefix");

  // classify
  auto* classify =
      app.add_subcommand("classify", "Classify events by sub-analysis coverage");
  classify->add_option("--config", config_path,
                       "Flat key=value config file; flags override it");
  team::ClassifyOptions cls_options;
  std::string cls_delimiter = ",";
  classify->add_option("--tables", cls_options.leaf_tables, "Leaf tables from `run`")
      ->delimiter(',')
      ->required();
  classify->add_option("--events", cls_options.events, "Event coordinates CSV")->required();
  classify->add_option("--delimiter", cls_delimiter, "Events file delimiter");
  classify->add_option("--out", cls_options.out, "Output CSV path");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const team::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> arg_ptrs = {argv[0]};
  for (const auto& a : args) arg_ptrs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(arg_ptrs.size()), arg_ptrs.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    std::string log;
    if (run->parsed()) {
      if (delimiter.size() != 1) throw team::ConfigError("--delimiter must be one character");
      run_options.schema.delimiter = delimiter[0];
      if (!dims_spec.empty()) run_options.dim_subsets = parse_dim_subsets(dims_spec);
      if (scheme == "sequential")
        run_options.scheme = team::Scheme::kSequential;
      else if (scheme == "adaptive")
        run_options.scheme = team::Scheme::kAdaptive;
      else
        throw team::ConfigError("--scheme must be sequential or adaptive");
      if (leaf_order == "serpentine")
        run_options.leaf_order = team::LeafOrder::kSerpentine;
      else if (leaf_order == "lexicographic")
        run_options.leaf_order = team::LeafOrder::kLexicographic;
      else
        throw team::ConfigError("--leaf-order must be serpentine or lexicographic");
      team::cmd_run(run_options, &log);
    } else if (simulate->parsed()) {
      sim_options.setting_name = setting;
      if (setting.empty() && sim_options.spec_path.empty())
        throw team::ConfigError("simulate needs a setting name or --spec");
      team::cmd_simulate(sim_options, &log);
    } else if (classify->parsed()) {
      if (cls_delimiter.size() != 1) throw team::ConfigError("--delimiter must be one character");
      cls_options.delimiter = cls_delimiter[0];
      team::cmd_classify(cls_options, &log);
    }
    std::cout << log;
    return 0;
  } catch (const team::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const team::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

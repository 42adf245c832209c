#ifndef TEAM_CLI_OPS_HPP
#define TEAM_CLI_OPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "team/matrix.hpp"
#include "team/partition.hpp"
#include "team/sim.hpp"
#include "team/team.hpp"

namespace team {

// Configuration of one `team run` invocation. One TEAM analysis runs per
// dimension subset; each writes <out>_<markers>_leaves.csv and
// <out>_<markers>_summary.json.
struct RunOptions {
  std::string input;            // single-file mode
  std::string input_cohort1;    // two-file mode
  std::string input_cohort2;
  ReadSchema schema;
  bool normalize = false;       // per-channel quantile normalization first
  bool flip_cohorts = false;    // swap labels 1 <-> 2 after reading
  // Marker-name subsets, one sub-analysis each. Empty = all markers at once.
  std::vector<std::vector<std::string>> dim_subsets;
  double alpha = 0.05;
  Scheme scheme = Scheme::kSequential;
  LeafOrder leaf_order = LeafOrder::kSerpentine;
  int bins_per_dim = 0;      // sequential; 0 = from target_bin_count rule
  int splits = 0;            // adaptive levels; 0 = from target_bin_count rule
  std::int64_t target_bin_count = 0;  // 0 = (2N)^(1/3) default
  StoppingRule stop;
  std::uint64_t seed = 0;    // recorded in the summary; the run is deterministic
  std::string out = "team";  // output path prefix
};

struct SubAnalysisOutput {
  std::vector<std::string> markers;
  std::string leaf_table_path;
  std::string summary_path;
  std::size_t m = 0;
  std::int64_t total_rejections = 0;
  int stop_layer = 0;
};

// ingest -> (normalize) -> partition -> run_team per subset; returns one
// record per sub-analysis. Human-readable summary lines go to *log when set.
std::vector<SubAnalysisOutput> cmd_run(const RunOptions& options, std::string* log = nullptr);

struct SimulateOptions {
  std::string setting_name;   // S1..S4, or empty when spec_path is set
  std::string spec_path;      // JSON file describing a custom SimSetting
  int reps = 1;
  std::uint64_t seed = 0;
  ReplicationConfig config;
  std::string out = "team_sim";  // prefix: <out>_reps.csv, <out>_summary.csv
};

void cmd_simulate(const SimulateOptions& options, std::string* log = nullptr);

struct ClassifyOptions {
  std::vector<std::string> leaf_tables;  // rejected-leaf tables from cmd_run
  std::string events;                    // CSV of event coordinates
  char delimiter = ',';
  std::string out = "team_classes.csv";
};

// Count, per event, the sub-analyses whose rejected region contains it and
// assign the activation class. The published bands apply to exactly six
// sub-analyses; other table counts emit class "unclassified".
void cmd_classify(const ClassifyOptions& options, std::string* log = nullptr);

// Parse a custom SimSetting from its JSON spec file.
SimSetting read_sim_spec(const std::string& path);

// The leaf table with testing columns appended:
// leaf_id, lo/hi per dim, n, X, Xtilde, p_first_tested, rejected, rejection_layer.
void write_run_leaf_table(const LeafBinning& binning,
                          const std::vector<std::string>& marker_names,
                          const TeamResult& result, const std::string& path);

void write_run_summary_json(const LeafBinning& binning, const TeamResult& result,
                            const RunOptions& options,
                            const std::vector<std::string>& markers, const std::string& path);

}  // namespace team

#endif  // TEAM_CLI_OPS_HPP

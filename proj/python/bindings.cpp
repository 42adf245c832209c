#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "team/discrete_dist.hpp"
#include "team/errors.hpp"
#include "team/matrix.hpp"
#include "team/partition.hpp"
#include "team/sim.hpp"
#include "team/team.hpp"

namespace py = pybind11;
using namespace team;

namespace {

MarkerMatrix matrix_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> values,
                               py::array_t<int, py::array::c_style | py::array::forcecast> cohort,
                               std::vector<std::string> marker_names,
                               std::vector<std::string> sample_id) {
  if (values.ndim() != 2) throw ConfigError("values must be a 2-D array");
  const std::size_t rows = static_cast<std::size_t>(values.shape(0));
  const std::size_t cols = static_cast<std::size_t>(values.shape(1));
  if (static_cast<std::size_t>(cohort.size()) != rows)
    throw ConfigError("cohort length must match the row count");
  MarkerMatrix m;
  if (marker_names.empty()) {
    for (std::size_t c = 0; c < cols; ++c) m.marker_names.push_back("y" + std::to_string(c + 1));
  } else {
    if (marker_names.size() != cols) throw ConfigError("marker_names length must match columns");
    m.marker_names = std::move(marker_names);
  }
  m.values.assign(values.data(), values.data() + rows * cols);
  m.cohort.resize(rows);
  for (std::size_t r = 0; r < rows; ++r)
    m.cohort[r] = static_cast<std::uint8_t>(cohort.data()[r]);
  m.sample_id = std::move(sample_id);
  m.validate();
  return m;
}

py::array_t<double> matrix_values(const MarkerMatrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Aggregation-tree FDR testing core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<MarkerMatrix>(m, "MarkerMatrix")
      .def(py::init(&matrix_from_numpy), py::arg("values"), py::arg("cohort"),
           py::arg("marker_names") = std::vector<std::string>{},
           py::arg("sample_id") = std::vector<std::string>{})
      .def_property_readonly("values", &matrix_values)
      .def_property_readonly("cohort",
                             [](const MarkerMatrix& mm) {
                               std::vector<int> c(mm.cohort.begin(), mm.cohort.end());
                               return to_array(c);
                             })
      .def_readonly("marker_names", &MarkerMatrix::marker_names)
      .def_readonly("sample_id", &MarkerMatrix::sample_id)
      .def_property_readonly("rows", &MarkerMatrix::rows)
      .def_property_readonly("cols", &MarkerMatrix::cols);

  py::class_<ReadSchema>(m, "ReadSchema")
      .def(py::init<>())
      .def_readwrite("delimiter", &ReadSchema::delimiter)
      .def_readwrite("cohort_column", &ReadSchema::cohort_column)
      .def_readwrite("sample_column", &ReadSchema::sample_column)
      .def_readwrite("marker_columns", &ReadSchema::marker_columns);

  m.def("read_matrix", &read_matrix, py::arg("path"), py::arg("schema") = ReadSchema());
  m.def("read_matrix_two_files", &read_matrix_two_files, py::arg("cohort1_path"),
        py::arg("cohort2_path"), py::arg("schema") = ReadSchema());
  m.def("write_matrix", &write_matrix, py::arg("matrix"), py::arg("path"),
        py::arg("delimiter") = ',');
  m.def(
      "quantile_normalize",
      [](const MarkerMatrix& mm) {
        std::vector<std::string> warnings;
        MarkerMatrix out = quantile_normalize(mm, &warnings);
        return py::make_tuple(out, warnings);
      },
      py::arg("matrix"));

  py::enum_<Scheme>(m, "Scheme")
      .value("sequential", Scheme::kSequential)
      .value("adaptive", Scheme::kAdaptive);
  py::enum_<LeafOrder>(m, "LeafOrder")
      .value("serpentine", LeafOrder::kSerpentine)
      .value("lexicographic", LeafOrder::kLexicographic);

  py::class_<PartitionSpec>(m, "PartitionSpec")
      .def(py::init<>())
      .def_readwrite("scheme", &PartitionSpec::scheme)
      .def_readwrite("bins_per_dim", &PartitionSpec::bins_per_dim)
      .def_readwrite("splits", &PartitionSpec::splits)
      .def_readwrite("leaf_order", &PartitionSpec::leaf_order)
      .def_readwrite("dim_order", &PartitionSpec::dim_order)
      .def_readwrite("global_dim_order", &PartitionSpec::global_dim_order);

  py::class_<LeafRegion>(m, "LeafRegion")
      .def_readonly("lo", &LeafRegion::lo)
      .def_readonly("hi", &LeafRegion::hi);

  py::class_<Partition, std::shared_ptr<Partition>>(m, "Partition")
      .def_property_readonly("leaf_count", &Partition::leaf_count)
      .def_property_readonly("dims", &Partition::dims)
      .def_property_readonly("dim_order", &Partition::dim_order)
      .def("region", &Partition::region, py::return_value_policy::reference_internal)
      .def("leaf_of_point", [](const Partition& p, std::vector<double> x) {
        return p.leaf_of_point(std::span<const double>(x.data(), x.size()));
      });

  py::class_<LeafBinning>(m, "LeafBinning")
      .def_property_readonly("m", &LeafBinning::m)
      .def_property_readonly("n", [](const LeafBinning& b) { return to_array(b.n); })
      .def_property_readonly("X", [](const LeafBinning& b) { return to_array(b.X); })
      .def_property_readonly("Xtilde", [](const LeafBinning& b) { return to_array(b.Xtilde); })
      .def_readonly("N1", &LeafBinning::N1)
      .def_readonly("N2", &LeafBinning::N2)
      .def_property_readonly(
          "partition", [](const LeafBinning& b) { return b.partition; });

  m.def("order_dimensions", &order_dimensions);
  m.def("build_partition", &build_partition, py::arg("matrix"), py::arg("spec"));
  m.def("default_bins_per_dim", &default_bins_per_dim, py::arg("n_rows"), py::arg("dims"));
  m.def("write_leaf_table", &write_leaf_table, py::arg("binning"), py::arg("marker_names"),
        py::arg("path"));

  py::class_<DiscreteDist>(m, "DiscreteDist")
      .def(py::init<std::vector<double>>())
      .def_static("binomial", &DiscreteDist::binomial, py::arg("n"), py::arg("theta"))
      .def_property_readonly("support_max", &DiscreteDist::support_max)
      .def("pmf", &DiscreteDist::pmf)
      .def("ccdf", &DiscreteDist::ccdf)
      .def("cdf", &DiscreteDist::cdf)
      .def_property_readonly("probabilities", &DiscreteDist::probabilities);

  m.def("threshold_count", &threshold_count, py::arg("dist"), py::arg("c_hat"));
  m.def("truncate_renormalize", &truncate_renormalize, py::arg("dist"), py::arg("b_hat"));
  m.def("convolve", &convolve, py::arg("a"), py::arg("b"));

  py::class_<LayeredNull, std::shared_ptr<LayeredNull>>(m, "LayeredNull")
      .def_readonly("layer", &LayeredNull::layer)
      .def_readonly("dist", &LayeredNull::dist)
      .def_readonly("b_hat", &LayeredNull::b_hat);
  m.def("make_leaf_null", &make_leaf_null, py::arg("n"), py::arg("theta0"));
  m.def("build_layer_null", &build_layer_null, py::arg("child1"), py::arg("child2"),
        py::arg("c_hat_prev"));

  py::class_<ThresholdResult>(m, "ThresholdResult")
      .def_readonly("c_hat", &ThresholdResult::c_hat)
      .def_readonly("a_floor", &ThresholdResult::a_floor)
      .def_readonly("sup_found", &ThresholdResult::sup_found);
  m.def("find_threshold", &find_threshold, py::arg("pvalues"), py::arg("alpha"));

  py::class_<StoppingRule>(m, "StoppingRule")
      .def(py::init<>())
      .def_readwrite("max_layers", &StoppingRule::max_layers)
      .def_readwrite("min_rejections", &StoppingRule::min_rejections)
      .def_readwrite("rejection_ratio", &StoppingRule::rejection_ratio);

  py::class_<TeamConfig>(m, "TeamConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &TeamConfig::alpha)
      .def_readwrite("stop", &TeamConfig::stop);

  py::class_<LayerRecord>(m, "LayerRecord")
      .def_readonly("layer", &LayerRecord::layer)
      .def_readonly("m_layer", &LayerRecord::m_layer)
      .def_readonly("c_hat", &LayerRecord::c_hat)
      .def_readonly("a_floor", &LayerRecord::a_floor)
      .def_readonly("sup_found", &LayerRecord::sup_found)
      .def_readonly("node_rejections", &LayerRecord::node_rejections)
      .def_readonly("mapped_leaves", &LayerRecord::mapped_leaves)
      .def_readonly("leftover_leaves", &LayerRecord::leftover_leaves);

  py::class_<TeamResult>(m, "TeamResult")
      .def_property_readonly("rejection_layer",
                             [](const TeamResult& r) { return to_array(r.rejection_layer); })
      .def_property_readonly("leaf_pvalue",
                             [](const TeamResult& r) { return to_array(r.leaf_pvalue); })
      .def_readonly("layers", &TeamResult::layers)
      .def_readonly("stop_layer", &TeamResult::stop_layer)
      .def("total_rejections", &TeamResult::total_rejections);

  m.def("run_team", py::overload_cast<const LeafBinning&, const TeamConfig&>(&run_team),
        py::arg("binning"), py::arg("config"));

  py::class_<GaussComponent>(m, "GaussComponent")
      .def(py::init([](double weight, std::vector<double> mean, std::vector<double> cov) {
             GaussComponent c;
             c.weight = weight;
             c.mean[0] = mean.at(0);
             if (mean.size() > 1) c.mean[1] = mean[1];
             if (cov.size() == 1) {
               c.cov[0][0] = cov[0];
             } else if (cov.size() == 4) {
               c.cov[0][0] = cov[0];
               c.cov[0][1] = cov[1];
               c.cov[1][0] = cov[2];
               c.cov[1][1] = cov[3];
             } else {
               throw ConfigError("cov must have 1 or 4 entries");
             }
             return c;
           }),
           py::arg("weight"), py::arg("mean"), py::arg("cov"));

  py::class_<Rect>(m, "Rect")
      .def(py::init([](double xlo, double xhi, double ylo, double yhi) {
             return Rect{xlo, xhi, ylo, yhi};
           }),
           py::arg("xlo"), py::arg("xhi"), py::arg("ylo"), py::arg("yhi"));

  py::class_<SimSetting>(m, "SimSetting")
      .def(py::init<>())
      .def_readwrite("name", &SimSetting::name)
      .def_readwrite("dim", &SimSetting::dim)
      .def_readwrite("n1", &SimSetting::n1)
      .def_readwrite("n2", &SimSetting::n2)
      .def_readwrite("cohort1", &SimSetting::cohort1)
      .def_readwrite("cohort2", &SimSetting::cohort2)
      .def_readwrite("extra_rects", &SimSetting::extra_rects)
      .def_readwrite("extra_count", &SimSetting::extra_count)
      .def_static("s1", &SimSetting::s1)
      .def_static("s2", &SimSetting::s2)
      .def_static("s3", &SimSetting::s3)
      .def_static("s4", &SimSetting::s4)
      .def_static("pure_null", &SimSetting::pure_null, py::arg("n1"), py::arg("n2"))
      .def_static("by_name", &SimSetting::by_name)
      .def("default_bins_per_dim", &SimSetting::default_bins_per_dim)
      .def("default_max_layers", &SimSetting::default_max_layers);

  m.def("default_layer_count", &default_layer_count, py::arg("m_leaves"));
  m.def("generate_cohorts", &generate_cohorts, py::arg("setting"), py::arg("seed"));
  m.def("generate_cohorts_rep", &generate_cohorts_rep, py::arg("setting"), py::arg("seed"),
        py::arg("rep"));

  py::class_<LeafTruth>(m, "LeafTruth")
      .def_property_readonly("theta", [](const LeafTruth& t) { return to_array(t.theta); })
      .def_property_readonly("alternative",
                             [](const LeafTruth& t) {
                               std::vector<int> flags(t.alternative.begin(), t.alternative.end());
                               return to_array(flags);
                             })
      .def_readonly("theta0", &LeafTruth::theta0)
      .def("alternative_count", &LeafTruth::alternative_count);
  m.def("leaf_truth", &leaf_truth, py::arg("setting"), py::arg("binning"));

  py::class_<LayerMetrics>(m, "LayerMetrics")
      .def_readonly("layer", &LayerMetrics::layer)
      .def_readonly("fdp", &LayerMetrics::fdp)
      .def_readonly("false_negatives", &LayerMetrics::false_negatives)
      .def_readonly("discoveries", &LayerMetrics::discoveries);

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("fdp", &Metrics::fdp)
      .def_readonly("false_negatives", &Metrics::false_negatives)
      .def_readonly("discoveries", &Metrics::discoveries)
      .def_readonly("per_layer", &Metrics::per_layer);
  m.def(
      "compute_metrics",
      [](const TeamResult& result, const std::vector<bool>& alternative) {
        return compute_metrics(result, alternative);
      },
      py::arg("result"), py::arg("alternative"));

  py::class_<ReplicationConfig>(m, "ReplicationConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &ReplicationConfig::alpha)
      .def_readwrite("bins_per_dim", &ReplicationConfig::bins_per_dim)
      .def_readwrite("max_layers", &ReplicationConfig::max_layers)
      .def_readwrite("extra_stop", &ReplicationConfig::extra_stop)
      .def_readwrite("threads", &ReplicationConfig::threads);

  py::class_<ReplicationRow>(m, "ReplicationRow")
      .def_readonly("rep", &ReplicationRow::rep)
      .def_readonly("layer", &ReplicationRow::layer)
      .def_readonly("fdp", &ReplicationRow::fdp)
      .def_readonly("false_negatives", &ReplicationRow::false_negatives)
      .def_readonly("discoveries", &ReplicationRow::discoveries)
      .def_readonly("wall_ms", &ReplicationRow::wall_ms);

  py::class_<ReplicationSummaryRow>(m, "ReplicationSummaryRow")
      .def_readonly("layer", &ReplicationSummaryRow::layer)
      .def_readonly("fdp_mean", &ReplicationSummaryRow::fdp_mean)
      .def_readonly("fdp_sd", &ReplicationSummaryRow::fdp_sd)
      .def_readonly("fn_mean", &ReplicationSummaryRow::fn_mean)
      .def_readonly("fn_sd", &ReplicationSummaryRow::fn_sd)
      .def_readonly("disc_mean", &ReplicationSummaryRow::disc_mean)
      .def_readonly("disc_sd", &ReplicationSummaryRow::disc_sd)
      .def_readonly("wall_ms_mean", &ReplicationSummaryRow::wall_ms_mean);

  py::class_<ReplicationTable>(m, "ReplicationTable")
      .def_readonly("rows", &ReplicationTable::rows)
      .def_readonly("summary", &ReplicationTable::summary);

  m.def("run_replications", &run_replications, py::arg("setting"), py::arg("reps"),
        py::arg("config"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_replication_rows", &write_replication_rows, py::arg("table"), py::arg("path"));
  m.def("write_replication_summary", &write_replication_summary, py::arg("table"),
        py::arg("path"));
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "team/errors.hpp"
#include "team/matrix.hpp"

using namespace team;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "team_unit";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("read_matrix: four rows, two markers") {
  const auto path = write_temp("basic.csv",
                               "cohort,y1,y2\n"
                               "1,0.5,1.5\n"
                               "1,0.25,2.5\n"
                               "2,0.75,3.5\n"
                               "2,1.0,4.5\n");
  const MarkerMatrix m = read_matrix(path, ReadSchema{});
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 2);
  CHECK(m.cohort_count(1) == 2);
  CHECK(m.cohort_count(2) == 2);
  CHECK(m.at(0, 0) == 0.5);
  CHECK(m.at(3, 1) == 4.5);
  CHECK(m.marker_names == std::vector<std::string>{"y1", "y2"});
}

TEST_CASE("read_matrix error paths") {
  CHECK_THROWS_AS(read_matrix("/nonexistent/file.csv", ReadSchema{}), DataError);

  const auto bad_cell = write_temp("bad_cell.csv", "cohort,y1\n1,0.5\n2,NaN\n");
  CHECK_THROWS_WITH_AS(read_matrix(bad_cell, ReadSchema{}),
                       doctest::Contains("non-numeric value at row 2, column y1"), DataError);

  const auto bad_cohort = write_temp("bad_cohort.csv", "cohort,y1\n1,0.5\n3,0.7\n");
  CHECK_THROWS_AS(read_matrix(bad_cohort, ReadSchema{}), DataError);

  const auto one_cohort = write_temp("one_cohort.csv", "cohort,y1\n1,0.5\n1,0.7\n");
  CHECK_THROWS_AS(read_matrix(one_cohort, ReadSchema{}), DataError);

  const auto missing = write_temp("missing.csv", "cohort,y1\n1,\n2,0.7\n");
  CHECK_THROWS_AS(read_matrix(missing, ReadSchema{}), DataError);
}

TEST_CASE("read_matrix: two-file mode") {
  const auto a = write_temp("a.csv", "y1\n1\n2\n3\n");
  const auto b = write_temp("b.csv", "y1\n4\n5\n6\n7\n8\n");
  const MarkerMatrix m = read_matrix_two_files(a, b, ReadSchema{});
  CHECK(m.cohort_count(1) == 3);
  CHECK(m.cohort_count(2) == 5);
  CHECK(m.rows() == 8);
}

TEST_CASE("read_matrix: tab delimiter and marker selection") {
  const auto path = write_temp("tabs.tsv", "cohort\ty1\ty2\n1\t0.5\t9\n2\t0.75\t8\n");
  ReadSchema schema;
  schema.delimiter = '\t';
  schema.marker_columns = {"y2"};
  const MarkerMatrix m = read_matrix(path, schema);
  CHECK(m.cols() == 1);
  CHECK(m.at(0, 0) == 9.0);
}

TEST_CASE("quantile_normalize: reference is the mean of order statistics") {
  MarkerMatrix m;
  m.marker_names = {"y1"};
  m.values = {1, 2, 3, 10, 20, 30};
  m.cohort = {1, 1, 1, 2, 2, 2};
  m.sample_id = {"a", "a", "a", "b", "b", "b"};
  const MarkerMatrix out = quantile_normalize(m);
  CHECK(out.at(0, 0) == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(out.at(1, 0) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(out.at(2, 0) == doctest::Approx(16.5).epsilon(1e-14));
  CHECK(out.at(3, 0) == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(out.at(4, 0) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(out.at(5, 0) == doctest::Approx(16.5).epsilon(1e-14));
}

TEST_CASE("quantile_normalize: identity cases") {
  MarkerMatrix m;
  m.marker_names = {"y1"};
  m.values = {1, 2, 3, 1, 2, 3};
  m.cohort = {1, 1, 1, 2, 2, 2};
  m.sample_id = {"a", "a", "a", "b", "b", "b"};
  const MarkerMatrix out = quantile_normalize(m);
  CHECK(out.values == m.values);  // identical samples

  MarkerMatrix single = m;
  single.sample_id = {"a", "a", "a", "a", "a", "a"};
  CHECK(quantile_normalize(single).values == single.values);  // one sample

  MarkerMatrix no_ids = m;
  no_ids.sample_id.clear();
  CHECK_THROWS_AS(quantile_normalize(no_ids), ConfigError);
}

TEST_CASE("quantile_normalize: constant channel passes through with a warning") {
  MarkerMatrix m;
  m.marker_names = {"y1"};
  m.values = {5, 5, 5, 10, 20, 30};
  m.cohort = {1, 1, 1, 2, 2, 2};
  m.sample_id = {"a", "a", "a", "b", "b", "b"};
  std::vector<std::string> warnings;
  const MarkerMatrix out = quantile_normalize(m, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(out.at(0, 0) == 5.0);
  CHECK(out.at(1, 0) == 5.0);
  CHECK(out.at(3, 0) == 10.0);  // only one contributing sample left: unchanged
}

TEST_CASE("quantile_normalize: ties get the mean over their rank span") {
  MarkerMatrix m;
  m.marker_names = {"y1"};
  m.values = {1, 2, 2, 5, 10, 20, 30, 40};
  m.cohort = {1, 1, 1, 1, 2, 2, 2, 2};
  m.sample_id = {"a", "a", "a", "a", "b", "b", "b", "b"};
  const MarkerMatrix out = quantile_normalize(m);
  // Reference: (5.5, 11, 16, 22.5); the tied pair 2,2 spans ranks 2-3.
  CHECK(out.at(1, 0) == doctest::Approx(13.5).epsilon(1e-14));
  CHECK(out.at(2, 0) == doctest::Approx(13.5).epsilon(1e-14));
  CHECK(out.at(0, 0) == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(out.at(3, 0) == doctest::Approx(22.5).epsilon(1e-14));
}

TEST_CASE("quantile_normalize: unequal sizes interpolate the reference") {
  MarkerMatrix m;
  m.marker_names = {"y1"};
  m.values = {1, 3, 10, 20, 30};
  m.cohort = {1, 1, 2, 2, 2};
  m.sample_id = {"a", "a", "b", "b", "b"};
  const MarkerMatrix out = quantile_normalize(m);
  // Sample a has ranks u = 0, 1; sample b has u = 0, 0.5, 1.
  // ref(0) = (1+10)/2, ref(1) = (3+30)/2, ref(0.5) = (2+20)/2.
  CHECK(out.at(0, 0) == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(out.at(1, 0) == doctest::Approx(16.5).epsilon(1e-14));
  CHECK(out.at(2, 0) == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(out.at(3, 0) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(out.at(4, 0) == doctest::Approx(16.5).epsilon(1e-14));
}

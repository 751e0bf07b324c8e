#include <doctest.h>

#include <random>

#include "diagnet/data.hpp"
#include "diagnet/error.hpp"
#include "support.hpp"

using namespace diagnet;
using diagnet::testing::bundled;

TEST_CASE("json loader keeps shape and absorbs labels") {
  const Dataset ds = parse_dataset_json(R"({"points": [[0.3,1.5,1],[1.5,3,1],[1,2.5,1]], "labels": [1,1,1]})");
  CHECK(ds.num_samples() == 3);
  CHECK(ds.dim() == 3);
  CHECK(ds.effective()(1, 0) == 1.5);

  const Dataset neg = parse_dataset_json(R"({"points": [[2, 0]], "labels": [-1]})");
  CHECK(neg.effective()(0, 0) == -2.0);
  CHECK(neg.effective()(1, 0) == 0.0);
  CHECK(neg.points()(0, 0) == 2.0);
}

TEST_CASE("effective points are labels times points exactly") {
  const Dataset ds = bundled("mixed_four.json");
  for (std::size_t n = 0; n < ds.num_samples(); ++n) {
    for (std::size_t i = 0; i < ds.dim(); ++i) {
      const auto r = static_cast<Eigen::Index>(n);
      const auto c = static_cast<Eigen::Index>(i);
      CHECK(ds.effective()(c, r) == ds.labels()[n] * ds.points()(r, c));
    }
  }
}

TEST_CASE("csv loader") {
  SUBCASE("header, comments and blank lines are skipped") {
    const Dataset ds = parse_dataset_csv("x0,x1,label\n# note\n\n1,0.2,1\n-0.3,-1,-1\n");
    CHECK(ds.num_samples() == 2);
    CHECK(ds.effective()(1, 1) == 1.0);
  }
  SUBCASE("label 0 is rejected") { CHECK_THROWS_AS(parse_dataset_csv("1,2,0\n"), ParseError); }
  SUBCASE("ragged rows are rejected") { CHECK_THROWS_AS(parse_dataset_csv("1,2,1\n1,1\n"), ParseError); }
  SUBCASE("non-finite coordinates are rejected") { CHECK_THROWS_AS(parse_dataset_csv("nan,2,1\n"), ParseError); }
  SUBCASE("a bad cell after the first line is an error") {
    CHECK_THROWS_AS(parse_dataset_csv("1,2,1\n1,x,1\n"), ParseError);
  }
  SUBCASE("csv and json copies of a dataset agree") {
    const Dataset a = bundled("planar_four.csv");
    const Dataset b = bundled("planar_four.json");
    CHECK(a.effective() == b.effective());
  }
}

TEST_CASE("json loader rejects malformed input") {
  CHECK_THROWS_AS(parse_dataset_json("{"), ParseError);
  CHECK_THROWS_AS(parse_dataset_json(R"({"points": [[1]], "labels": [2]})"), ParseError);
  CHECK_THROWS_AS(parse_dataset_json(R"({"points": [[1], [1, 2]], "labels": [1, 1]})"), ParseError);
  CHECK_THROWS_AS(parse_dataset_json(R"({"points": [[1]], "labels": [1, 1]})"), ParseError);
  CHECK_THROWS_AS(parse_dataset_json(R"({"points": [], "labels": []})"), ParseError);
  CHECK_THROWS_AS(parse_dataset_json(R"([1, 2])"), ParseError);
  CHECK_THROWS_AS(load_dataset(diagnet::testing::data_path("missing.json")), ParseError);
}

TEST_CASE("constructor validates") {
  CHECK_THROWS_AS(Dataset(Matrix::Zero(0, 2), {}), DomainError);
  CHECK_THROWS_AS(Dataset(Matrix::Ones(1, 2), {3}), DomainError);
  CHECK_THROWS_AS(Dataset(Matrix::Ones(2, 2), {1}), DomainError);
}

TEST_CASE("stats of a single point") {
  const DataStats s = compute_stats(bundled("single_point.json"));
  CHECK(s.separable);
  CHECK(s.xmax == doctest::Approx(2.0));
  CHECK(s.xbar_per_coord[0] == 2.0);
  CHECK(s.xbar_per_coord[1] == 0.0);
  CHECK(s.xbar == 2.0);
  CHECK(s.gamma2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.witness[0] == doctest::Approx(1.0));
  CHECK(s.witness[1] == doctest::Approx(0.0));
}

TEST_CASE("opposing points are not separable") {
  const Dataset ds(Matrix{{1.0, 0.0}, {-1.0, 0.0}}, {1, 1});
  const DataStats s = compute_stats(ds);
  CHECK_FALSE(s.separable);
  CHECK(s.gamma2 == 0.0);
}

TEST_CASE("gamma2 matches the sphere-grid oracle on every small dataset") {
  for (const auto& name : diagnet::testing::small_datasets()) {
    CAPTURE(name);
    const Dataset ds = bundled(name);
    const DataStats s = compute_stats(ds);
    const auto grid = diagnet::testing::sphere_grid_l2(ds.effective());
    REQUIRE(s.separable);
    CHECK(std::abs(s.gamma2 - grid.margin) <= 1e-3);
    CHECK(s.xmax >= s.gamma2);
    CHECK(s.xbar == s.xbar_per_coord.maxCoeff());
  }
}

TEST_CASE("gamma2 dominates the margin of random unit vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (const auto& name : diagnet::testing::small_datasets()) {
    CAPTURE(name);
    const Dataset ds = bundled(name);
    const DataStats s = compute_stats(ds);
    for (int k = 0; k < 1000; ++k) {
      Vector u(static_cast<Eigen::Index>(ds.dim()));
      for (auto& x : u) x = g(rng);
      u.normalize();
      CHECK(diagnet::testing::min_margin(ds.effective(), u) <= s.gamma2 + 1e-12);
    }
  }
}

TEST_CASE("stats are deterministic") {
  const Dataset ds = bundled("depth3_b.json");
  const DataStats a = compute_stats(ds);
  const DataStats b = compute_stats(ds);
  CHECK(a.gamma2 == b.gamma2);
  CHECK(a.witness == b.witness);
}

TEST_CASE("generators are seeded") {
  const Dataset a = uniform_random_dataset(10, 4, 0.0, 1.0, 3);
  const Dataset b = uniform_random_dataset(10, 4, 0.0, 1.0, 3);
  const Dataset c = uniform_random_dataset(10, 4, 0.0, 1.0, 4);
  CHECK(a.points() == b.points());
  CHECK(a.points() != c.points());
  CHECK(a.points().minCoeff() >= 0.0);
  CHECK(a.points().maxCoeff() < 1.0);

  const Dataset s = sparse_random_dataset(10, 5, 0.5, 1);
  CHECK((s.points().col(0).array() == 1.0).all());
  CHECK(s.points().rightCols(4).maxCoeff() < 0.5);
}

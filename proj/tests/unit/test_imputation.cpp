#include <cmath>
#include <numeric>

#include "ccatl/error.hpp"
#include "ccatl/imputation.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ccatl;
using testing::NA;
using testing::heom_oracle;
using testing::nearest_donor;

namespace {

std::vector<Index> iota_n(Index n, Index from = 0) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), from);
  return v;
}

Matrix random_with_holes(std::mt19937_64& rng, Index n, Index d, double rate) {
  Matrix v = testing::randu(rng, n, d);
  std::bernoulli_distribution hole(rate);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      if (hole(rng)) v(i, j) = NA;
  for (Index j = 0; j < d; ++j) v(0, j) = std::isnan(v(0, j)) ? 0.5 : v(0, j);
  return v;
}

}  // namespace

TEST_CASE("heom: identity, overlap, and the hand-computed mixed case") {
  const Dataset a = testing::numeric_dataset(testing::rows_of({{2, 1}, {0, 0}, {10, 4}}));
  CHECK(heom_distance(a, 0, a, 0) == 0.0);
  const Dataset b = testing::numeric_dataset(testing::rows_of({{4, NA}}));
  CHECK(heom_distance(a, 0, b, 0) == doctest::Approx(std::sqrt(0.2 * 0.2 + 1.0)).epsilon(1e-14));
  CHECK(heom_distance(a, 0, b, 0) == doctest::Approx(1.0198).epsilon(1e-4));

  Dataset c = testing::numeric_dataset(testing::rows_of({{0}, {1}}));
  c.features[0].kind = FeatureKind::Categorical;
  c.features[0].categories = {"x", "y"};
  CHECK(heom_distance(c, 0, c, 1) == 1.0);

  const Dataset constant = testing::numeric_dataset(testing::rows_of({{3}, {3}}));
  const Dataset other = testing::numeric_dataset(testing::rows_of({{4}}));
  CHECK(heom_distance(constant, 0, constant, 1) == 0.0);
  CHECK(heom_distance(constant, 0, other, 0) == 1.0);

  CHECK_THROWS_AS(heom_distance(a, 0, c, 0), InputError);
}

TEST_CASE("heom property: symmetric, non-negative, bounded by sqrt(d)") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 1 + static_cast<Index>(rng() % 6);
    const Dataset x = testing::numeric_dataset(random_with_holes(rng, 10, d, 0.3));
    for (Index i = 0; i < x.rows(); ++i)
      for (Index k = 0; k < x.rows(); ++k) {
        const double h = heom_distance(x, i, x, k);
        CHECK(h >= 0.0);
        CHECK(h <= std::sqrt(static_cast<double>(d)) + 1e-12);
        CHECK(h == heom_distance(x, k, x, i));
        CHECK(h == doctest::Approx(heom_oracle(x, x, i, x, k, iota_n(d))).epsilon(1e-14));
      }
  }
}

TEST_CASE("knn_impute: fixed cases") {
  const Dataset full = testing::numeric_dataset(testing::rows_of({{1, 2}, {3, 4}}));
  CHECK(same_dataset(knn_impute(full, 3), full));

  // k = 1 copies the unique nearest donor
  const Dataset one = testing::numeric_dataset(testing::rows_of({{0.0, NA}, {0.1, 7.0}, {1.0, 9.0}}));
  CHECK(knn_impute(one, 1).values(0, 1) == 7.0);

  // four rows, k = 2: distances from row 0 on column 0 are 0.1, 0.4, 1.0 (range 1)
  const Dataset toy = testing::numeric_dataset(testing::rows_of({{0.0, NA}, {0.1, 2.0}, {0.4, 4.0}, {1.0, 10.0}}));
  const Dataset filled = knn_impute(toy, 2);
  const Index n1 = nearest_donor(toy, toy, 0, 1, {0, 1});
  CHECK(n1 == 1);
  CHECK(filled.values(0, 1) == 3.0);
  CHECK(filled.missing_count() == 0);

  // donor pool smaller than k uses every donor
  CHECK(knn_impute(toy, 10).values(0, 1) == doctest::Approx(16.0 / 3.0));
}

TEST_CASE("knn_impute: categorical mode with ties to the smaller code") {
  Dataset d = testing::numeric_dataset(testing::rows_of({{0.0, NA}, {0.1, 1.0}, {0.2, 0.0}, {0.9, 1.0}}));
  d.features[1].kind = FeatureKind::Categorical;
  d.features[1].categories = {"a", "b"};
  CHECK(knn_impute(d, 2).values(0, 1) == 0.0);
  CHECK(knn_impute(d, 3).values(0, 1) == 1.0);
}

TEST_CASE("knn_impute property: k = 1 matches an exhaustive donor scan on 50-row fixtures") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = testing::numeric_dataset(random_with_holes(rng, 50, 5, 0.2));
    const Dataset out = knn_impute(d, 1);
    CHECK(out.missing_count() == 0);
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = 0; j < d.cols(); ++j) {
        if (!d.missing(i, j)) {
          CHECK(out.values(i, j) == d.values(i, j));
          continue;
        }
        const Index r = nearest_donor(d, d, i, j, iota_n(d.cols()));
        REQUIRE(r >= 0);
        CHECK(out.values(i, j) == d.values(r, j));
      }
  }
}

TEST_CASE("knn_impute property: identical donors give a k-independent fill") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix v = testing::randu(rng, 12, 3);
    v.col(2).setConstant(0.25);
    v(3, 2) = NA;
    const Dataset d = testing::numeric_dataset(v);
    for (int k = 1; k <= 11; ++k) CHECK(knn_impute(d, k).values(3, 2) == 0.25);
  }
}

TEST_CASE("cross_transfer_impute") {
  const Dataset s = testing::with_names(testing::numeric_dataset(testing::rows_of({{0.0, 0.0, 5.0}, {0.9, 0.3, 6.0}})),
                                        {"a", "b", "s"});
  const Dataset t = testing::with_names(testing::numeric_dataset(testing::rows_of({{0.85, NA, 1.0}, {0.1, 0.2, 2.0}})),
                                        {"a", "b", "t"});
  const auto part = partition_features(s, t);

  SUBCASE("complete inputs are unchanged") {
    const Dataset tc = testing::with_names(testing::numeric_dataset(testing::rows_of({{0.5, 0.5, 1.0}, {0.1, 0.2, 2.0}})),
                                           {"a", "b", "t"});
    const auto [so, to] = cross_transfer_impute(s, tc, part, 1);
    CHECK(same_dataset(so, s));
    CHECK(same_dataset(to, tc));
  }
  SUBCASE("the strictly nearest donor is a source row") {
    const auto [so, to] = cross_transfer_impute(s, t, part, 1);
    const Dataset stacked = stack_rows(select_columns(s, std::vector<Index>{0, 1}), select_columns(t, std::vector<Index>{0, 1}));
    const Index r = nearest_donor(stacked, stacked, 2, 1, {0, 1});
    CHECK(r == 1);
    CHECK(to.values(0, 1) == 0.3);
    CHECK(to.values(0, 2) == 1.0);
    const auto [so_w, to_w] = cross_transfer_impute(s, t, part, 1, DonorPool::WithinDomain);
    CHECK(to_w.values(0, 1) == 0.2);
  }
  SUBCASE("mirrored gaps on identical common blocks get the same value") {
    const Matrix common = testing::rows_of({{0.1, 0.7}, {0.4, 0.2}, {0.8, 0.9}});
    Matrix sv = common, tv = common;
    sv(1, 0) = NA;
    tv(1, 0) = NA;
    const Dataset s2 = testing::with_names(testing::numeric_dataset(sv), {"a", "b"});
    const Dataset t2 = testing::with_names(testing::numeric_dataset(tv), {"a", "b"});
    const auto [so, to] = cross_transfer_impute(s2, t2, partition_features(s2, t2), 2);
    CHECK(so.values(1, 0) == to.values(1, 0));
  }
}

TEST_CASE("unify: identity on equal spaces, zero padding, kNN feature creation") {
  std::mt19937_64 rng(31);
  SUBCASE("equal feature spaces") {
    const Dataset s = testing::numeric_dataset(testing::randu(rng, 6, 3));
    const Dataset t = testing::numeric_dataset(testing::randu(rng, 4, 3));
    const auto u = unify(s, t, partition_features(s, t), {ImputeTag::Knni, 2});
    CHECK(same_dataset(u.source, s));
    CHECK(same_dataset(u.target, t));
  }
  const Dataset s = testing::with_names(testing::numeric_dataset(testing::randu(rng, 20, 4)), {"c0", "c1", "s0", "s1"});
  const Dataset t = testing::with_names(testing::numeric_dataset(testing::randu(rng, 8, 3)), {"c0", "c1", "t0"});
  const auto part = partition_features(s, t);
  SUBCASE("zero padding") {
    const auto u = unify(s, t, part, {ImputeTag::ZeroPad, 5});
    CHECK(u.source.cols() == 5);
    CHECK(u.target.cols() == 5);
    CHECK(u.source.features.size() == u.target.features.size());
    CHECK((u.source.values.col(4).array() == 0.0).all());
    CHECK((u.target.values.middleCols(2, 2).array() == 0.0).all());
    CHECK(u.source.values.leftCols(4) == s.values);
    CHECK(u.target.values.leftCols(2) == t.values.leftCols(2));
    CHECK(u.target.values.col(4) == t.values.col(2));
    CHECK(u.source.missing_count() == 0);
    CHECK(u.target.missing_count() == 0);
  }
  SUBCASE("kNN feature creation copies the common-nearest source row") {
    const auto u = unify(s, t, part, {ImputeTag::Knni, 1});
    for (Index i = 0; i < t.rows(); ++i) {
      const Dataset tu = reindex_columns(t, part.unified(), s.features);
      const Dataset su = reindex_columns(s, part.unified(), t.features);
      Index best = -1;
      double best_d = INFINITY;
      for (Index r = 0; r < su.rows(); ++r) {
        const double d = heom_oracle(su, su, r, tu, i, {0, 1});
        if (d < best_d) {
          best_d = d;
          best = r;
        }
      }
      CHECK(u.target.values(i, 2) == s.values(best, 2));
      CHECK(u.target.values(i, 3) == s.values(best, 3));
    }
  }
  SUBCASE("common block must be complete") {
    Dataset holes = s;
    holes.missing(0, 0) = true;
    CHECK_THROWS_AS(unify(holes, t, part, {ImputeTag::ZeroPad, 1}), InputError);
  }
}

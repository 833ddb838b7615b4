#include <algorithm>
#include <set>
#include <sstream>

#include "ccatl/error.hpp"
#include "ccatl/tabular.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ccatl;
using testing::NA;

namespace {

const char* kForecastSample =
    "ID,Age,Age_category,Smoking,LiveBirth,Menarche age,ER,TT,Amen_ST12\n"
    "5249,47.39,49,0,0,1,13,1,1\n"
    "5250,33.45,65,1,0,1,15,NA,1\n"
    "5258,52.20,81,0,1,1,1,NA,1\n"
    "5259,52.35,59,0,0,1,15,NA,1\n"
    "5263,50.40,38,0,1,1,NA,NA,1\n";

Dataset parse(const std::string& text, CsvOptions opts = {}) {
  std::istringstream in(text);
  return read_csv(in, opts);
}

}  // namespace

TEST_CASE("csv: sample shaped like the cohort table masks every NA cell") {
  CsvOptions opts;
  opts.ignore_columns = {"ID"};
  const Dataset d = parse(kForecastSample, opts);
  CHECK(d.rows() == 5);
  CHECK(d.cols() == 7);
  CHECK(d.find("ID") == -1);
  CHECK(d.missing_count() == 5);
  const Index tt = d.find("TT");
  const Index er = d.find("ER");
  for (Index i = 0; i < 5; ++i) CHECK(d.missing(i, tt) == (i > 0));
  CHECK(d.missing(4, er));
  CHECK((d.labels.array() == 1).all());
  // five distinct values at most: nothing qualifies as numerical
  for (const auto& f : d.features) CHECK(f.is_categorical());
}

TEST_CASE("csv: file without NA tokens has an empty mask") {
  const Dataset d = parse("a,b,Amen_ST12\n1,2,0\n3,4,1\n");
  CHECK(d.missing_count() == 0);
  CHECK(d.labels(1) == 1);
}

TEST_CASE("csv: ER column {1, NA, 0} codes by first appearance") {
  const Dataset d = parse("ER,Amen_ST12\n1,0\nNA,1\n0,0\n");
  REQUIRE(d.cols() == 1);
  const auto& f = d.features[0];
  CHECK(f.is_categorical());
  CHECK(f.categories == std::vector<std::string>{"1", "0"});
  CHECK(d.values(0, 0) == 0.0);
  CHECK(d.values(2, 0) == 1.0);
  CHECK(d.missing(1, 0));
  CHECK(d.missing_count() == 1);
}

TEST_CASE("csv: more than ten distinct numeric values make a numerical column") {
  std::string text = "x,Amen_ST12\n";
  for (int i = 0; i < 11; ++i) text += std::to_string(i * 0.5) + "," + std::to_string(i % 2) + "\n";
  const Dataset d = parse(text);
  CHECK(d.features[0].kind == FeatureKind::Numerical);
  CHECK(d.features[0].lo == 0.0);
  CHECK(d.features[0].hi == 5.0);

  std::string ten = "x,Amen_ST12\n";
  for (int i = 0; i < 10; ++i) ten += std::to_string(i) + ",0\n";
  CHECK(parse(ten).features[0].is_categorical());
}

TEST_CASE("csv: contract violations are rejected") {
  CHECK_THROWS_AS(parse("a,b\n1,2\n"), InputError);                       // no label column
  CHECK_THROWS_AS(parse("a,Amen_ST12\n1,2\n"), InputError);               // label outside {0,1}
  CHECK_THROWS_AS(parse("a,Amen_ST12\n1,NA\n"), InputError);              // missing label
  CHECK_THROWS_AS(parse("a,b,Amen_ST12\n1,NA,0\n2,NA,1\n"), InputError);  // feature never observed
  CHECK_THROWS_AS(parse("a,a,Amen_ST12\n1,2,0\n"), InputError);           // duplicate column
  CHECK_THROWS_AS(parse("a,b,Amen_ST12\n1,0\n"), InputError);             // ragged row
  CHECK_THROWS_AS(parse(""), InputError);
  CHECK_THROWS_AS(parse("a,Amen_ST12\n"), InputError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}), InputError);
}

TEST_CASE("csv: label column and missing marker are configurable") {
  CsvOptions opts;
  opts.label_column = "y";
  opts.na_token = "?";
  const Dataset d = parse("a,y\n?,1\n2,0\n", opts);
  CHECK(d.missing(0, 0));
  CHECK(d.labels(0) == 1);
}

TEST_CASE("csv: save then load is the identity, bit for bit") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix v = testing::randn(rng, 30, 5) * std::pow(10.0, trial % 7 - 3);
    std::bernoulli_distribution miss(0.2);
    for (Index i = 0; i < v.rows(); ++i)
      for (Index j = 0; j < v.cols(); ++j)
        if (miss(rng) && i > 0) v(i, j) = NA;
    ccatl::Labels y(v.rows());
    for (Index i = 0; i < y.size(); ++i) y(i) = static_cast<int>(rng() % 2);
    const Dataset d = testing::numeric_dataset(v, "f", y);

    std::stringstream buf;
    write_csv(buf, d, {});
    const Dataset back = read_csv(buf, {});
    CHECK(same_dataset(d, back));
  }

  const Dataset cat = parse(kForecastSample, {.ignore_columns = {"ID"}});
  std::stringstream buf;
  write_csv(buf, cat, {});
  CHECK(same_dataset(cat, read_csv(buf, {})));

  const Dataset tokens = parse("colour,Amen_ST12\nred,0\n\"dark, blue\",1\nNA,0\nred,1\n");
  std::stringstream buf2;
  write_csv(buf2, tokens, {});
  const Dataset back = read_csv(buf2, {});
  CHECK(same_dataset(tokens, back));
  CHECK(back.features[0].categories[1] == "dark, blue");
}

TEST_CASE("csv: file round trip through save_csv and load_csv") {
  const auto dir = testing::temp_dir("csv_roundtrip");
  std::mt19937_64 rng(5);
  const Dataset d = testing::numeric_dataset(testing::randn(rng, 40, 3));
  save_csv(dir + "/d.csv", d, {});
  CHECK(same_dataset(d, load_csv(dir + "/d.csv", {})));
}

TEST_CASE("format_double gives the shortest round-trip text") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    double back = 0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  double x;
  CHECK_FALSE(parse_double("1.5abc", x));
  CHECK_FALSE(parse_double("", x));
}

TEST_CASE("normalize: min-max endpoints and idempotence") {
  const Dataset d = testing::numeric_dataset(testing::rows_of({{0}, {5}, {10}}));
  const Dataset n = normalize(d);
  CHECK(n.values(0, 0) == 0.0);
  CHECK(n.values(1, 0) == 0.5);
  CHECK(n.values(2, 0) == 1.0);

  const Dataset unit = testing::numeric_dataset(testing::rows_of({{0}, {1}}));
  CHECK(normalize(unit).values == unit.values);

  const std::vector<double> age{47.39, 33.45, 52.20, 52.35, 50.40};
  Matrix a(5, 1);
  for (Index i = 0; i < 5; ++i) a(i, 0) = age[static_cast<std::size_t>(i)];
  const Dataset na = normalize(testing::numeric_dataset(a));
  const double lo = *std::min_element(age.begin(), age.end());
  const double hi = *std::max_element(age.begin(), age.end());
  for (Index i = 0; i < 5; ++i) CHECK(std::abs(na.values(i, 0) - (age[static_cast<std::size_t>(i)] - lo) / (hi - lo)) <= 1e-15);
  CHECK(na.values(1, 0) == 0.0);
  CHECK(na.values(3, 0) == 1.0);
}

TEST_CASE("normalize: categorical codes, constant and single-valued features") {
  const Dataset d = parse("c,k,s,Amen_ST12\nx,3,z,0\ny,3,z,1\nw,3,z,0\nx,3,z,1\n");
  const Dataset n = normalize(d);
  CHECK(n.values(0, 0) == 0.0);
  CHECK(n.values(1, 0) == 0.5);
  CHECK(n.values(2, 0) == 1.0);
  CHECK((n.values.col(1).array() == 0.0).all());
  CHECK((n.values.col(2).array() == 0.0).all());
  CHECK(same_dataset(normalize(n), n));

  const Dataset constant = testing::numeric_dataset(testing::rows_of({{4}, {4}, {4}}));
  CHECK((normalize(constant).values.array() == 0.0).all());
}

TEST_CASE("normalize property: observed cells land in [0,1], mask kept, idempotent") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 40);
    const Index d = 1 + static_cast<Index>(rng() % 6);
    Matrix v = testing::randn(rng, n, d) * 100.0;
    for (Index i = 1; i < n; ++i)
      for (Index j = 0; j < d; ++j)
        if (rng() % 5 == 0) v(i, j) = NA;
    const Dataset ds = testing::numeric_dataset(v);
    const Dataset once = normalize(ds);
    CHECK(once.missing == ds.missing);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j)
        if (!once.missing(i, j)) {
          CHECK(once.values(i, j) >= 0.0);
          CHECK(once.values(i, j) <= 1.0);
        }
    const Dataset twice = normalize(once);
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("scaling fitted on one dataset is reused verbatim on another") {
  const Dataset train = testing::numeric_dataset(testing::rows_of({{0}, {10}}));
  const Dataset test = testing::numeric_dataset(testing::rows_of({{5}, {20}}));
  const Dataset mapped = apply_scaling(test, fit_scaling(train));
  CHECK(mapped.values(0, 0) == 0.5);
  CHECK(mapped.values(1, 0) == 2.0);
}

TEST_CASE("partition: set algebra and unified order") {
  const Dataset s = testing::numeric_dataset(Matrix::Zero(1, 3));
  const Dataset t = testing::numeric_dataset(Matrix::Zero(1, 3));
  const auto p = partition_features(testing::with_names(s, {"a", "b", "c"}), testing::with_names(t, {"b", "c", "d"}));
  CHECK(p.common == std::vector<std::string>{"b", "c"});
  CHECK(p.source_only == std::vector<std::string>{"a"});
  CHECK(p.target_only == std::vector<std::string>{"d"});
  CHECK(p.unified() == std::vector<std::string>{"b", "c", "a", "d"});

  const auto same = partition_features(s, t);
  CHECK(same.source_only.empty());
  CHECK(same.target_only.empty());

  CHECK_THROWS_AS(partition_features(testing::with_names(s, {"a", "b", "c"}), testing::with_names(t, {"x", "y", "z"})),
                  InputError);
}

TEST_CASE("partition property: disjoint sets covering each domain") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> sn, tn;
    for (int k = 0; k < 12; ++k) {
      const auto r = rng() % 4;
      if (r == 0 || r == 2) sn.push_back("f" + std::to_string(k));
      if (r == 1 || r == 2) tn.push_back("f" + std::to_string(k));
    }
    sn.push_back("shared");
    tn.push_back("shared");
    std::shuffle(tn.begin(), tn.end(), rng);
    const Dataset s = testing::with_names(testing::numeric_dataset(Matrix::Zero(1, static_cast<Index>(sn.size()))), sn);
    const Dataset t = testing::with_names(testing::numeric_dataset(Matrix::Zero(1, static_cast<Index>(tn.size()))), tn);
    const auto p = partition_features(s, t);
    std::set<std::string> c(p.common.begin(), p.common.end()), so(p.source_only.begin(), p.source_only.end()),
        to(p.target_only.begin(), p.target_only.end());
    for (const auto& x : c) CHECK((so.count(x) == 0 && to.count(x) == 0));
    for (const auto& x : so) CHECK(to.count(x) == 0);
    std::set<std::string> s_union = c, t_union = c;
    s_union.insert(so.begin(), so.end());
    t_union.insert(to.begin(), to.end());
    CHECK(s_union == std::set<std::string>(sn.begin(), sn.end()));
    CHECK(t_union == std::set<std::string>(tn.begin(), tn.end()));
  }
}

TEST_CASE("numerical_rank") {
  CHECK(numerical_rank(Matrix::Identity(3, 3)) == 3);
  std::mt19937_64 rng(2);
  Matrix dup = testing::randn(rng, 8, 4);
  dup.col(3) = dup.col(1);
  CHECK(numerical_rank(dup) == 3);
  const Matrix g = testing::randn(rng, 10, 4);
  Eigen::JacobiSVD<Matrix> svd(g);
  const Vector sv = svd.singularValues();
  CHECK(numerical_rank(g) == (sv.array() > 1e-8 * sv(0)).count());
  CHECK(numerical_rank(g) == 4);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 8);
    const Index d = 1 + static_cast<Index>(rng() % 8);
    CHECK(numerical_rank(testing::randn(rng, n, d)) <= std::min(n, d));
  }
  const Dataset incomplete = testing::numeric_dataset(testing::rows_of({{1, NA}, {2, 3}}));
  CHECK_THROWS_AS(numerical_rank(incomplete), InputError);
}

TEST_CASE("harmonize: shared features agree in kind and coding") {
  const Dataset s = parse("g,Amen_ST12\na,0\nb,1\n");
  const Dataset t = parse("g,Amen_ST12\nb,0\nc,1\n");
  const auto [hs, ht] = harmonize_schemas(s, t);
  CHECK(hs.features[0].categories == ht.features[0].categories);
  const auto& cats = hs.features[0].categories;
  auto code = [&](const std::string& tok) {
    return static_cast<double>(std::find(cats.begin(), cats.end(), tok) - cats.begin());
  };
  CHECK(hs.values(1, 0) == code("b"));
  CHECK(ht.values(0, 0) == code("b"));
  CHECK(ht.values(1, 0) == code("c"));

  std::string num = "g,Amen_ST12\n";
  for (int i = 0; i < 12; ++i) num += std::to_string(i) + ",0\n";
  const Dataset sn = parse(num);
  const Dataset tc = parse("g,Amen_ST12\n1,0\n3,1\n");
  const auto [a, b] = harmonize_schemas(sn, tc);
  CHECK(a.features[0].kind == FeatureKind::Numerical);
  CHECK(b.features[0].kind == FeatureKind::Numerical);
  CHECK(b.values(1, 0) == 3.0);
}

TEST_CASE("synth: determinism, missingness rate, label balance") {
  SynthConfig cfg;
  cfg.n_source = 120;
  cfg.n_target = 100;
  cfg.d_common = 6;
  cfg.d_source_only = 3;
  cfg.d_target_only = 4;
  cfg.seed = 17;
  const auto [s1, t1] = synth_generate(cfg);
  const auto [s2, t2] = synth_generate(cfg);
  CHECK(same_dataset(s1, s2));
  CHECK(same_dataset(t1, t2));
  CHECK(s1.cols() == 9);
  CHECK(t1.cols() == 10);
  CHECK(partition_features(s1, t1).common.size() == 6);

  cfg.missing_rate = 0.0;
  CHECK(synth_generate(cfg).first.missing_count() == 0);

  cfg.missing_rate = 0.2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const Dataset t = synth_generate(cfg).second;
    const double frac = static_cast<double>(t.missing_count()) / static_cast<double>(t.values.size());
    CHECK(std::abs(frac - 0.2) <= 0.05);
  }

  cfg.label_noise = 0.0;
  cfg.n_source = 400;
  cfg.n_target = 200;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto [s, t] = synth_generate(cfg);
    CHECK(std::abs(s.labels.cast<double>().mean() - 0.5) <= 0.1);
    CHECK(std::abs(t.labels.cast<double>().mean() - 0.5) <= 0.1);
  }

  cfg.n_source = 10;
  cfg.n_target = 20;
  CHECK_THROWS_AS(synth_generate(cfg), InputError);
}

TEST_CASE("row and column plumbing") {
  const Dataset d = testing::numeric_dataset(testing::rows_of({{1, 2}, {3, NA}, {5, 6}}));
  const std::vector<Index> rows{2, 0};
  const Dataset r = select_rows(d, rows);
  CHECK(r.values(0, 0) == 5.0);
  const std::vector<std::string> names{"f1", "zz", "f0"};
  ccatl::FeatureMeta zz;
  zz.name = "zz";
  const std::vector<ccatl::FeatureMeta> fallback{zz};
  const Dataset re = reindex_columns(d, names, fallback);
  CHECK(re.cols() == 3);
  CHECK(re.missing.col(1).all());
  CHECK(re.missing(1, 0));
  CHECK(re.values(2, 2) == 5.0);
  const Dataset st = stack_rows(d, d);
  CHECK(st.rows() == 6);
  CHECK(st.missing(4, 1));
}

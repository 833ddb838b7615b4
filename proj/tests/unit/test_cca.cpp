#include <string>

#include "ccatl/cca.hpp"
#include "ccatl/error.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ccatl;

namespace {

Matrix random_spd(std::mt19937_64& rng, Index n) {
  const Matrix a = testing::randn(rng, n, n);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

Matrix centered(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

}  // namespace

TEST_CASE("gen_eig_sym: reduces to the standard problem and satisfies residuals") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 3, 1;
  const auto e = gen_eig_sym(a, Matrix::Identity(2, 2), 1);
  CHECK(e.values(0) == doctest::Approx(3.0));
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-12);

  std::mt19937_64 rng(7);
  const Matrix b = random_spd(rng, 4);
  const auto same = gen_eig_sym(b, b, 4);
  for (Index k = 0; k < 4; ++k) CHECK(same.values(k) == doctest::Approx(1.0).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    Matrix sa = testing::randn(rng, 5, 5);
    sa = (sa + sa.transpose()).eval();
    const Matrix sb = random_spd(rng, 5);
    const auto eig = gen_eig_sym(sa, sb, 5);
    for (Index k = 0; k < 5; ++k) {
      const Vector v = eig.vectors.col(k);
      CHECK((sa * v - eig.values(k) * sb * v).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(v.dot(sb * v) == doctest::Approx(1.0).epsilon(1e-10));
      if (k > 0) CHECK(eig.values(k) <= eig.values(k - 1));
    }
  }
}

TEST_CASE("gen_eig_sym: rejects an indefinite B and reports its smallest eigenvalue") {
  Matrix b = Matrix::Identity(2, 2);
  b(1, 1) = -2.0;
  try {
    gen_eig_sym(Matrix::Identity(2, 2), b, 1);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("-2") != std::string::npos);
  }
  CHECK_THROWS_AS(gen_eig_sym(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 3), InputError);
}

TEST_CASE("linear cca: block solve agrees with the product-form eigenproblem") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix xs = testing::randn(rng, 60, 4);
    const Matrix xt = xs.leftCols(3) * testing::randn(rng, 3, 3) + 0.8 * testing::randn(rng, 60, 3);
    const double rho = 1e-3;
    const auto m = fit_linear_cca(xs, xt, 3, rho);
    const Matrix cs = centered(xs), ct = centered(xt);
    const double n = 60.0;
    const Matrix ss = cs.transpose() * cs / n + rho * Matrix::Identity(4, 4);
    const Matrix tt = ct.transpose() * ct / n + rho * Matrix::Identity(3, 3);
    const Matrix st = cs.transpose() * ct / n;
    const Matrix prod = ss.inverse() * st * tt.inverse() * st.transpose();
    Eigen::EigenSolver<Matrix> es(prod);
    std::vector<double> ev;
    for (Index i = 0; i < 4; ++i) ev.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
    std::sort(ev.rbegin(), ev.rend());
    for (Index k = 0; k < 3; ++k) CHECK(m.correlations(k) == doctest::Approx(ev[static_cast<std::size_t>(k)]).epsilon(1e-9));
  }
}

TEST_CASE("linear cca: top correlation of the 8x2 fixture matches direct maximization") {
  Matrix xs, xt;
  testing::cca_fixture_8x2(xs, xt);
  const auto m = fit_linear_cca(xs, xt, 1, 1e-8);
  CHECK(std::abs(m.correlations(0) - testing::brute_force_top_correlation(xs, xt)) < 1e-4);
}

TEST_CASE("linear cca: self-correlation, negation, signs, normalization") {
  std::mt19937_64 rng(5);
  const Matrix x = testing::randn(rng, 40, 4);
  const auto self = fit_linear_cca(x, x, 4, 1e-8);
  for (Index k = 0; k < 4; ++k) CHECK(self.correlations(k) >= 1.0 - 1e-4);

  const Matrix x1 = testing::randn(rng, 30, 1);
  CHECK(fit_linear_cca(x1, -x1, 1, 1e-10).correlations(0) == doctest::Approx(1.0).epsilon(1e-8));

  const Matrix y = x.leftCols(2) + 0.5 * testing::randn(rng, 40, 3).leftCols(2);
  const auto m = fit_linear_cca(x, y, 2, 1e-4);
  for (Index k = 0; k < m.r(); ++k) {
    Index i = 0;
    while (std::abs(m.w_source(i, k)) <= 1e-10) ++i;
    CHECK(m.w_source(i, k) > 0);
    if (k > 0) CHECK(m.correlations(k) <= m.correlations(k - 1));
    CHECK(m.correlations(k) >= 0.0);
    CHECK(m.correlations(k) <= 1.0);
  }
  const Matrix cs = centered(x), ct = centered(y);
  const Matrix bs = cs.transpose() * cs / 40.0 + 1e-4 * Matrix::Identity(4, 4);
  const Matrix bt = ct.transpose() * ct / 40.0 + 1e-4 * Matrix::Identity(2, 2);
  CHECK((m.w_source.transpose() * bs * m.w_source - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((m.w_target.transpose() * bt * m.w_target - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("linear cca: transform centering and latent correlations") {
  std::mt19937_64 rng(9);
  const Matrix x = testing::randn(rng, 80, 3);
  const Matrix y = x * testing::randn(rng, 3, 3) + 0.7 * testing::randn(rng, 80, 3);
  const auto m = fit_linear_cca(x, y, 3, 1e-10);
  const Matrix mean_rows = m.mu_source.transpose().replicate(4, 1);
  CHECK(transform(m, mean_rows, View::Source).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix ls = transform(m, x, View::Source);
  const Matrix lt = transform(m, y, View::Target);
  for (Index k = 0; k < 3; ++k) {
    CHECK(ls.col(k).squaredNorm() / 80.0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(testing::pearson(ls.col(k), lt.col(k)) - m.correlations(k)) < 1e-6);
    for (Index l = 0; l < k; ++l) CHECK(std::abs(testing::pearson(ls.col(k), ls.col(l))) < 1e-6);
  }
  CHECK_THROWS_AS(transform(m, Matrix::Zero(2, 5), View::Source), InputError);
}

TEST_CASE("linear cca property: affine invariance and monotone shrinkage") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = testing::randn(rng, 50, 3);
    const Matrix y = x.leftCols(2) * testing::randn(rng, 2, 3) + testing::randn(rng, 50, 3);
    const Matrix map = testing::randn(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
    const Matrix y2 = (y * map).rowwise() + testing::randn(rng, 1, 3).row(0);
    const auto a = fit_linear_cca(x, y, 3, 1e-10);
    const auto b = fit_linear_cca(x, y2, 3, 1e-10);
    CHECK((a.correlations - b.correlations).cwiseAbs().maxCoeff() < 1e-6);

    double prev = 2.0;
    for (double rho : {1e-8, 1e-4, 1e-2, 1e-1, 1.0, 10.0}) {
      const double top = fit_linear_cca(x, y, 1, rho).correlations(0);
      CHECK(top <= prev + 1e-12);
      prev = top;
    }
  }
}

TEST_CASE("linear cca: contract violations") {
  const Matrix one = testing::rows_of({{1, 2}});
  CHECK_THROWS_AS(fit_linear_cca(one, one, 1), InputError);
  std::mt19937_64 rng(2);
  const Matrix x = testing::randn(rng, 10, 2);
  CHECK_THROWS_AS(fit_linear_cca(x, x, 3), InputError);
  CHECK_THROWS_AS(fit_linear_cca(x, Matrix::Ones(10, 2), 1), InputError);
  CHECK_THROWS_AS(fit_linear_cca(x, testing::randn(rng, 9, 2), 1), InputError);
  CHECK(default_latent_dim(7, 10) == 3);
  CHECK(default_latent_dim(1, 10) == 1);
}

TEST_CASE("kernel cca: linear kernel reproduces linear cca under matched regularization") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 40;
    const Matrix x = testing::randn(rng, n, 4);
    const Matrix y = x.leftCols(3) * testing::randn(rng, 3, 3) + 0.6 * testing::randn(rng, n, 3);
    const double rho = 1e-4;
    const auto lin = fit_linear_cca(x, y, 3, rho);
    const auto ker = fit_kernel_cca(x, y, 3, KernelSpec::linear(), rho * static_cast<double>(n));
    CHECK((lin.correlations - ker.correlations).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix test = testing::randn(rng, 10, 4);
    const Matrix a = transform(lin, test, View::Source);
    const Matrix b = transform(ker, test, View::Source);
    CHECK((a.cwiseAbs() - b.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("kernel cca: training rows, single rows, primal reconstruction") {
  std::mt19937_64 rng(17);
  const Matrix x = testing::randn(rng, 30, 3);
  const Matrix y = x * testing::randn(rng, 3, 2) + 0.5 * testing::randn(rng, 30, 2);
  for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf()}) {
    const auto m = fit_kernel_cca(x, y, 2, k, 1e-2);
    const Matrix g = gram(x, x, m.kernel_source);
    const Matrix h = Matrix::Identity(30, 30) - Matrix::Constant(30, 30, 1.0 / 30.0);
    const Matrix direct = h * g * h * m.alpha_source;
    const Matrix via = transform(m, x, View::Source);
    CHECK((direct - via).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((transform(m, x.row(4), View::Source) - via.row(4)).cwiseAbs().maxCoeff() < 1e-8);
    for (Index c = 0; c < 2; ++c) CHECK(m.correlations(c) <= 1.0);
  }
  const auto lin = fit_kernel_cca(x, y, 2, KernelSpec::linear(), 1e-2);
  const Vector mu = x.colwise().mean().transpose();
  const Matrix w = centered(x).transpose() * lin.alpha_source;
  const Matrix test = testing::randn(rng, 6, 3);
  CHECK(((test.rowwise() - mu.transpose()) * w - transform(lin, test, View::Source)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("kernel cca: identical views and a nonlinear relation") {
  std::mt19937_64 rng(23);
  const Matrix x = testing::randn(rng, 50, 2);
  CHECK(fit_kernel_cca(x, x, 1, KernelSpec::linear(), 1e-6).correlations(0) >= 0.999);

  const Matrix s = testing::randn(rng, 80, 1);
  const Matrix t = s.array().square().matrix();
  const double linear_top = fit_linear_cca(s, t, 1, 1e-4).correlations(0);
  const double rbf_top = fit_kernel_cca(s, t, 1, KernelSpec::rbf(), 1e-2).correlations(0);
  CHECK(rbf_top > linear_top);
  CHECK(rbf_top > 0.9);
}

TEST_CASE("kernel cca: contract violations") {
  std::mt19937_64 rng(1);
  const Matrix x = testing::randn(rng, 5, 2);
  CHECK_THROWS_AS(fit_kernel_cca(x, x, 3, KernelSpec::linear(), 1e-3), InputError);
  CHECK_THROWS_AS(fit_kernel_cca(x, x, 1, KernelSpec::linear(), 0.0), InputError);
  CHECK_THROWS_AS(fit_kernel_cca(x, Matrix::Ones(5, 2), 1, KernelSpec::linear(), 1e-3), InputError);
  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(fit_kernel_cca(bad, x, 1, KernelSpec::linear(), 1e-3));
}

TEST_CASE("kernels: parsing and the median heuristic") {
  CHECK(parse_kernel("linear") == KernelSpec::linear());
  CHECK(parse_kernel("rbf") == KernelSpec::rbf());
  CHECK(parse_kernel("rbf:0.25").gamma == 0.25);
  CHECK_THROWS_AS(parse_kernel("poly"), InputError);
  CHECK_THROWS_AS(parse_kernel("rbf:-1"), InputError);
  CHECK(parse_kernel(to_string(KernelSpec::rbf(1.0 / 3.0))).gamma == 1.0 / 3.0);
  const Matrix pts = testing::rows_of({{0}, {1}, {3}});
  // squared distances 1, 9, 4 -> median 4
  CHECK(median_heuristic_gamma(pts) == 0.25);
  CHECK(median_heuristic_gamma(testing::rows_of({{2}, {2}})) == 1.0);
}

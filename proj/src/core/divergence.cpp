#include "ccatl/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ccatl/error.hpp"

namespace ccatl {

double proxy_a_from_error(double err) { return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0); }

namespace {

std::vector<Index> shuffled(Index n, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Ridge-regularized logistic regression by full-batch gradient descent; returns the
// held-out misclassification rate.
double domain_classifier_error(const Matrix& train_x, const Vector& train_y, const Matrix& test_x,
                               const Vector& test_y, const ProxyAOptions& opts) {
  const Vector mean = train_x.colwise().mean().transpose();
  Vector scale = ((train_x.rowwise() - mean.transpose()).colwise().squaredNorm() /
                  static_cast<double>(train_x.rows()))
                     .transpose()
                     .cwiseSqrt();
  for (Index j = 0; j < scale.size(); ++j)
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
  const Matrix xs = (train_x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  const Matrix xt = (test_x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  const auto n = static_cast<double>(xs.rows());
  Vector w = Vector::Zero(xs.cols());
  double b = 0.0;
  for (int it = 0; it < opts.iterations; ++it) {
    Vector z = xs * w;
    z.array() += b;
    const Vector p = (1.0 + (-z.array()).exp()).inverse().matrix();
    const Vector resid = p - train_y;
    w -= opts.step * (xs.transpose() * resid / n + opts.ridge * w);
    b -= opts.step * resid.mean();
  }
  Vector score = xt * w;
  score.array() += b;
  Index wrong = 0;
  for (Index i = 0; i < score.size(); ++i) {
    const double pred = score(i) > 0.0 ? 1.0 : 0.0;
    if (pred != test_y(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(score.size());
}

}  // namespace

double proxy_a_distance(const Matrix& x, const Matrix& y, std::uint64_t seed, const ProxyAOptions& opts) {
  if (x.cols() != y.cols()) throw InputError("proxy-A: width mismatch");
  if (x.rows() < 4 || y.rows() < 4) throw InputError("proxy-A: need at least 4 rows per set");
  if (opts.repeats < 1) throw InputError("proxy-A: repeats must be >= 1");
  const Index m = std::min(x.rows(), y.rows());
  const Index n_train = m / 2;
  const Index n_test = m - n_train;

  double total = 0.0;
  for (int rep = 0; rep < opts.repeats; ++rep) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(rep));
    const auto ix = shuffled(x.rows(), rng);
    const auto iy = shuffled(y.rows(), rng);
    Matrix train_x(2 * n_train, x.cols()), test_x(2 * n_test, x.cols());
    Vector train_y(2 * n_train), test_y(2 * n_test);
    for (Index i = 0; i < n_train; ++i) {
      train_x.row(i) = x.row(ix[static_cast<std::size_t>(i)]);
      train_y(i) = 0.0;
      train_x.row(n_train + i) = y.row(iy[static_cast<std::size_t>(i)]);
      train_y(n_train + i) = 1.0;
    }
    for (Index i = 0; i < n_test; ++i) {
      test_x.row(i) = x.row(ix[static_cast<std::size_t>(n_train + i)]);
      test_y(i) = 0.0;
      test_x.row(n_test + i) = y.row(iy[static_cast<std::size_t>(n_train + i)]);
      test_y(n_test + i) = 1.0;
    }
    total += proxy_a_from_error(domain_classifier_error(train_x, train_y, test_x, test_y, opts));
  }
  return total / static_cast<double>(opts.repeats);
}

double mmd(const Matrix& x, const Matrix& y, const KernelSpec& kernel) {
  if (x.cols() != y.cols()) throw InputError("mmd: width mismatch");
  if (x.rows() < 1 || y.rows() < 1) throw InputError("mmd: empty sample");
  KernelSpec k = kernel;
  if (k.tag == KernelTag::Rbf && !(k.gamma > 0.0)) {
    Matrix pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    k = resolve_kernel(k, pooled);
  }
  const double kxx = gram(x, x, k).mean();
  const double kxy = gram(x, y, k).mean();
  const double kyy = gram(y, y, k).mean();
  return std::sqrt(std::max(0.0, kxx - 2.0 * kxy + kyy));
}

namespace {
Matrix coral_covariance(const Matrix& d) {
  const auto n = static_cast<double>(d.rows());
  const Eigen::RowVectorXd col_sum = d.colwise().sum();
  return (d.transpose() * d - col_sum.transpose() * col_sum / n) / (n - 1.0);
}
}  // namespace

double coral_loss(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw InputError("coral: width mismatch");
  if (x.rows() < 2 || y.rows() < 2) throw InputError("coral: each set needs at least 2 rows");
  const auto d = static_cast<double>(x.cols());
  return (coral_covariance(x) - coral_covariance(y)).squaredNorm() / (4.0 * d * d);
}

std::string to_string(Stage s) { return s == Stage::PreCca ? "pre_cca" : "post_cca"; }

Stage parse_stage(const std::string& s) {
  if (s == "pre_cca") return Stage::PreCca;
  if (s == "post_cca") return Stage::PostCca;
  throw InputError("unknown stage '" + s + "'");
}

DivergenceReport divergence_report(const Matrix& x, const Matrix& y, Stage stage, const KernelSpec& kernel,
                                   std::uint64_t seed) {
  DivergenceReport r;
  r.stage = stage;
  r.kernel = kernel;
  r.mmd = mmd(x, y, kernel);
  r.proxy_a = proxy_a_distance(x, y, seed);
  r.coral = coral_loss(x, y);
  if (!std::isfinite(r.mmd) || !std::isfinite(r.proxy_a) || !std::isfinite(r.coral))
    throw NumericalError("divergence: non-finite metric");
  return r;
}

void write_divergence_csv(std::ostream& out, const std::vector<DivergenceRow>& rows) {
  out << "transfer_id,baseline,stage,mmd,proxy_a,coral\n";
  for (const auto& r : rows)
    out << r.transfer_id << ',' << r.baseline << ',' << to_string(r.report.stage) << ',' << format_double(r.report.mmd)
        << ',' << format_double(r.report.proxy_a) << ',' << format_double(r.report.coral) << '\n';
}

std::vector<DivergenceRow> read_divergence_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "transfer_id,baseline,stage,mmd,proxy_a,coral")
    throw InputError("divergence csv: bad header");
  std::vector<DivergenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw InputError("divergence csv: expected 6 fields");
    DivergenceRow r;
    r.transfer_id = f[0];
    r.baseline = f[1];
    r.report.stage = parse_stage(f[2]);
    if (!parse_double(f[3], r.report.mmd) || !parse_double(f[4], r.report.proxy_a) ||
        !parse_double(f[5], r.report.coral))
      throw InputError("divergence csv: bad number");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ccatl

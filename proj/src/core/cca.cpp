#include "ccatl/cca.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

constexpr double kSignThreshold = 1e-10;
constexpr double kGramRankTol = 1e-10;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// First significant coefficient of each `lead` column made positive; `follow` flips with it.
void fix_signs(Matrix& lead, Matrix& follow) {
  for (Index c = 0; c < lead.cols(); ++c) {
    for (Index i = 0; i < lead.rows(); ++i) {
      if (std::abs(lead(i, c)) > kSignThreshold) {
        if (lead(i, c) < 0) {
          lead.col(c) *= -1.0;
          follow.col(c) *= -1.0;
        }
        break;
      }
    }
  }
}

Vector clip_unit(const Vector& v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

EigenPairs gen_eig_sym(const Matrix& a, const Matrix& b, Index r) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw InputError("gen_eig_sym: A and B must be square and of equal size");
  const Index p = a.rows();
  if (r < 1 || r > p) throw InputError("gen_eig_sym: requested " + std::to_string(r) + " pairs from a " +
                                       std::to_string(p) + "-dimensional problem");
  const Matrix as = symmetrize(a);
  const Matrix bs = symmetrize(b);
  if (!as.allFinite() || !bs.allFinite()) throw NumericalError("gen_eig_sym: non-finite input");

  Eigen::LLT<Matrix> llt(bs);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> ev(bs, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "gen_eig_sym: B is not positive-definite (smallest eigenvalue " << ev.eigenvalues()(0) << ")";
    throw NumericalError(msg.str());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(as, bs, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("gen_eig_sym: eigensolver did not converge");

  EigenPairs out;
  out.values.resize(r);
  out.vectors.resize(p, r);
  for (Index k = 0; k < r; ++k) {
    out.values(k) = solver.eigenvalues()(p - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(p - 1 - k);
  }
  return out;
}

Index default_latent_dim(Index rank_source, Index rank_target) {
  return std::max<Index>(1, std::min(rank_source, rank_target) / 2);
}

CcaModel fit_linear_cca(const Matrix& source, const Matrix& target, Index r, double rho) {
  if (source.rows() != target.rows()) throw InputError("cca: views must have the same number of rows");
  if (source.rows() < 2) throw InputError("cca: need at least 2 paired rows");
  if (!(rho >= 0.0)) throw InputError("cca: rho must be >= 0");
  const Index p = source.cols();
  const Index q = target.cols();
  if (r < 1 || r > std::min(p, q))
    throw InputError("cca: latent dimension " + std::to_string(r) + " exceeds available spectrum " +
                     std::to_string(std::min(p, q)));
  const auto m = static_cast<double>(source.rows());

  CcaModel model;
  model.rho = rho;
  model.mu_source = source.colwise().mean().transpose();
  model.mu_target = target.colwise().mean().transpose();
  const Matrix xs = source.rowwise() - model.mu_source.transpose();
  const Matrix xt = target.rowwise() - model.mu_target.transpose();
  if (xs.cwiseAbs().maxCoeff() == 0.0) throw InputError("cca: source view is constant");
  if (xt.cwiseAbs().maxCoeff() == 0.0) throw InputError("cca: target view is constant");

  const Matrix bs = xs.transpose() * xs / m + rho * Matrix::Identity(p, p);
  const Matrix bt = xt.transpose() * xt / m + rho * Matrix::Identity(q, q);
  const Matrix cst = xs.transpose() * xt / m;

  Matrix a = Matrix::Zero(p + q, p + q);
  a.topRightCorner(p, q) = cst;
  a.bottomLeftCorner(q, p) = cst.transpose();
  Matrix b = Matrix::Zero(p + q, p + q);
  b.topLeftCorner(p, p) = bs;
  b.bottomRightCorner(q, q) = bt;

  const EigenPairs eig = gen_eig_sym(a, b, r);
  model.w_source = eig.vectors.topRows(p);
  model.w_target = eig.vectors.bottomRows(q);
  for (Index k = 0; k < r; ++k) {
    const double ns = std::sqrt(model.w_source.col(k).dot(bs * model.w_source.col(k)));
    const double nt = std::sqrt(model.w_target.col(k).dot(bt * model.w_target.col(k)));
    if (ns > 0.0) model.w_source.col(k) /= ns;
    if (nt > 0.0) model.w_target.col(k) /= nt;
  }
  fix_signs(model.w_source, model.w_target);
  model.correlations = clip_unit(eig.values);
  return model;
}

CcaModel fit_linear_cca(const PairedViews& p, Index r, double rho) {
  return fit_linear_cca(p.source_rows, p.target_rows, r, rho);
}

Matrix transform(const CcaModel& m, const Matrix& rows, View view) {
  const Vector& mu = view == View::Source ? m.mu_source : m.mu_target;
  const Matrix& w = view == View::Source ? m.w_source : m.w_target;
  if (rows.cols() != mu.size())
    throw InputError("cca transform: expected width " + std::to_string(mu.size()) + ", got " +
                     std::to_string(rows.cols()));
  return (rows.rowwise() - mu.transpose()) * w;
}

namespace {

struct CenteredGram {
  Matrix centered;
  Vector col_mean;
  double grand_mean = 0.0;
};

CenteredGram center_gram(const Matrix& g) {
  CenteredGram c;
  c.col_mean = g.colwise().mean().transpose();
  c.grand_mean = c.col_mean.mean();
  c.centered = g;
  c.centered.rowwise() -= c.col_mean.transpose();
  c.centered.colwise() -= c.col_mean;
  c.centered.array() += c.grand_mean;
  c.centered = symmetrize(c.centered);
  return c;
}

struct RangeBasis {
  Matrix basis;   // M x k eigenvectors with significant eigenvalues
  Vector values;  // k eigenvalues
};

RangeBasis range_basis(const Matrix& centered) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(centered);
  if (es.info() != Eigen::Success) throw NumericalError("kcca: Gram eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  RangeBasis rb;
  if (!(top > 0.0)) return rb;
  std::vector<Index> keep;
  for (Index i = ev.size() - 1; i >= 0; --i)
    if (ev(i) > kGramRankTol * top) keep.push_back(i);
  rb.basis.resize(centered.rows(), static_cast<Index>(keep.size()));
  rb.values.resize(static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    rb.basis.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]);
    rb.values(static_cast<Index>(c)) = ev(keep[c]);
  }
  return rb;
}

}  // namespace

KccaModel fit_kernel_cca(const Matrix& source, const Matrix& target, Index r, const KernelSpec& kernel,
                         double kappa) {
  if (source.rows() != target.rows()) throw InputError("kcca: views must have the same number of rows");
  if (source.rows() < 2) throw InputError("kcca: need at least 2 paired rows");
  if (!(kappa > 0.0)) throw InputError("kcca: kappa must be > 0");
  if (r < 1) throw InputError("kcca: latent dimension must be >= 1");
  const auto m = static_cast<double>(source.rows());

  KccaModel model;
  model.kappa = kappa;
  model.train_source = source;
  model.train_target = target;
  model.kernel_source = resolve_kernel(kernel, source);
  model.kernel_target = resolve_kernel(kernel, target);

  const Matrix gs = gram(source, source, model.kernel_source);
  const Matrix gt = gram(target, target, model.kernel_target);
  if (!gs.allFinite() || !gt.allFinite()) throw NumericalError("kcca: Gram matrix is not finite");
  const CenteredGram cs = center_gram(gs);
  const CenteredGram ct = center_gram(gt);
  model.gram_mean_source = cs.col_mean;
  model.gram_mean_target = ct.col_mean;
  model.gram_grand_mean_source = cs.grand_mean;
  model.gram_grand_mean_target = ct.grand_mean;

  const RangeBasis rs = range_basis(cs.centered);
  const RangeBasis rt = range_basis(ct.centered);
  const Index ks = rs.values.size();
  const Index kt = rt.values.size();
  if (ks == 0 || kt == 0) throw InputError("kcca: a view has a zero centered Gram matrix");
  if (r > std::min(ks, kt))
    throw InputError("kcca: latent dimension " + std::to_string(r) + " exceeds Gram rank " +
                     std::to_string(std::min(ks, kt)));

  Matrix a = Matrix::Zero(ks + kt, ks + kt);
  const Matrix cross = rs.values.asDiagonal() * (rs.basis.transpose() * rt.basis) * rt.values.asDiagonal();
  a.topRightCorner(ks, kt) = cross;
  a.bottomLeftCorner(kt, ks) = cross.transpose();
  Matrix b = Matrix::Zero(ks + kt, ks + kt);
  const Vector bs = rs.values.array().square() + kappa * rs.values.array();
  const Vector bt = rt.values.array().square() + kappa * rt.values.array();
  b.topLeftCorner(ks, ks) = bs.asDiagonal();
  b.bottomRightCorner(kt, kt) = bt.asDiagonal();

  const EigenPairs eig = gen_eig_sym(a, b, r);
  Matrix red_s = eig.vectors.topRows(ks);
  Matrix red_t = eig.vectors.bottomRows(kt);
  for (Index k = 0; k < r; ++k) {
    const double ns = std::sqrt(red_s.col(k).cwiseAbs2().dot(bs) / m);
    const double nt = std::sqrt(red_t.col(k).cwiseAbs2().dot(bt) / m);
    if (ns > 0.0) red_s.col(k) /= ns;
    if (nt > 0.0) red_t.col(k) /= nt;
  }
  model.alpha_source = rs.basis * red_s;
  model.alpha_target = rt.basis * red_t;
  fix_signs(model.alpha_source, model.alpha_target);
  model.correlations = clip_unit(eig.values);
  return model;
}

KccaModel fit_kernel_cca(const PairedViews& p, Index r, const KernelSpec& kernel, double kappa) {
  return fit_kernel_cca(p.source_rows, p.target_rows, r, kernel, kappa);
}

Matrix transform(const KccaModel& m, const Matrix& rows, View view) {
  const bool src = view == View::Source;
  const Matrix& train = src ? m.train_source : m.train_target;
  if (rows.cols() != train.cols())
    throw InputError("kcca transform: expected width " + std::to_string(train.cols()) + ", got " +
                     std::to_string(rows.cols()));
  Matrix k = gram(rows, train, src ? m.kernel_source : m.kernel_target);
  const Vector row_mean = k.rowwise().mean();
  k.colwise() -= row_mean;
  k.rowwise() -= (src ? m.gram_mean_source : m.gram_mean_target).transpose();
  k.array() += src ? m.gram_grand_mean_source : m.gram_grand_mean_target;
  return k * (src ? m.alpha_source : m.alpha_target);
}

}  // namespace ccatl

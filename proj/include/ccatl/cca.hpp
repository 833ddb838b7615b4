#pragma once

#include "ccatl/kernel.hpp"
#include "ccatl/pairing.hpp"
#include "ccatl/tabular.hpp"

namespace ccatl {

inline constexpr double kDefaultRho = 1e-4;
inline constexpr double kDefaultKappa = 1e-3;

enum class View { Source, Target };

struct EigenPairs {
  Vector values;   // non-increasing
  Matrix vectors;  // columns, B-orthonormal
};

// The r largest solutions of A v = lambda B v for symmetric A and symmetric positive-definite B.
// Both inputs are symmetrized first. Throws NumericalError when B is not positive-definite.
EigenPairs gen_eig_sym(const Matrix& a, const Matrix& b, Index r);

// floor(min(rank_source, rank_target) / 2), at least 1.
Index default_latent_dim(Index rank_source, Index rank_target);

struct CcaModel {
  Matrix w_source;  // |F_U| x r
  Matrix w_target;
  Vector mu_source;
  Vector mu_target;
  Vector correlations;  // non-increasing, in [0, 1]
  double rho = kDefaultRho;

  Index r() const { return correlations.size(); }
};

// Regularized linear CCA through the block generalized eigenproblem
//   [0 S_st; S_ts 0] w = lambda [S_s + rho I, 0; 0, S_t + rho I] w
// with 1/M covariances. Each view's projection satisfies w' (S + rho I) w = I.
CcaModel fit_linear_cca(const Matrix& source, const Matrix& target, Index r, double rho = kDefaultRho);
CcaModel fit_linear_cca(const PairedViews& p, Index r, double rho = kDefaultRho);

Matrix transform(const CcaModel& m, const Matrix& rows, View view);

struct KccaModel {
  Matrix alpha_source;  // M x r dual coefficients
  Matrix alpha_target;
  Matrix train_source;  // retained training rows
  Matrix train_target;
  KernelSpec kernel_source;  // resolved per view
  KernelSpec kernel_target;
  double kappa = kDefaultKappa;
  Vector correlations;
  // Training Gram statistics for out-of-sample centering.
  Vector gram_mean_source;
  Vector gram_mean_target;
  double gram_grand_mean_source = 0.0;
  double gram_grand_mean_target = 0.0;

  Index r() const { return correlations.size(); }
};

// Kernel CCA on centered Gram matrices with (G^2 + kappa G) regularized blocks. The problem is
// solved in the range of each centered Gram matrix; null-space directions never change a
// projection. Dual coefficients satisfy a' (G^2 + kappa G) a / M = 1, so a linear kernel with
// kappa = M * rho reproduces linear CCA exactly.
KccaModel fit_kernel_cca(const Matrix& source, const Matrix& target, Index r, const KernelSpec& kernel,
                         double kappa = kDefaultKappa);
KccaModel fit_kernel_cca(const PairedViews& p, Index r, const KernelSpec& kernel, double kappa = kDefaultKappa);

Matrix transform(const KccaModel& m, const Matrix& rows, View view);

}  // namespace ccatl

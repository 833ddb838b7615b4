#pragma once

#include <string>

#include "ccatl/tabular.hpp"

namespace ccatl {

enum class KernelTag { Linear, Rbf };

struct KernelSpec {
  KernelTag tag = KernelTag::Linear;
  // Rbf bandwidth in exp(-gamma * |x - y|^2). Zero means "not chosen yet": resolve_kernel
  // replaces it by the median heuristic.
  double gamma = 0.0;

  static KernelSpec linear() { return {KernelTag::Linear, 0.0}; }
  static KernelSpec rbf(double g = 0.0) { return {KernelTag::Rbf, g}; }
  bool operator==(const KernelSpec&) const = default;
};

std::string to_string(const KernelSpec& k);
KernelSpec parse_kernel(const std::string& text);  // "linear", "rbf", "rbf:0.5"

// 1 / median of the pairwise squared distances between distinct rows (1 if degenerate).
double median_heuristic_gamma(const Matrix& x);
KernelSpec resolve_kernel(const KernelSpec& k, const Matrix& x);

// Gram matrix K(i, j) = k(x_i, y_j); the kernel must be resolved.
Matrix gram(const Matrix& x, const Matrix& y, const KernelSpec& k);

}  // namespace ccatl

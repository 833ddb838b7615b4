#include "ccatl/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "ccatl/error.hpp"

namespace ccatl {

std::string to_string(const KernelSpec& k) {
  if (k.tag == KernelTag::Linear) return "linear";
  return k.gamma > 0.0 ? "rbf:" + format_double(k.gamma) : "rbf";
}

KernelSpec parse_kernel(const std::string& text) {
  if (text == "linear") return KernelSpec::linear();
  if (text == "rbf") return KernelSpec::rbf();
  if (text.rfind("rbf:", 0) == 0) {
    double g = 0;
    if (!parse_double(text.substr(4), g) || g <= 0.0) throw InputError("kernel: bad rbf gamma in '" + text + "'");
    return KernelSpec::rbf(g);
  }
  throw InputError("kernel: unknown kernel '" + text + "'");
}

double median_heuristic_gamma(const Matrix& x) {
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = i + 1; j < x.rows(); ++j) d2.push_back((x.row(i) - x.row(j)).squaredNorm());
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  double med = *mid;
  if (d2.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d2.begin(), mid));
  return med > 0.0 ? 1.0 / med : 1.0;
}

KernelSpec resolve_kernel(const KernelSpec& k, const Matrix& x) {
  if (k.tag == KernelTag::Rbf && !(k.gamma > 0.0)) return KernelSpec::rbf(median_heuristic_gamma(x));
  return k;
}

Matrix gram(const Matrix& x, const Matrix& y, const KernelSpec& k) {
  if (x.cols() != y.cols()) throw InputError("gram: width mismatch");
  if (k.tag == KernelTag::Linear) return x * y.transpose();
  if (!(k.gamma > 0.0)) throw InputError("gram: rbf gamma must be resolved and positive");
  Matrix g(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j)
    for (Index i = 0; i < x.rows(); ++i) g(i, j) = std::exp(-k.gamma * (x.row(i) - y.row(j)).squaredNorm());
  return g;
}

}  // namespace ccatl

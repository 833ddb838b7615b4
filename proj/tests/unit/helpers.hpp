#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "ccatl/tabular.hpp"

namespace testing {

using ccatl::Dataset;
using ccatl::Index;
using ccatl::Matrix;
using ccatl::Vector;

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

inline Matrix randn(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix randu(std::mt19937_64& rng, Index r, Index c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

// Numerical dataset from a matrix; NaN cells become missing. Feature names prefix0, prefix1, ...
inline Dataset numeric_dataset(const Matrix& v, const std::string& prefix = "f", ccatl::Labels labels = {}) {
  Dataset d;
  d.values = v;
  d.missing = v.array().isNaN();
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j)
      if (d.missing(i, j)) d.values(i, j) = 0.0;
  d.labels = labels.size() == v.rows() ? labels : ccatl::Labels::Zero(v.rows());
  for (Index j = 0; j < v.cols(); ++j) {
    ccatl::FeatureMeta f;
    f.name = prefix + std::to_string(j);
    d.features.push_back(f);
  }
  ccatl::refresh_ranges(d);
  return d;
}

inline Dataset with_names(Dataset d, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) d.features[j].name = names[j];
  return d;
}

inline Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows.begin()->size());
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("ccatl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline double pearson(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace testing

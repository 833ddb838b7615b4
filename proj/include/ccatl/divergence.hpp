#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccatl/kernel.hpp"

namespace ccatl {

struct ProxyAOptions {
  int repeats = 5;
  double ridge = 1e-3;
  int iterations = 300;
  double step = 0.5;
};

// 2 (1 - 2 err) clipped into [0, 2].
double proxy_a_from_error(double err);

// Domain-classifier divergence: both sets are subsampled to a common size m, a ridge
// logistic model separates them on a stratified half, and the held-out error is turned
// into a distance. Averaged over `repeats` seeded draws. Needs >= 4 rows per set.
double proxy_a_distance(const Matrix& x, const Matrix& y, std::uint64_t seed, const ProxyAOptions& opts = {});

// Biased (V-statistic) MMD; an unresolved Rbf bandwidth uses the median heuristic on x and y pooled.
double mmd(const Matrix& x, const Matrix& y, const KernelSpec& kernel);

// (1 / 4d^2) ||C_x - C_y||_F^2 with unbiased sample covariances.
double coral_loss(const Matrix& x, const Matrix& y);

enum class Stage { PreCca, PostCca };

std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

struct DivergenceReport {
  double mmd = 0.0;
  double proxy_a = 0.0;
  double coral = 0.0;
  Stage stage = Stage::PreCca;
  KernelSpec kernel;
};

DivergenceReport divergence_report(const Matrix& x, const Matrix& y, Stage stage, const KernelSpec& kernel,
                                   std::uint64_t seed);

struct DivergenceRow {
  std::string transfer_id;
  std::string baseline;
  DivergenceReport report;
};

void write_divergence_csv(std::ostream& out, const std::vector<DivergenceRow>& rows);
std::vector<DivergenceRow> read_divergence_csv(std::istream& in);

}  // namespace ccatl

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ccatl/cca.hpp"
#include "ccatl/pairing.hpp"

namespace ccatl {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Feed-forward net with a logistic sigmoid after every layer, output layer included.
struct Mlp {
  std::vector<DenseLayer> layers;

  Index input_width() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Index output_width() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
};

// widths = {input, hidden..., output}. Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases 0.
Mlp make_mlp(std::span<const Index> widths, std::mt19937_64& rng);

// activations[0] is the input batch, activations[l + 1] the output of layer l.
struct MlpTape {
  std::vector<Matrix> activations;
};

Matrix mlp_forward(const Mlp& net, const Matrix& batch);
Matrix mlp_forward(const Mlp& net, const Matrix& batch, MlpTape& tape);

struct MlpGradient {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

// Reverse pass: gradient of sum(outputs .* upstream) with respect to every parameter.
MlpGradient mlp_backward(const Mlp& net, const MlpTape& tape, const Matrix& upstream);

// Total canonical correlation of two r x M representations: the sum of singular values of
// S_s^{-1/2} S_st S_t^{-1/2} with 1/M covariances and lambda ridge on S_s, S_t.
double dcca_objective(const Matrix& h_source, const Matrix& h_target, double lambda_reg);

struct DccaGradient {
  Matrix source;  // r x M
  Matrix target;
  double objective = 0.0;
};

DccaGradient dcca_gradient(const Matrix& h_source, const Matrix& h_target, double lambda_reg);

struct DccaTrainConfig {
  int epochs = 200;
  double learning_rate = 1e-2;
  double lambda_reg = 1e-3;
  std::uint64_t seed = 0;
  std::vector<Index> hidden_widths{512, 512, 512};
};

struct DccaModel {
  Mlp net_source;
  Mlp net_target;
  double lambda_reg = 1e-3;
  Index r = 0;
  // trace[e] is the objective after e updates; trace.back() belongs to the final weights.
  std::vector<double> trace;
};

// Full-batch gradient ascent on dcca_objective.
DccaModel train_dcca(const Matrix& source, const Matrix& target, Index r, const DccaTrainConfig& cfg);
DccaModel train_dcca(const PairedViews& p, Index r, const DccaTrainConfig& cfg);

Matrix transform(const DccaModel& m, const Matrix& rows, View view);

}  // namespace ccatl

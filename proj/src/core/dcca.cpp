#include "ccatl/dcca.hpp"

#include <cmath>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

constexpr double kEigenFloor = 1e-12;

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix inv_sqrt_psd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("dcca: covariance eigendecomposition failed");
  const Vector d = es.eigenvalues().cwiseMax(kEigenFloor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

struct Whitened {
  Matrix hs_bar, ht_bar;
  Matrix s_inv_sqrt, t_inv_sqrt;
  Eigen::JacobiSVD<Matrix> svd;
};

Whitened whiten(const Matrix& hs, const Matrix& ht, double lambda_reg) {
  if (hs.rows() != ht.rows() || hs.cols() != ht.cols())
    throw InputError("dcca: representations must have equal shape");
  if (hs.cols() < 2) throw InputError("dcca: need at least 2 samples");
  if (!hs.allFinite() || !ht.allFinite()) throw NumericalError("dcca: non-finite representation");
  const Index r = hs.rows();
  const auto m = static_cast<double>(hs.cols());
  Whitened w;
  w.hs_bar = hs.colwise() - hs.rowwise().mean();
  w.ht_bar = ht.colwise() - ht.rowwise().mean();
  const Matrix ss = w.hs_bar * w.hs_bar.transpose() / m + lambda_reg * Matrix::Identity(r, r);
  const Matrix tt = w.ht_bar * w.ht_bar.transpose() / m + lambda_reg * Matrix::Identity(r, r);
  const Matrix st = w.hs_bar * w.ht_bar.transpose() / m;
  w.s_inv_sqrt = inv_sqrt_psd(ss);
  w.t_inv_sqrt = inv_sqrt_psd(tt);
  w.svd.compute(w.s_inv_sqrt * st * w.t_inv_sqrt, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return w;
}

}  // namespace

Mlp make_mlp(std::span<const Index> widths, std::mt19937_64& rng) {
  if (widths.size() < 2) throw InputError("mlp: need at least input and output widths");
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index in = widths[l];
    const Index out = widths[l + 1];
    if (in < 1 || out < 1) throw InputError("mlp: layer widths must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(out, in);
    for (Index i = 0; i < out; ++i)
      for (Index j = 0; j < in; ++j) layer.weight(i, j) = u(rng);
    layer.bias = Vector::Zero(out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix mlp_forward(const Mlp& net, const Matrix& batch, MlpTape& tape) {
  if (batch.cols() != net.input_width())
    throw InputError("mlp: expected input width " + std::to_string(net.input_width()) + ", got " +
                     std::to_string(batch.cols()));
  tape.activations.clear();
  tape.activations.push_back(batch);
  for (const auto& layer : net.layers) {
    Matrix z = tape.activations.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    tape.activations.push_back(sigmoid(z));
  }
  return tape.activations.back();
}

Matrix mlp_forward(const Mlp& net, const Matrix& batch) {
  MlpTape tape;
  return mlp_forward(net, batch, tape);
}

MlpGradient mlp_backward(const Mlp& net, const MlpTape& tape, const Matrix& upstream) {
  const std::size_t n_layers = net.layers.size();
  if (tape.activations.size() != n_layers + 1) throw InputError("mlp backward: tape does not match the network");
  const Matrix& out = tape.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    throw InputError("mlp backward: upstream gradient shape mismatch");

  MlpGradient g;
  g.weight.resize(n_layers);
  g.bias.resize(n_layers);
  Matrix grad = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& a = tape.activations[l + 1];
    const Matrix delta = (grad.array() * a.array() * (1.0 - a.array())).matrix();
    g.weight[l] = delta.transpose() * tape.activations[l];
    g.bias[l] = delta.colwise().sum().transpose();
    if (l > 0) grad = delta * net.layers[l].weight;
  }
  return g;
}

double dcca_objective(const Matrix& h_source, const Matrix& h_target, double lambda_reg) {
  return whiten(h_source, h_target, lambda_reg).svd.singularValues().sum();
}

DccaGradient dcca_gradient(const Matrix& h_source, const Matrix& h_target, double lambda_reg) {
  const Whitened w = whiten(h_source, h_target, lambda_reg);
  const auto m = static_cast<double>(h_source.cols());
  const Matrix& u = w.svd.matrixU();
  const Matrix& v = w.svd.matrixV();
  const Vector& d = w.svd.singularValues();

  const Matrix nabla_st = w.s_inv_sqrt * u * v.transpose() * w.t_inv_sqrt;
  const Matrix nabla_s = -0.5 * w.s_inv_sqrt * u * d.asDiagonal() * u.transpose() * w.s_inv_sqrt;
  const Matrix nabla_t = -0.5 * w.t_inv_sqrt * v * d.asDiagonal() * v.transpose() * w.t_inv_sqrt;

  DccaGradient g;
  g.objective = d.sum();
  g.source = (2.0 * nabla_s * w.hs_bar + nabla_st * w.ht_bar) / m;
  g.target = (2.0 * nabla_t * w.ht_bar + nabla_st.transpose() * w.hs_bar) / m;
  return g;
}

DccaModel train_dcca(const Matrix& source, const Matrix& target, Index r, const DccaTrainConfig& cfg) {
  if (cfg.epochs < 1) throw InputError("dcca: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InputError("dcca: learning rate must be > 0");
  if (!(cfg.lambda_reg > 0.0)) throw InputError("dcca: lambda must be > 0");
  if (source.rows() != target.rows()) throw InputError("dcca: views must have the same number of rows");
  if (r < 1 || source.rows() < r + 1) throw InputError("dcca: need at least r + 1 paired rows");

  std::mt19937_64 rng(cfg.seed);
  auto widths_for = [&](Index in) {
    std::vector<Index> w{in};
    w.insert(w.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
    w.push_back(r);
    return w;
  };
  DccaModel model;
  model.lambda_reg = cfg.lambda_reg;
  model.r = r;
  model.net_source = make_mlp(widths_for(source.cols()), rng);
  model.net_target = make_mlp(widths_for(target.cols()), rng);

  auto step = [](Mlp& net, const MlpGradient& g, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      net.layers[l].weight += lr * g.weight[l];
      net.layers[l].bias += lr * g.bias[l];
    }
  };

  MlpTape tape_s, tape_t;
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const Matrix out_s = mlp_forward(model.net_source, source, tape_s);
    const Matrix out_t = mlp_forward(model.net_target, target, tape_t);
    const DccaGradient g = dcca_gradient(out_s.transpose(), out_t.transpose(), cfg.lambda_reg);
    if (!std::isfinite(g.objective) || !g.source.allFinite() || !g.target.allFinite())
      throw NumericalError("dcca: non-finite objective at epoch " + std::to_string(epoch));
    model.trace.push_back(g.objective);
    if (epoch == cfg.epochs) break;
    const MlpGradient gs = mlp_backward(model.net_source, tape_s, g.source.transpose());
    const MlpGradient gt = mlp_backward(model.net_target, tape_t, g.target.transpose());
    step(model.net_source, gs, cfg.learning_rate);
    step(model.net_target, gt, cfg.learning_rate);
  }
  return model;
}

DccaModel train_dcca(const PairedViews& p, Index r, const DccaTrainConfig& cfg) {
  return train_dcca(p.source_rows, p.target_rows, r, cfg);
}

Matrix transform(const DccaModel& m, const Matrix& rows, View view) {
  return mlp_forward(view == View::Source ? m.net_source : m.net_target, rows);
}

}  // namespace ccatl

#include "ccatl/serialize.hpp"

#include <istream>
#include <ostream>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

constexpr const char* kMagic = "ccatl-model";
constexpr int kFormatVersion = 1;

void header(std::ostream& out, const char* type) { out << kMagic << ' ' << kFormatVersion << '\n' << "type " << type << '\n'; }

void put_scalar(std::ostream& out, const char* name, double v) { out << "scalar " << name << ' ' << format_double(v) << '\n'; }

void put_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
}

void put_vector(std::ostream& out, const char* name, const Vector& v) {
  out << "vector " << name << ' ' << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v(i));
  out << '\n';
}

void put_net(std::ostream& out, const char* name, const Mlp& net) {
  out << "net " << name << ' ' << net.layers.size() << '\n';
  for (const auto& layer : net.layers) {
    put_matrix(out, "weight", layer.weight);
    put_vector(out, "bias", layer.bias);
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw InputError("model file: unexpected end of input");
    return w;
  }

  void expect(const std::string& w) {
    const auto got = word();
    if (got != w) throw InputError("model file: expected '" + w + "', got '" + got + "'");
  }

  double number() {
    const auto w = word();
    double v = 0;
    if (!parse_double(w, v)) throw InputError("model file: bad number '" + w + "'");
    return v;
  }

  Index count() {
    const auto w = word();
    try {
      std::size_t used = 0;
      const long long v = std::stoll(w, &used);
      if (used != w.size() || v < 0) throw InputError("");
      return static_cast<Index>(v);
    } catch (const std::exception&) {
      throw InputError("model file: bad count '" + w + "'");
    }
  }

  std::string type() {
    expect(kMagic);
    if (count() != kFormatVersion) throw InputError("model file: unsupported format version");
    expect("type");
    return word();
  }

  void type(const std::string& want) {
    const auto got = type();
    if (got != want) throw InputError("model file: expected a " + want + " model, found " + got);
  }

  double scalar(const char* name) {
    expect("scalar");
    expect(name);
    return number();
  }

  Matrix matrix(const char* name) {
    expect("matrix");
    expect(name);
    const Index r = count();
    const Index c = count();
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = number();
    return m;
  }

  Vector vector(const char* name) {
    expect("vector");
    expect(name);
    const Index n = count();
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = number();
    return v;
  }

  Mlp net(const char* name) {
    expect("net");
    expect(name);
    const Index n = count();
    Mlp net;
    for (Index l = 0; l < n; ++l) {
      DenseLayer layer;
      layer.weight = matrix("weight");
      layer.bias = vector("bias");
      if (layer.bias.size() != layer.weight.rows()) throw InputError("model file: bias size does not match weight");
      if (!net.layers.empty() && net.layers.back().weight.rows() != layer.weight.cols())
        throw InputError("model file: layer widths do not chain");
      net.layers.push_back(std::move(layer));
    }
    return net;
  }

  KernelSpec kernel(const char* name) {
    expect("kernel");
    expect(name);
    return parse_kernel(word());
  }

 private:
  std::istream& in_;
};

Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

}  // namespace

void write_model(std::ostream& out, const CcaModel& m) {
  header(out, "linear_cca");
  put_scalar(out, "rho", m.rho);
  put_matrix(out, "w_source", m.w_source);
  put_matrix(out, "w_target", m.w_target);
  put_vector(out, "mu_source", m.mu_source);
  put_vector(out, "mu_target", m.mu_target);
  put_vector(out, "correlations", m.correlations);
}

void write_model(std::ostream& out, const KccaModel& m) {
  header(out, "kernel_cca");
  out << "kernel source " << to_string(m.kernel_source) << '\n';
  out << "kernel target " << to_string(m.kernel_target) << '\n';
  put_scalar(out, "kappa", m.kappa);
  put_scalar(out, "gram_grand_mean_source", m.gram_grand_mean_source);
  put_scalar(out, "gram_grand_mean_target", m.gram_grand_mean_target);
  put_matrix(out, "alpha_source", m.alpha_source);
  put_matrix(out, "alpha_target", m.alpha_target);
  put_matrix(out, "train_source", m.train_source);
  put_matrix(out, "train_target", m.train_target);
  put_vector(out, "gram_mean_source", m.gram_mean_source);
  put_vector(out, "gram_mean_target", m.gram_mean_target);
  put_vector(out, "correlations", m.correlations);
}

void write_model(std::ostream& out, const DccaModel& m) {
  header(out, "deep_cca");
  put_scalar(out, "lambda", m.lambda_reg);
  put_scalar(out, "r", static_cast<double>(m.r));
  put_net(out, "source", m.net_source);
  put_net(out, "target", m.net_target);
  put_vector(out, "trace", from_std(m.trace));
}

CcaModel read_cca_model(std::istream& in) {
  Reader rd(in);
  rd.type("linear_cca");
  CcaModel m;
  m.rho = rd.scalar("rho");
  m.w_source = rd.matrix("w_source");
  m.w_target = rd.matrix("w_target");
  m.mu_source = rd.vector("mu_source");
  m.mu_target = rd.vector("mu_target");
  m.correlations = rd.vector("correlations");
  if (m.w_source.cols() != m.r() || m.w_target.cols() != m.r() || m.mu_source.size() != m.w_source.rows() ||
      m.mu_target.size() != m.w_target.rows())
    throw InputError("model file: inconsistent linear CCA shapes");
  return m;
}

KccaModel read_kcca_model(std::istream& in) {
  Reader rd(in);
  rd.type("kernel_cca");
  KccaModel m;
  m.kernel_source = rd.kernel("source");
  m.kernel_target = rd.kernel("target");
  m.kappa = rd.scalar("kappa");
  m.gram_grand_mean_source = rd.scalar("gram_grand_mean_source");
  m.gram_grand_mean_target = rd.scalar("gram_grand_mean_target");
  m.alpha_source = rd.matrix("alpha_source");
  m.alpha_target = rd.matrix("alpha_target");
  m.train_source = rd.matrix("train_source");
  m.train_target = rd.matrix("train_target");
  m.gram_mean_source = rd.vector("gram_mean_source");
  m.gram_mean_target = rd.vector("gram_mean_target");
  m.correlations = rd.vector("correlations");
  const Index n = m.train_source.rows();
  if (m.train_target.rows() != n || m.alpha_source.rows() != n || m.alpha_target.rows() != n ||
      m.gram_mean_source.size() != n || m.gram_mean_target.size() != n || m.alpha_source.cols() != m.r() ||
      m.alpha_target.cols() != m.r())
    throw InputError("model file: inconsistent kernel CCA shapes");
  return m;
}

DccaModel read_dcca_model(std::istream& in) {
  Reader rd(in);
  rd.type("deep_cca");
  DccaModel m;
  m.lambda_reg = rd.scalar("lambda");
  m.r = static_cast<Index>(rd.scalar("r"));
  m.net_source = rd.net("source");
  m.net_target = rd.net("target");
  const Vector trace = rd.vector("trace");
  m.trace.assign(trace.data(), trace.data() + trace.size());
  if (m.net_source.output_width() != m.r || m.net_target.output_width() != m.r)
    throw InputError("model file: network output width does not match r");
  return m;
}

std::string peek_model_type(std::istream& in) {
  const auto pos = in.tellg();
  Reader rd(in);
  auto t = rd.type();
  in.clear();
  in.seekg(pos);
  return t;
}

}  // namespace ccatl

#include "ccatl/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

constexpr std::size_t kMinDistinctNumerical = 10;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// RFC-4180-ish splitter: double quotes group commas, "" is a literal quote.
std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(out);
}

Index Dataset::find(const std::string& name) const {
  for (std::size_t j = 0; j < features.size(); ++j)
    if (features[j].name == name) return static_cast<Index>(j);
  return -1;
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.features != b.features) return false;
  if (a.labels != b.labels || a.missing != b.missing) return false;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (!a.missing(i, j) && a.values(i, j) != b.values(i, j)) return false;
  return true;
}

void refresh_ranges(Dataset& d) {
  for (Index j = 0; j < d.cols(); ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Index i = 0; i < d.rows(); ++i) {
      if (d.missing(i, j)) continue;
      lo = std::min(lo, d.values(i, j));
      hi = std::max(hi, d.values(i, j));
    }
    auto& f = d.features[static_cast<std::size_t>(j)];
    if (lo > hi) {
      f.lo = f.hi = 0.0;
    } else {
      f.lo = lo;
      f.hi = hi;
    }
  }
}

Dataset read_csv(std::istream& in, const CsvOptions& opts, std::span<const FeatureMeta> schema) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line);

  Index label_col = -1;
  std::vector<std::size_t> feature_cols;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!seen.insert(header[c]).second) throw InputError("csv: duplicate column '" + header[c] + "'");
    if (header[c] == opts.label_column) {
      label_col = static_cast<Index>(c);
    } else if (std::find(opts.ignore_columns.begin(), opts.ignore_columns.end(), header[c]) ==
               opts.ignore_columns.end()) {
      feature_cols.push_back(c);
    }
  }
  if (label_col < 0) throw InputError("csv: label column '" + opts.label_column + "' not found");

  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != header.size())
      throw InputError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    cells.push_back(std::move(fields));
  }
  if (cells.empty()) throw InputError("csv: no data rows");

  const auto n = static_cast<Index>(cells.size());
  const auto d = static_cast<Index>(feature_cols.size());
  Dataset out;
  out.values = Matrix::Zero(n, d);
  out.missing = MaskMatrix::Constant(n, d, false);
  out.labels = Labels::Zero(n);
  out.features.resize(feature_cols.size());

  for (Index i = 0; i < n; ++i) {
    const auto& tok = cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(label_col)];
    double v = 0;
    if (tok == opts.na_token) throw InputError("csv: missing label on data row " + std::to_string(i + 1));
    if (!parse_double(tok, v) || (v != 0.0 && v != 1.0))
      throw InputError("csv: label '" + tok + "' on data row " + std::to_string(i + 1) + " is not 0/1");
    out.labels(i) = static_cast<int>(v);
  }

  for (Index j = 0; j < d; ++j) {
    const std::size_t c = feature_cols[static_cast<std::size_t>(j)];
    FeatureMeta& meta = out.features[static_cast<std::size_t>(j)];
    meta.name = header[c];

    const FeatureMeta* given = nullptr;
    for (const auto& s : schema)
      if (s.name == meta.name) given = &s;

    bool numerical = true;
    std::set<std::string> distinct;
    Index observed = 0;
    for (Index i = 0; i < n; ++i) {
      const auto& tok = cells[static_cast<std::size_t>(i)][c];
      if (tok == opts.na_token) {
        out.missing(i, j) = true;
        continue;
      }
      ++observed;
      distinct.insert(tok);
      double v;
      if (!parse_double(tok, v)) numerical = false;
    }
    if (observed == 0) throw InputError("csv: feature '" + meta.name + "' has no observed entries");

    if (given) {
      meta.kind = given->kind;
      meta.categories = given->categories;
      meta.code_step = given->code_step;
    } else {
      meta.kind = (numerical && distinct.size() > kMinDistinctNumerical) ? FeatureKind::Numerical
                                                                         : FeatureKind::Categorical;
    }

    for (Index i = 0; i < n; ++i) {
      if (out.missing(i, j)) continue;
      const auto& tok = cells[static_cast<std::size_t>(i)][c];
      if (meta.kind == FeatureKind::Numerical) {
        double v;
        if (!parse_double(tok, v))
          throw InputError("csv: non-numeric value '" + tok + "' in numerical feature '" + meta.name + "'");
        out.values(i, j) = v;
      } else {
        auto it = std::find(meta.categories.begin(), meta.categories.end(), tok);
        std::size_t code = static_cast<std::size_t>(it - meta.categories.begin());
        if (it == meta.categories.end()) meta.categories.push_back(tok);
        out.values(i, j) = static_cast<double>(code) * meta.code_step;
      }
    }
  }
  refresh_ranges(out);
  return out;
}

Dataset load_csv(const std::string& path, const CsvOptions& opts, std::span<const FeatureMeta> schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv(in, opts, schema);
}

void write_csv(std::ostream& out, const Dataset& d, const CsvOptions& opts) {
  for (const auto& f : d.features) out << quote_if_needed(f.name) << ',';
  out << quote_if_needed(opts.label_column) << '\n';
  for (Index i = 0; i < d.rows(); ++i) {
    for (Index j = 0; j < d.cols(); ++j) {
      const auto& f = d.features[static_cast<std::size_t>(j)];
      const double v = d.values(i, j);
      if (d.missing(i, j)) {
        out << opts.na_token;
      } else if (f.is_categorical() && f.code_step > 0) {
        const auto code = std::llround(v / f.code_step);
        if (code >= 0 && static_cast<std::size_t>(code) < f.categories.size() &&
            static_cast<double>(code) * f.code_step == v) {
          out << quote_if_needed(f.categories[static_cast<std::size_t>(code)]);
        } else {
          out << format_double(v);
        }
      } else {
        out << format_double(v);
      }
      out << ',';
    }
    out << d.labels(i) << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& d, const CsvOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(out, d, opts);
}

Scaling fit_scaling(const Dataset& d) {
  Dataset tmp = d;
  refresh_ranges(tmp);
  Scaling s;
  s.features.resize(tmp.features.size());
  for (std::size_t j = 0; j < tmp.features.size(); ++j) {
    const auto& f = tmp.features[j];
    auto& fs = s.features[j];
    if (f.is_categorical()) {
      const auto levels = f.categories.size();
      fs.code_step = levels > 1 ? 1.0 / static_cast<double>(levels - 1) : 1.0;
    } else {
      fs.offset = f.lo;
      fs.divisor = f.hi - f.lo;
    }
  }
  return s;
}

Dataset apply_scaling(const Dataset& d, const Scaling& s) {
  if (s.features.size() != d.features.size()) throw InputError("scaling: feature count mismatch");
  Dataset out = d;
  for (Index j = 0; j < d.cols(); ++j) {
    auto& f = out.features[static_cast<std::size_t>(j)];
    const auto& fs = s.features[static_cast<std::size_t>(j)];
    for (Index i = 0; i < d.rows(); ++i) {
      if (d.missing(i, j)) {
        out.values(i, j) = 0.0;
        continue;
      }
      const double v = d.values(i, j);
      if (f.is_categorical()) {
        const double code = static_cast<double>(std::llround(v / f.code_step));
        out.values(i, j) = code * fs.code_step;
      } else {
        out.values(i, j) = fs.divisor == 0.0 ? 0.0 : (v - fs.offset) / fs.divisor;
      }
    }
    if (f.is_categorical()) f.code_step = fs.code_step;
  }
  refresh_ranges(out);
  return out;
}

Dataset normalize(const Dataset& d) { return apply_scaling(d, fit_scaling(d)); }

std::vector<std::string> FeaturePartition::unified() const {
  std::vector<std::string> u = common;
  u.insert(u.end(), source_only.begin(), source_only.end());
  u.insert(u.end(), target_only.begin(), target_only.end());
  return u;
}

namespace {
std::vector<Index> iota_cols(std::size_t begin, std::size_t count) {
  std::vector<Index> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = static_cast<Index>(begin + i);
  return v;
}
}  // namespace

std::vector<Index> FeaturePartition::common_cols() const { return iota_cols(0, common.size()); }
std::vector<Index> FeaturePartition::source_only_cols() const {
  return iota_cols(common.size(), source_only.size());
}
std::vector<Index> FeaturePartition::target_only_cols() const {
  return iota_cols(common.size() + source_only.size(), target_only.size());
}

FeaturePartition partition_features(const Dataset& source, const Dataset& target) {
  FeaturePartition p;
  for (const auto& f : source.features) {
    if (target.find(f.name) >= 0)
      p.common.push_back(f.name);
    else
      p.source_only.push_back(f.name);
  }
  for (const auto& f : target.features)
    if (source.find(f.name) < 0) p.target_only.push_back(f.name);
  if (p.common.empty()) throw InputError("partition: source and target share no features");
  return p;
}

namespace {

bool categories_numeric(const FeatureMeta& f) {
  double v;
  return std::all_of(f.categories.begin(), f.categories.end(),
                     [&](const std::string& t) { return parse_double(t, v); });
}

void categorical_to_numerical(Dataset& d, Index j) {
  auto& f = d.features[static_cast<std::size_t>(j)];
  for (Index i = 0; i < d.rows(); ++i) {
    if (d.missing(i, j)) continue;
    const auto code = static_cast<std::size_t>(std::llround(d.values(i, j) / f.code_step));
    double v = 0;
    parse_double(f.categories.at(code), v);
    d.values(i, j) = v;
  }
  f.kind = FeatureKind::Numerical;
  f.categories.clear();
  f.code_step = 1.0;
}

void numerical_to_categorical(Dataset& d, Index j) {
  auto& f = d.features[static_cast<std::size_t>(j)];
  f.kind = FeatureKind::Categorical;
  f.categories.clear();
  f.code_step = 1.0;
  for (Index i = 0; i < d.rows(); ++i) {
    if (d.missing(i, j)) continue;
    const auto tok = format_double(d.values(i, j));
    auto it = std::find(f.categories.begin(), f.categories.end(), tok);
    const auto code = static_cast<std::size_t>(it - f.categories.begin());
    if (it == f.categories.end()) f.categories.push_back(tok);
    d.values(i, j) = static_cast<double>(code);
  }
}

void recode(Dataset& d, Index j, const std::vector<std::string>& merged) {
  auto& f = d.features[static_cast<std::size_t>(j)];
  for (Index i = 0; i < d.rows(); ++i) {
    if (d.missing(i, j)) continue;
    const auto code = static_cast<std::size_t>(std::llround(d.values(i, j) / f.code_step));
    const auto& tok = f.categories.at(code);
    const auto pos = std::find(merged.begin(), merged.end(), tok) - merged.begin();
    d.values(i, j) = static_cast<double>(pos);
  }
  f.categories = merged;
  f.code_step = 1.0;
}

}  // namespace

std::pair<Dataset, Dataset> harmonize_schemas(const Dataset& source, const Dataset& target) {
  Dataset s = source;
  Dataset t = target;
  for (Index js = 0; js < s.cols(); ++js) {
    const Index jt = t.find(s.features[static_cast<std::size_t>(js)].name);
    if (jt < 0) continue;
    auto& fs = s.features[static_cast<std::size_t>(js)];
    auto& ft = t.features[static_cast<std::size_t>(jt)];
    if (fs.kind != ft.kind) {
      Dataset& cat_side = fs.is_categorical() ? s : t;
      Dataset& num_side = fs.is_categorical() ? t : s;
      const Index jc = fs.is_categorical() ? js : jt;
      const Index jn = fs.is_categorical() ? jt : js;
      if (categories_numeric(cat_side.features[static_cast<std::size_t>(jc)]))
        categorical_to_numerical(cat_side, jc);
      else
        numerical_to_categorical(num_side, jn);
    }
    if (fs.is_categorical()) {
      std::vector<std::string> merged = fs.categories;
      for (const auto& tok : ft.categories)
        if (std::find(merged.begin(), merged.end(), tok) == merged.end()) merged.push_back(tok);
      recode(s, js, merged);
      recode(t, jt, merged);
    }
  }
  refresh_ranges(s);
  refresh_ranges(t);
  return {std::move(s), std::move(t)};
}

Index numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv.maxCoeff() : 0.0;
  if (smax <= 0.0) return 0;
  return static_cast<Index>((sv.array() > 1e-8 * smax).count());
}

Index numerical_rank(const Dataset& d) {
  if (!d.complete()) throw InputError("numerical_rank: dataset still has missing cells");
  return numerical_rank(d.values);
}

Dataset select_rows(const Dataset& d, std::span<const Index> rows) {
  Dataset out;
  const auto n = static_cast<Index>(rows.size());
  out.values.resize(n, d.cols());
  out.missing.resize(n, d.cols());
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    out.values.row(i) = d.values.row(r);
    out.missing.row(i) = d.missing.row(r);
    out.labels(i) = d.labels(r);
  }
  out.features = d.features;
  refresh_ranges(out);
  return out;
}

Dataset select_columns(const Dataset& d, std::span<const Index> cols) {
  Dataset out;
  const auto m = static_cast<Index>(cols.size());
  out.values.resize(d.rows(), m);
  out.missing.resize(d.rows(), m);
  out.labels = d.labels;
  for (Index j = 0; j < m; ++j) {
    const Index c = cols[static_cast<std::size_t>(j)];
    out.values.col(j) = d.values.col(c);
    out.missing.col(j) = d.missing.col(c);
    out.features.push_back(d.features[static_cast<std::size_t>(c)]);
  }
  return out;
}

Dataset reindex_columns(const Dataset& d, std::span<const std::string> names,
                        std::span<const FeatureMeta> fallback) {
  Dataset out;
  const auto m = static_cast<Index>(names.size());
  out.values = Matrix::Zero(d.rows(), m);
  out.missing = MaskMatrix::Constant(d.rows(), m, true);
  out.labels = d.labels;
  for (Index j = 0; j < m; ++j) {
    const auto& name = names[static_cast<std::size_t>(j)];
    const Index c = d.find(name);
    if (c >= 0) {
      out.values.col(j) = d.values.col(c);
      out.missing.col(j) = d.missing.col(c);
      out.features.push_back(d.features[static_cast<std::size_t>(c)]);
      continue;
    }
    FeatureMeta meta;
    meta.name = name;
    for (const auto& f : fallback)
      if (f.name == name) meta = f;
    out.features.push_back(meta);
  }
  refresh_ranges(out);
  return out;
}

Dataset stack_rows(const Dataset& top, const Dataset& bottom) {
  if (top.cols() != bottom.cols()) throw InputError("stack_rows: column count mismatch");
  for (std::size_t j = 0; j < top.features.size(); ++j) {
    const auto& a = top.features[j];
    const auto& b = bottom.features[j];
    if (a.name != b.name || a.kind != b.kind || a.code_step != b.code_step)
      throw InputError("stack_rows: feature '" + a.name + "' disagrees between blocks");
  }
  Dataset out;
  out.values.resize(top.rows() + bottom.rows(), top.cols());
  out.values << top.values, bottom.values;
  out.missing.resize(top.rows() + bottom.rows(), top.cols());
  out.missing << top.missing, bottom.missing;
  out.labels.resize(top.rows() + bottom.rows());
  out.labels << top.labels, bottom.labels;
  out.features = top.features;
  for (std::size_t j = 0; j < out.features.size(); ++j) {
    auto& cats = out.features[j].categories;
    for (const auto& tok : bottom.features[j].categories)
      if (std::find(cats.begin(), cats.end(), tok) == cats.end()) cats.push_back(tok);
  }
  refresh_ranges(out);
  return out;
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_target < 2 || cfg.n_source < cfg.n_target)
    throw InputError("synth: need n_source >= n_target >= 2");
  if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0)) throw InputError("synth: missing_rate must be in [0,1)");
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise <= 1.0)) throw InputError("synth: label_noise must be in [0,1]");
  if (cfg.d_common < 1 || cfg.d_source_only < 0 || cfg.d_target_only < 0 || cfg.latent_dim < 1)
    throw InputError("synth: invalid dimensions");
}

std::pair<Dataset, Dataset> synth_generate(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto randn = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = gauss(rng);
    return m;
  };

  const Index L = cfg.latent_dim;
  const Matrix load_common = randn(cfg.d_common, L);
  const Matrix common_shift = 0.3 * randn(cfg.d_common, L);
  const Matrix load_source = randn(cfg.d_source_only, L);
  const Matrix load_target = randn(cfg.d_target_only, L);
  const Vector functional = randn(L, 1).col(0);
  constexpr double kNoise = 0.5;
  constexpr double kOffset = 0.5;

  auto make = [&](Index n, bool is_source) {
    const Matrix z = randn(n, L);
    const Index d_own = is_source ? cfg.d_source_only : cfg.d_target_only;
    const Matrix& own_load = is_source ? load_source : load_target;
    Matrix common = is_source ? Matrix(z * load_common.transpose())
                              : Matrix(z * (load_common + common_shift).transpose());
    if (!is_source) common.array() += kOffset;
    common += kNoise * randn(n, cfg.d_common);
    const Matrix u = randn(n, L);  // domain-specific latent, independent of the label
    Matrix own = u * own_load.transpose() + randn(n, d_own);

    Dataset d;
    d.values.resize(n, cfg.d_common + d_own);
    d.values << common, own;
    d.labels.resize(n);
    const Vector score = z * functional;
    for (Index i = 0; i < n; ++i) {
      int y = score(i) > 0.0 ? 1 : 0;
      if (unif(rng) < cfg.label_noise) y = 1 - y;
      d.labels(i) = y;
    }
    d.missing = MaskMatrix::Constant(n, d.values.cols(), false);
    for (Index j = 0; j < d.values.cols(); ++j)
      for (Index i = 0; i < n; ++i) d.missing(i, j) = unif(rng) < cfg.missing_rate;
    for (Index j = 0; j < d.values.cols(); ++j) {
      if (d.missing.col(j).all()) d.missing(0, j) = false;
      for (Index i = 0; i < n; ++i)
        if (d.missing(i, j)) d.values(i, j) = 0.0;
    }
    auto add = [&](std::string name) {
      FeatureMeta f;
      f.name = std::move(name);
      d.features.push_back(std::move(f));
    };
    for (Index j = 0; j < cfg.d_common; ++j) add("c" + std::to_string(j));
    for (Index j = 0; j < d_own; ++j) add((is_source ? "s" : "t") + std::to_string(j));
    refresh_ranges(d);
    return d;
  };

  Dataset source = make(cfg.n_source, true);
  Dataset target = make(cfg.n_target, false);
  return {std::move(source), std::move(target)};
}

}  // namespace ccatl

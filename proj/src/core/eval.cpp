#include "ccatl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ccatl/error.hpp"

namespace ccatl {

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::Original: return "Original";
    case Baseline::ZPC: return "ZPC";
    case Baseline::IMC: return "IMC";
    case Baseline::ZPCCA: return "ZPCCA";
    case Baseline::IMCCA: return "IMCCA";
    case Baseline::ZPKCCA: return "ZPKCCA";
    case Baseline::IMKCCA: return "IMKCCA";
    case Baseline::ZPDCCA: return "ZPDCCA";
    case Baseline::IMDCCA: return "IMDCCA";
  }
  return "?";
}

Baseline parse_baseline(const std::string& s) {
  for (Baseline b : kAllBaselines)
    if (to_string(b) == s) return b;
  throw InputError("unknown baseline '" + s + "'");
}

CcaKind cca_kind(Baseline b) {
  switch (b) {
    case Baseline::ZPCCA:
    case Baseline::IMCCA: return CcaKind::Linear;
    case Baseline::ZPKCCA:
    case Baseline::IMKCCA: return CcaKind::Kernel;
    case Baseline::ZPDCCA:
    case Baseline::IMDCCA: return CcaKind::Deep;
    default: return CcaKind::None;
  }
}

ImputeTag feature_creation(Baseline b) {
  switch (b) {
    case Baseline::IMC:
    case Baseline::IMCCA:
    case Baseline::IMKCCA:
    case Baseline::IMDCCA: return ImputeTag::Knni;
    default: return ImputeTag::ZeroPad;
  }
}

void StageLog::record(const std::string& stage, const std::vector<Index>& ids) {
  consumed[stage].insert(ids.begin(), ids.end());
}

Labels knn_classify(const Matrix& train_x, const Labels& train_y, const Matrix& test_x, int k) {
  if (train_x.rows() < 1) throw InputError("knn: empty training set");
  if (train_x.cols() != test_x.cols()) throw InputError("knn: width mismatch");
  if (train_y.size() != train_x.rows()) throw InputError("knn: label count mismatch");
  if (k < 1) throw InputError("knn: k must be >= 1");
  const auto kk = static_cast<std::size_t>(std::min<Index>(k, train_x.rows()));
  Labels pred(test_x.rows());
  std::vector<Index> order(static_cast<std::size_t>(train_x.rows()));
  Vector d2(train_x.rows());
  for (Index i = 0; i < test_x.rows(); ++i) {
    for (Index t = 0; t < train_x.rows(); ++t) d2(t) = (train_x.row(t) - test_x.row(i)).squaredNorm();
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                      [&](Index a, Index b) { return d2(a) < d2(b) || (d2(a) == d2(b) && a < b); });
    int ones = 0;
    for (std::size_t n = 0; n < kk; ++n) ones += train_y(order[n]) == 1 ? 1 : 0;
    pred(i) = 2 * ones > static_cast<int>(kk) ? 1 : 0;
  }
  return pred;
}

std::vector<Fold> stratified_folds(const Labels& labels, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw InputError("folds: need at least 2 folds");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Index>> test(static_cast<std::size_t>(n_folds));
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<Index> members;
    for (Index i = 0; i < labels.size(); ++i)
      if (labels(i) == cls) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(n_folds))
      throw InputError("folds: class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                       " members, fewer than " + std::to_string(n_folds) + " folds");
    std::shuffle(members.begin(), members.end(), rng);
    for (Index id : members) {
      test[next].push_back(id);
      next = (next + 1) % test.size();
    }
  }
  std::vector<Fold> folds(test.size());
  for (std::size_t f = 0; f < test.size(); ++f) {
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    for (std::size_t g = 0; g < test.size(); ++g)
      if (g != f) folds[f].train.insert(folds[f].train.end(), test[g].begin(), test[g].end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

namespace {

std::vector<Index> columns_named(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<Index> cols;
  for (const auto& n : names) {
    const Index c = d.find(n);
    if (c < 0) throw InputError("pipeline: feature '" + n + "' not found");
    cols.push_back(c);
  }
  return cols;
}

Dataset observed_only(const Dataset& d) {
  std::vector<Index> keep;
  for (Index j = 0; j < d.cols(); ++j)
    if (!d.missing.col(j).all()) keep.push_back(j);
  return select_columns(d, keep);
}

std::vector<Index> paired_ids(const PairedViews& p, const std::vector<Index>& ids) {
  std::vector<Index> out;
  for (const auto& pr : p.pairs) out.push_back(ids[static_cast<std::size_t>(pr.target)]);
  return out;
}

std::vector<FeatureMeta> merged_metas(const Dataset& a, const Dataset& b) {
  std::vector<FeatureMeta> m = a.features;
  m.insert(m.end(), b.features.begin(), b.features.end());
  return m;
}

}  // namespace

FittedTransfer fit_transfer(const Dataset& source, const Dataset& target_train, const std::vector<Index>& target_ids,
                            Baseline baseline, const PipelineOptions& opts, std::uint64_t seed, StageLog* log) {
  if (static_cast<Index>(target_ids.size()) != target_train.rows())
    throw InputError("pipeline: target id count does not match target rows");
  auto record = [&](const std::string& stage, const std::vector<Index>& ids) {
    if (log) log->record(stage, ids);
  };

  FittedTransfer ft;
  ft.baseline = baseline;
  ft.opts = opts;
  const Dataset tt = observed_only(target_train);
  for (const auto& f : tt.features) ft.target_features.push_back(f.name);
  ft.target_scaling = fit_scaling(tt);
  const Dataset t_norm = apply_scaling(tt, ft.target_scaling);
  record("normalization", target_ids);
  ft.train_labels = t_norm.labels;

  if (baseline == Baseline::Original) {
    ft.target_donors = t_norm;
    ft.train_space = knn_impute(t_norm, opts.k_impute).values;
    record("imputation", target_ids);
    return ft;
  }

  const Dataset ss = observed_only(source);
  ft.source_scaling = fit_scaling(ss);
  const Dataset s_norm = apply_scaling(ss, ft.source_scaling);
  ft.partition = partition_features(s_norm, t_norm);
  const auto& part = ft.partition;

  const auto [s_imp, t_imp] = cross_transfer_impute(s_norm, t_norm, part, opts.k_impute, opts.cross_pool);
  record("cross_imputation", target_ids);
  ft.common_pool = stack_rows(select_columns(s_norm, columns_named(s_norm, part.common)),
                              select_columns(t_norm, columns_named(t_norm, part.common)));

  const auto names = part.unified();
  const auto metas = merged_metas(s_imp, t_imp);
  ft.source_donors = reindex_columns(s_imp, names, metas);
  ft.target_donors = reindex_columns(t_imp, names, metas);
  const ImputeMode mode{feature_creation(baseline), opts.k_impute};
  ft.unified.partition = part;
  ft.unified.source =
      complete_unified_rows(ft.source_donors, ft.source_donors, ft.target_donors, part, Side::Source, mode);
  ft.unified.target =
      complete_unified_rows(ft.target_donors, ft.target_donors, ft.source_donors, part, Side::Target, mode);
  record("feature_creation", target_ids);

  ft.paired = nearest_pairing(ft.unified, opts.supervised_pairing);
  const auto fitted_ids = paired_ids(ft.paired, target_ids);
  record("pairing", fitted_ids);

  ft.r = opts.latent_dim > 0 ? opts.latent_dim
                             : default_latent_dim(numerical_rank(ft.unified.source), numerical_rank(ft.unified.target));

  const Matrix& target_rows = ft.unified.target.values;
  switch (cca_kind(baseline)) {
    case CcaKind::None:
      ft.train_space = target_rows;
      break;
    case CcaKind::Linear: {
      auto m = fit_linear_cca(ft.paired, ft.r, opts.rho);
      ft.train_space = transform(m, target_rows, View::Target);
      ft.model = std::move(m);
      record("cca_fit", fitted_ids);
      break;
    }
    case CcaKind::Kernel: {
      auto m = fit_kernel_cca(ft.paired, ft.r, opts.kernel, opts.kappa);
      ft.train_space = transform(m, target_rows, View::Target);
      ft.model = std::move(m);
      record("cca_fit", fitted_ids);
      break;
    }
    case CcaKind::Deep: {
      DccaTrainConfig cfg = opts.dcca;
      cfg.seed = seed;
      auto m = train_dcca(ft.paired, ft.r, cfg);
      const Matrix hs = transform(m, ft.paired.source_rows, View::Source);
      const Matrix ht = transform(m, ft.paired.target_rows, View::Target);
      ft.dcca_alignment = fit_linear_cca(hs, ht, ft.r, opts.rho);
      ft.train_space = transform(*ft.dcca_alignment, transform(m, target_rows, View::Target), View::Target);
      ft.model = std::move(m);
      record("cca_fit", fitted_ids);
      break;
    }
  }
  return ft;
}

namespace {

Matrix to_space(const FittedTransfer& ft, const Matrix& unified_rows, View view) {
  if (const auto* m = std::get_if<CcaModel>(&ft.model)) return transform(*m, unified_rows, view);
  if (const auto* m = std::get_if<KccaModel>(&ft.model)) return transform(*m, unified_rows, view);
  if (const auto* m = std::get_if<DccaModel>(&ft.model))
    return transform(*ft.dcca_alignment, transform(*m, unified_rows, view), view);
  return unified_rows;
}

}  // namespace

Matrix FittedTransfer::map_target(const Dataset& raw_rows) const {
  Dataset rows = reindex_columns(raw_rows, target_features, {});
  rows = apply_scaling(rows, target_scaling);
  const int k = opts.k_impute;
  if (baseline == Baseline::Original) {
    std::vector<Index> all(static_cast<std::size_t>(rows.cols()));
    std::iota(all.begin(), all.end(), Index{0});
    const Dataset filled = impute_from_donors(rows, target_donors, k, all, all);
    if (!filled.complete()) throw InputError("pipeline: test rows could not be imputed");
    return filled.values;
  }
  const auto common_cols = columns_named(rows, partition.common);
  const Dataset common = select_columns(rows, common_cols);
  std::vector<Index> all(common_cols.size());
  std::iota(all.begin(), all.end(), Index{0});
  const Dataset filled = impute_from_donors(common, common_pool, k, all, all);
  for (std::size_t c = 0; c < common_cols.size(); ++c) {
    rows.values.col(common_cols[c]) = filled.values.col(static_cast<Index>(c));
    rows.missing.col(common_cols[c]) = filled.missing.col(static_cast<Index>(c));
  }
  Dataset rows_u = reindex_columns(rows, partition.unified(), target_donors.features);
  const ImputeMode mode{feature_creation(baseline), k};
  rows_u = complete_unified_rows(rows_u, target_donors, source_donors, partition, Side::Target, mode);
  return to_space(*this, rows_u.values, View::Target);
}

Matrix FittedTransfer::map_source_paired() const { return to_space(*this, paired.source_rows, View::Source); }
Matrix FittedTransfer::map_target_paired() const { return to_space(*this, paired.target_rows, View::Target); }

void summarize(EvalResult& r) {
  const auto n = static_cast<double>(r.fold_accuracies.size());
  if (n == 0) return;
  r.mean_accuracy = std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : r.fold_accuracies) ss += (a - r.mean_accuracy) * (a - r.mean_accuracy);
  r.std_dev = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

EvalResult evaluate_baseline(const Dataset& source, const Dataset& target, Baseline baseline,
                             const PipelineOptions& opts, std::uint64_t seed, std::vector<FoldAudit>* audit) {
  const auto [src, tgt] = harmonize_schemas(source, target);
  const auto folds = stratified_folds(tgt.labels, opts.n_folds, seed);
  EvalResult result;
  result.baseline = baseline;
  result.seed = seed;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    FoldAudit fa;
    fa.test_ids = fold.test;
    const Dataset train = select_rows(tgt, fold.train);
    const Dataset test = select_rows(tgt, fold.test);
    const FittedTransfer ft =
        fit_transfer(src, train, fold.train, baseline, opts, seed + f, audit ? &fa.log : nullptr);
    const Labels pred = knn_classify(ft.train_space, ft.train_labels, ft.map_target(test), opts.k_classify);
    const Index correct = (pred.array() == test.labels.array()).count();
    result.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(test.rows()));
    if (audit) audit->push_back(std::move(fa));
  }
  summarize(result);
  return result;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  out << "transfer_id,baseline,seed,mean_accuracy,std_dev,fold_accuracies\n";
  for (const auto& row : rows) {
    const auto& r = row.result;
    out << row.transfer_id << ',' << to_string(r.baseline) << ',' << r.seed << ',' << format_double(r.mean_accuracy)
        << ',' << format_double(r.std_dev) << ',';
    for (std::size_t i = 0; i < r.fold_accuracies.size(); ++i)
      out << (i ? ";" : "") << format_double(r.fold_accuracies[i]);
    out << '\n';
  }
}

std::vector<EvalRow> read_eval_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "transfer_id,baseline,seed,mean_accuracy,std_dev,fold_accuracies")
    throw InputError("eval csv: bad header");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 5) f.emplace_back();
    if (f.size() != 6) throw InputError("eval csv: expected 6 fields");
    EvalRow row;
    row.transfer_id = f[0];
    row.result.baseline = parse_baseline(f[1]);
    row.result.seed = std::stoull(f[2]);
    if (!parse_double(f[3], row.result.mean_accuracy) || !parse_double(f[4], row.result.std_dev))
      throw InputError("eval csv: bad number");
    std::stringstream folds(f[5]);
    while (std::getline(folds, cell, ';')) {
      double v;
      if (!parse_double(cell, v)) throw InputError("eval csv: bad fold accuracy");
      row.result.fold_accuracies.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ccatl

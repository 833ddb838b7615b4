#include "ccatl/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

void check_compatible(const Dataset& a, const Dataset& b) {
  if (a.cols() != b.cols()) throw InputError("heom: feature lists differ in length");
  for (std::size_t j = 0; j < a.features.size(); ++j)
    if (a.features[j].kind != b.features[j].kind)
      throw InputError("heom: feature '" + a.features[j].name + "' differs in kind");
}

std::vector<Index> all_cols(const Dataset& d) {
  std::vector<Index> c(static_cast<std::size_t>(d.cols()));
  std::iota(c.begin(), c.end(), Index{0});
  return c;
}

double heom_component(const FeatureMeta& f, bool miss_a, double a, bool miss_b, double b) {
  if (miss_a || miss_b) return 1.0;
  if (f.is_categorical()) return a == b ? 0.0 : 1.0;
  const double range = f.range();
  if (range <= 0.0) return a == b ? 0.0 : 1.0;
  return std::abs(a - b) / range;
}

double heom_unchecked(const Dataset& a, Index ia, const Dataset& b, Index ib, std::span<const Index> cols) {
  double sum = 0.0;
  for (Index j : cols) {
    const double dj = heom_component(a.features[static_cast<std::size_t>(j)], a.missing(ia, j), a.values(ia, j),
                                     b.missing(ib, j), b.values(ib, j));
    sum += dj * dj;
  }
  return std::sqrt(sum);
}

}  // namespace

double heom_distance(const Dataset& a, Index ia, const Dataset& b, Index ib, std::span<const Index> cols) {
  check_compatible(a, b);
  if (cols.empty()) {
    const auto all = all_cols(a);
    return heom_unchecked(a, ia, b, ib, all);
  }
  return heom_unchecked(a, ia, b, ib, cols);
}

Dataset impute_from_donors(const Dataset& query, const Dataset& donors, int k, std::span<const Index> match_cols,
                           std::span<const Index> fill_cols) {
  if (k < 1) throw InputError("impute: k must be >= 1");
  check_compatible(query, donors);
  Dataset out = query;
  std::vector<Index> order(static_cast<std::size_t>(donors.rows()));
  std::vector<double> dist(order.size());

  for (Index i = 0; i < query.rows(); ++i) {
    bool needs = false;
    for (Index j : fill_cols) needs = needs || query.missing(i, j);
    if (!needs) continue;

    // Ranges come from the donor pool: it is the reference sample.
    for (Index r = 0; r < donors.rows(); ++r) dist[static_cast<std::size_t>(r)] = heom_unchecked(donors, r, query, i, match_cols);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
      return dist[static_cast<std::size_t>(x)] < dist[static_cast<std::size_t>(y)];
    });

    for (Index j : fill_cols) {
      if (!query.missing(i, j)) continue;
      const auto& meta = donors.features[static_cast<std::size_t>(j)];
      std::vector<double> picked;
      for (Index r : order) {
        if (donors.missing(r, j)) continue;
        picked.push_back(donors.values(r, j));
        if (static_cast<int>(picked.size()) == k) break;
      }
      if (picked.empty()) continue;
      double fill;
      if (meta.is_categorical()) {
        std::map<double, int> votes;
        for (double v : picked) ++votes[v];
        fill = votes.begin()->first;
        int best = 0;
        for (const auto& [v, c] : votes)
          if (c > best) {
            best = c;
            fill = v;
          }
      } else {
        fill = std::accumulate(picked.begin(), picked.end(), 0.0) / static_cast<double>(picked.size());
      }
      out.values(i, j) = fill;
      out.missing(i, j) = false;
    }
  }
  refresh_ranges(out);
  return out;
}

Dataset knn_impute(const Dataset& d, int k) {
  const auto cols = all_cols(d);
  return impute_from_donors(d, d, k, cols, cols);
}

std::pair<Dataset, Dataset> cross_transfer_impute(const Dataset& source, const Dataset& target,
                                                  const FeaturePartition& part, int k, DonorPool pool) {
  if (part.common.empty()) throw InputError("cross-transfer: no common features");
  std::vector<Index> s_cols, t_cols;
  for (const auto& name : part.common) {
    s_cols.push_back(source.find(name));
    t_cols.push_back(target.find(name));
    if (s_cols.back() < 0 || t_cols.back() < 0) throw InputError("cross-transfer: common feature '" + name + "' missing");
  }
  const Dataset s_common = select_columns(source, s_cols);
  const Dataset t_common = select_columns(target, t_cols);

  Dataset s_filled, t_filled;
  if (pool == DonorPool::Joint) {
    const Dataset stacked = knn_impute(stack_rows(s_common, t_common), k);
    std::vector<Index> top(static_cast<std::size_t>(source.rows()));
    std::vector<Index> bottom(static_cast<std::size_t>(target.rows()));
    std::iota(top.begin(), top.end(), Index{0});
    std::iota(bottom.begin(), bottom.end(), source.rows());
    s_filled = select_rows(stacked, top);
    t_filled = select_rows(stacked, bottom);
  } else {
    s_filled = knn_impute(s_common, k);
    t_filled = knn_impute(t_common, k);
  }

  Dataset s_out = source;
  Dataset t_out = target;
  for (std::size_t c = 0; c < s_cols.size(); ++c) {
    s_out.values.col(s_cols[c]) = s_filled.values.col(static_cast<Index>(c));
    s_out.missing.col(s_cols[c]) = s_filled.missing.col(static_cast<Index>(c));
    t_out.values.col(t_cols[c]) = t_filled.values.col(static_cast<Index>(c));
    t_out.missing.col(t_cols[c]) = t_filled.missing.col(static_cast<Index>(c));
  }
  refresh_ranges(s_out);
  refresh_ranges(t_out);
  return {std::move(s_out), std::move(t_out)};
}

Dataset complete_unified_rows(const Dataset& rows, const Dataset& own_donors, const Dataset& other_donors,
                              const FeaturePartition& part, Side side, ImputeMode mode) {
  const auto common = part.common_cols();
  const auto own = side == Side::Source ? part.source_only_cols() : part.target_only_cols();
  const auto other = side == Side::Source ? part.target_only_cols() : part.source_only_cols();

  Dataset out = rows;
  if (mode.tag == ImputeTag::ZeroPad) {
    for (Index j : other) {
      out.values.col(j).setZero();
      out.missing.col(j).setConstant(false);
    }
  } else {
    out = impute_from_donors(out, other_donors, mode.k, common, other);
  }

  std::vector<Index> own_match = common;
  own_match.insert(own_match.end(), own.begin(), own.end());
  out = impute_from_donors(out, own_donors, mode.k, own_match, own);
  if (!out.complete()) throw InputError("unify: cells without any eligible donor remain");
  refresh_ranges(out);
  return out;
}

UnifiedPair unify(const Dataset& source, const Dataset& target, const FeaturePartition& part, ImputeMode mode) {
  const auto names = part.unified();
  std::vector<FeatureMeta> metas = source.features;
  metas.insert(metas.end(), target.features.begin(), target.features.end());
  const Dataset s_u = reindex_columns(source, names, metas);
  const Dataset t_u = reindex_columns(target, names, metas);
  for (Index j : part.common_cols())
    if (s_u.missing.col(j).any() || t_u.missing.col(j).any())
      throw InputError("unify: common features must be imputed first");
  UnifiedPair u;
  u.source = complete_unified_rows(s_u, s_u, t_u, part, Side::Source, mode);
  u.target = complete_unified_rows(t_u, t_u, s_u, part, Side::Target, mode);
  u.partition = part;
  return u;
}

}  // namespace ccatl

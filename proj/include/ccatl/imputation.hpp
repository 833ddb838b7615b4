#pragma once

#include <span>
#include <utility>

#include "ccatl/tabular.hpp"

namespace ccatl {

enum class ImputeTag { ZeroPad, Knni };

struct ImputeMode {
  ImputeTag tag = ImputeTag::Knni;
  int k = 5;  // Knni neighbours; ZeroPad uses it only for residual within-domain gaps
};

struct UnifiedPair {
  Dataset source;  // over partition.unified()
  Dataset target;  // over partition.unified()
  FeaturePartition partition;
};

// Heterogeneous Euclidean-overlap metric between row `ia` of `a` and row `ib` of `b`.
// A missing value on either side contributes 1; categorical features contribute the
// overlap distance; numerical features |x - y| / range with ranges taken from `a`.
// `cols` restricts the sum to a subset of columns (empty = all).
double heom_distance(const Dataset& a, Index ia, const Dataset& b, Index ib, std::span<const Index> cols = {});

// Fills the missing cells of `query` that lie in `fill_cols` from the k HEOM-nearest
// rows of `donors` observing that column. Distances use `match_cols` only; ties go to the
// smaller donor index. Numerical cells take the donor mean, categorical cells the mode
// (ties to the smaller code). Cells without any eligible donor stay missing.
Dataset impute_from_donors(const Dataset& query, const Dataset& donors, int k, std::span<const Index> match_cols,
                           std::span<const Index> fill_cols);

Dataset knn_impute(const Dataset& d, int k);

enum class DonorPool { Joint, WithinDomain };

// kNN imputation of the common features; with DonorPool::Joint the two domains are stacked
// so either can donate. Domain-specific columns are left as they are.
std::pair<Dataset, Dataset> cross_transfer_impute(const Dataset& source, const Dataset& target,
                                                  const FeaturePartition& part, int k,
                                                  DonorPool pool = DonorPool::Joint);

enum class Side { Source, Target };

// Completes one domain's rows (already over the unified space, common block complete):
// the block owned by the other domain is zero-padded or kNN-filled from `other_donors`
// matching on the common features; remaining gaps in the own-specific block are filled
// from `own_donors`.
Dataset complete_unified_rows(const Dataset& rows, const Dataset& own_donors, const Dataset& other_donors,
                              const FeaturePartition& part, Side side, ImputeMode mode);

UnifiedPair unify(const Dataset& source, const Dataset& target, const FeaturePartition& part, ImputeMode mode);

}  // namespace ccatl

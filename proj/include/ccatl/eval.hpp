#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ccatl/cca.hpp"
#include "ccatl/dcca.hpp"
#include "ccatl/imputation.hpp"
#include "ccatl/pairing.hpp"
#include "ccatl/tabular.hpp"

namespace ccatl {

enum class Baseline { Original, ZPC, IMC, ZPCCA, IMCCA, ZPKCCA, IMKCCA, ZPDCCA, IMDCCA };
enum class CcaKind { None, Linear, Kernel, Deep };

inline constexpr Baseline kAllBaselines[] = {Baseline::Original, Baseline::ZPC,    Baseline::IMC,
                                             Baseline::ZPCCA,    Baseline::IMCCA,  Baseline::ZPKCCA,
                                             Baseline::IMKCCA,   Baseline::ZPDCCA, Baseline::IMDCCA};

std::string to_string(Baseline b);
Baseline parse_baseline(const std::string& s);
CcaKind cca_kind(Baseline b);
// ZP* zero-pads the other domain's block, IM* kNN-imputes it. Meaningless for Original.
ImputeTag feature_creation(Baseline b);

struct PipelineOptions {
  int k_impute = 5;
  int k_classify = 1;
  double rho = kDefaultRho;
  double kappa = kDefaultKappa;
  KernelSpec kernel = KernelSpec::linear();
  DccaTrainConfig dcca;
  Index latent_dim = 0;  // 0: half the smaller numerical rank of the unified datasets
  bool supervised_pairing = true;
  DonorPool cross_pool = DonorPool::Joint;
  int n_folds = 5;
};

// Row ids (target rows, in the caller's indexing) consumed by each fitting stage.
struct StageLog {
  std::map<std::string, std::set<Index>> consumed;
  void record(const std::string& stage, const std::vector<Index>& ids);
};

// Predicted labels by Euclidean k-nearest vote; distance ties go to the smaller training
// index, vote ties to label 0.
Labels knn_classify(const Matrix& train_x, const Labels& train_y, const Matrix& test_x, int k);

struct Fold {
  std::vector<Index> train;
  std::vector<Index> test;
};

// Stratified folds: each class is shuffled and dealt round-robin across folds.
std::vector<Fold> stratified_folds(const Labels& labels, int n_folds, std::uint64_t seed);

// A transfer pipeline fitted on the source and a subset of target rows, able to map further
// raw target rows into the classification space.
struct FittedTransfer {
  Baseline baseline = Baseline::Original;
  PipelineOptions opts;
  std::vector<std::string> target_features;  // observed in the training rows
  Scaling source_scaling;
  Scaling target_scaling;
  FeaturePartition partition;
  Dataset common_pool;     // normalized training rows over F_C (both domains), pre-imputation
  Dataset source_donors;   // source over F_U, common block imputed
  Dataset target_donors;   // training target over F_U, common block imputed
  UnifiedPair unified;
  PairedViews paired;
  Index r = 0;
  std::variant<std::monostate, CcaModel, KccaModel, DccaModel> model;
  std::optional<CcaModel> dcca_alignment;  // linear CCA on the trained network outputs
  Matrix train_space;  // training target rows in the classification space
  Labels train_labels;

  Matrix map_target(const Dataset& raw_rows) const;
  Matrix map_source_paired() const;  // paired source rows in the classification space
  Matrix map_target_paired() const;
};

// `target_ids` labels the rows of `target_train` for the stage log.
FittedTransfer fit_transfer(const Dataset& source, const Dataset& target_train, const std::vector<Index>& target_ids,
                            Baseline baseline, const PipelineOptions& opts, std::uint64_t seed,
                            StageLog* log = nullptr);

struct FoldAudit {
  std::vector<Index> test_ids;
  StageLog log;
};

struct EvalResult {
  Baseline baseline = Baseline::Original;
  double mean_accuracy = 0.0;
  double std_dev = 0.0;
  std::vector<double> fold_accuracies;
  std::uint64_t seed = 0;
};

// Cross-validation over target rows; each fold refits the whole pipeline without its test rows.
// Fold f uses seed + f for stochastic stages.
EvalResult evaluate_baseline(const Dataset& source, const Dataset& target, Baseline baseline,
                             const PipelineOptions& opts, std::uint64_t seed,
                             std::vector<FoldAudit>* audit = nullptr);

void summarize(EvalResult& r);  // mean and sample standard deviation from fold_accuracies

struct EvalRow {
  std::string transfer_id;
  EvalResult result;
};
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_eval_csv(std::istream& in);

}  // namespace ccatl

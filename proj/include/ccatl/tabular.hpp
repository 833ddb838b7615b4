#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ccatl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Labels = Eigen::VectorXi;
using Index = Eigen::Index;

enum class FeatureKind { Categorical, Numerical };

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::Numerical;
  // Observed range over non-missing cells of the owning dataset.
  double lo = 0.0;
  double hi = 0.0;
  // Categorical only: code i prints as categories[i]; a cell stores code * code_step.
  std::vector<std::string> categories;
  double code_step = 1.0;

  double range() const { return hi - lo; }
  bool is_categorical() const { return kind == FeatureKind::Categorical; }
  bool operator==(const FeatureMeta&) const = default;
};

struct Dataset {
  Matrix values;       // N x d; masked cells hold 0
  MaskMatrix missing;  // N x d
  Labels labels;       // N, each 0 or 1
  std::vector<FeatureMeta> features;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index missing_count() const { return missing.count(); }
  bool complete() const { return missing_count() == 0; }
  // Column index of a feature name, or -1.
  Index find(const std::string& name) const;
};

// Exact equality on observed cells, masks, labels, and feature metadata.
bool same_dataset(const Dataset& a, const Dataset& b);

struct CsvOptions {
  std::string label_column = "Amen_ST12";
  std::string na_token = "NA";
  std::vector<std::string> ignore_columns;  // e.g. an ID column
};

// Without a schema, a column is numerical iff every observed entry parses as a
// number and it has more than 10 distinct observed values.
Dataset read_csv(std::istream& in, const CsvOptions& opts, std::span<const FeatureMeta> schema = {});
Dataset load_csv(const std::string& path, const CsvOptions& opts, std::span<const FeatureMeta> schema = {});
void write_csv(std::ostream& out, const Dataset& d, const CsvOptions& opts);
void save_csv(const std::string& path, const Dataset& d, const CsvOptions& opts);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
bool parse_double(std::string_view text, double& out);

// Per-feature affine map fitted on one dataset and reusable on another (held-out folds).
struct FeatureScaling {
  double offset = 0.0;   // numerical: subtracted
  double divisor = 1.0;  // numerical: 0 means constant feature, maps to 0
  double code_step = 1.0;  // categorical: new step per code
};
struct Scaling {
  std::vector<FeatureScaling> features;
};

Scaling fit_scaling(const Dataset& d);
Dataset apply_scaling(const Dataset& d, const Scaling& s);
Dataset normalize(const Dataset& d);

// Recompute lo/hi of every feature from the observed cells.
void refresh_ranges(Dataset& d);

struct FeaturePartition {
  std::vector<std::string> common;       // source order
  std::vector<std::string> source_only;  // source order
  std::vector<std::string> target_only;  // target order

  std::vector<std::string> unified() const;
  std::vector<Index> common_cols() const;
  std::vector<Index> source_only_cols() const;
  std::vector<Index> target_only_cols() const;
  Index unified_size() const {
    return static_cast<Index>(common.size() + source_only.size() + target_only.size());
  }
};

FeaturePartition partition_features(const Dataset& source, const Dataset& target);

// Makes shared features agree in kind and categorical coding across the two datasets.
// Mixed kinds become numerical when every category token is numeric, else categorical.
std::pair<Dataset, Dataset> harmonize_schemas(const Dataset& source, const Dataset& target);

Index numerical_rank(const Matrix& m);
Index numerical_rank(const Dataset& d);

// Row/column plumbing. Column selection by name inserts fully-missing columns for
// names the dataset does not have, using `fallback` metadata for them.
Dataset select_rows(const Dataset& d, std::span<const Index> rows);
Dataset select_columns(const Dataset& d, std::span<const Index> cols);
Dataset reindex_columns(const Dataset& d, std::span<const std::string> names,
                        std::span<const FeatureMeta> fallback);
Dataset stack_rows(const Dataset& top, const Dataset& bottom);

struct SynthConfig {
  Index n_source = 725;
  Index n_target = 280;
  Index d_common = 12;
  Index d_source_only = 7;
  Index d_target_only = 24;
  double missing_rate = 0.15;
  Index latent_dim = 4;
  double label_noise = 0.1;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);
std::pair<Dataset, Dataset> synth_generate(const SynthConfig& cfg);

}  // namespace ccatl

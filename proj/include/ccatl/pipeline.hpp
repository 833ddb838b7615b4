#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccatl/config.hpp"
#include "ccatl/divergence.hpp"
#include "ccatl/eval.hpp"

namespace ccatl {

enum class RunStatus { Ok = 0, Partial = 1, InputFailure = 2, NumericalFailure = 3 };

struct ErrorRecord {
  RunStatus status = RunStatus::InputFailure;
  std::string kind;  // "input", "numerical", "internal"
  std::string stage;
  std::string message;
  std::string path;  // offending file, when there is one
  std::string to_json() const;
};

// Accuracy table: rows are transfers, columns baselines, cells "mean±std".
struct AccuracyCell {
  enum class State { Empty, Value, Error } state = State::Empty;
  double mean = 0.0;
  double std_dev = 0.0;
};

struct AccuracyMatrix {
  std::vector<std::string> baselines;
  std::vector<std::string> transfer_ids;
  std::vector<std::vector<AccuracyCell>> cells;  // [row][column]
};

// Appends an "Average" row: column-wise arithmetic mean of the value cells.
void add_average_row(AccuracyMatrix& m);
void write_accuracy_csv(std::ostream& out, const AccuracyMatrix& m);
AccuracyMatrix read_accuracy_csv(std::istream& in);

// Divergence table: one column per baseline/stage/metric ("ZPCCA:post_cca:mmd").
struct DivergenceMatrix {
  std::vector<std::string> columns;
  std::vector<std::string> transfer_ids;
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::vector<bool>> failed;
};

DivergenceMatrix divergence_matrix(const std::vector<std::string>& transfer_ids,
                                   const std::vector<std::vector<DivergenceRow>>& per_transfer,
                                   const std::vector<bool>& failed);
void add_average_row(DivergenceMatrix& m);
void write_divergence_matrix_csv(std::ostream& out, const DivergenceMatrix& m);

struct RunOutcome {
  RunStatus status = RunStatus::Ok;
  std::string transfer_id;
  std::vector<EvalRow> eval;
  std::vector<DivergenceRow> divergence;
  std::optional<ErrorRecord> error;
};

// Loads (or generates) the pair, evaluates every configured baseline, measures divergence
// on a full-data fit, and writes the reports under cfg.out_dir. Stage failures come back as
// an ErrorRecord (also written to error.json) rather than an exception.
RunOutcome run_experiment(const ExperimentConfig& cfg);

struct GridOutcome {
  RunStatus status = RunStatus::Ok;
  std::vector<RunOutcome> runs;
  AccuracyMatrix accuracy;
  DivergenceMatrix divergence;
};

// Each config runs in out_dir/cells/<transfer id>; aggregate tables go to out_dir.
GridOutcome run_grid(const std::vector<ExperimentConfig>& configs, const std::string& out_dir, int jobs);

// Pairs file: header "transfer_id,source,target"; a source of the form "synth:<seed>"
// selects the synthetic generator with that seed.
std::vector<ExperimentConfig> grid_from_pairs(const ExperimentConfig& base, const std::string& pairs_path);

// Writes source.csv and target.csv.
void write_synth(const SynthConfig& cfg, const CsvOptions& csv, const std::string& out_dir);

// Human-readable summary of the reports found in a run or grid output directory.
std::string render_report(const std::string& dir);
std::string render_report(const AccuracyMatrix& acc, const std::vector<DivergenceRow>& div);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ccatl

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccatl/eval.hpp"
#include "ccatl/kernel.hpp"
#include "ccatl/tabular.hpp"

namespace ccatl {

struct ExperimentConfig {
  std::string source_path;
  std::string target_path;
  bool use_synth = false;
  SynthConfig synth;
  CsvOptions csv;
  std::vector<Baseline> baselines{std::begin(kAllBaselines), std::end(kAllBaselines)};
  PipelineOptions pipeline;
  KernelSpec mmd_kernel = KernelSpec::rbf();
  std::uint64_t seed = 0;
  std::string out_dir = "ccatl_out";
  std::string transfer_id;  // empty: derived from the inputs
  bool force = false;       // accept a source smaller than the target
  int jobs = 1;
};

// Every key accepted by set_option, in manifest order.
const std::vector<std::string>& option_keys();

// Keys use the long flag spelling without dashes in front ("k-impute", "dcca-widths").
void set_option(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_option(const ExperimentConfig& cfg, const std::string& key);

// "key = value" lines; blank lines and lines starting with '#' are skipped.
void load_config_text(ExperimentConfig& cfg, const std::string& text);
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// CCATL_<KEY> with dashes as underscores, e.g. CCATL_K_IMPUTE.
std::string env_name(const std::string& key);
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env(ExperimentConfig& cfg, const EnvLookup& lookup);
void apply_process_env(ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

// Full key = value dump that load_config_text turns back into an equal configuration.
std::string to_manifest(const ExperimentConfig& cfg);

std::string resolved_transfer_id(const ExperimentConfig& cfg);

}  // namespace ccatl

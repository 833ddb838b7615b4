#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccatl/ccatl.h"

namespace {

struct ConfigDeleter {
  void operator()(ccatl_config* c) const { ccatl_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<ccatl_config, ConfigDeleter>;

const std::vector<std::string> kSwitches{"force", "synth"};

bool is_switch(const std::string& key) {
  for (const auto& s : kSwitches)
    if (s == key) return true;
  return false;
}

// Every configuration key becomes a --key option on the subcommand.
struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    for (size_t i = 0; i < ccatl_config_key_count(); ++i) {
      const std::string key = ccatl_config_key(i);
      if (is_switch(key))
        cmd->add_flag("--" + key, switches[key]);
      else
        cmd->add_option("--" + key, values[key]);
    }
  }

  int build(ConfigPtr& out, CLI::App* cmd) const {
    ccatl_config* raw = nullptr;
    if (ccatl_config_create(&raw) != CCATL_OK) return report(CCATL_INTERNAL_ERROR);
    out.reset(raw);
    ccatl_status s = CCATL_OK;
    if (!config_file.empty()) s = ccatl_config_load_file(raw, config_file.c_str());
    if (s == CCATL_OK) s = ccatl_config_apply_env(raw);
    for (const auto& [key, value] : values)
      if (s == CCATL_OK && cmd->count("--" + key) > 0) s = ccatl_config_set(raw, key.c_str(), value.c_str());
    for (const auto& [key, on] : switches)
      if (s == CCATL_OK && on) s = ccatl_config_set(raw, key.c_str(), "true");
    return s == CCATL_OK ? 0 : report(s);
  }

  static int report(ccatl_status s) {
    std::fprintf(stderr, "ccatl: %s\n", ccatl_last_error());
    const std::string record = ccatl_last_error_record();
    if (!record.empty()) std::fputs(record.c_str(), stderr);
    return s == CCATL_INTERNAL_ERROR ? 2 : static_cast<int>(s);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccatl: heterogeneous transfer learning with nearest pairing and CCA"};
  app.set_version_flag("--version", std::string(ccatl_version()));
  app.require_subcommand(1);

  Overrides synth_o, run_o, grid_o;
  auto* synth = app.add_subcommand("synth", "write a synthetic source/target pair as CSV");
  synth_o.attach(synth);
  auto* run = app.add_subcommand("run", "evaluate the baselines on one source/target pair");
  run_o.attach(run);
  auto* grid = app.add_subcommand("grid", "evaluate the baselines over a list of transfers");
  grid_o.attach(grid);
  std::string pairs_path;
  grid->add_option("--pairs", pairs_path, "CSV with header transfer_id,source,target")->required();
  auto* report = app.add_subcommand("report", "print the summary of a run or grid directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "output directory of run or grid")->required();

  CLI11_PARSE(app, argc, argv);

  ConfigPtr cfg;
  if (*synth) {
    if (int rc = synth_o.build(cfg, synth)) return rc;
    const ccatl_status s = ccatl_synth(cfg.get());
    return s == CCATL_OK ? 0 : Overrides::report(s);
  }
  if (*run) {
    if (int rc = run_o.build(cfg, run)) return rc;
    const ccatl_status s = ccatl_run(cfg.get());
    if (s != CCATL_OK) return Overrides::report(s);
    char* out = nullptr;
    ccatl_config_get(cfg.get(), "out", &out);
    std::string dir = out ? out : "";
    ccatl_free_string(out);
    char* text = nullptr;
    if (ccatl_report(dir.c_str(), &text) == CCATL_OK) {
      std::fputs(text, stdout);
      ccatl_free_string(text);
    }
    return 0;
  }
  if (*grid) {
    if (int rc = grid_o.build(cfg, grid)) return rc;
    const ccatl_status s = ccatl_run_grid(cfg.get(), pairs_path.c_str());
    if (s != CCATL_OK && s != CCATL_PARTIAL) return Overrides::report(s);
    char* out = nullptr;
    ccatl_config_get(cfg.get(), "out", &out);
    std::string dir = out ? out : "";
    ccatl_free_string(out);
    char* text = nullptr;
    if (ccatl_report(dir.c_str(), &text) == CCATL_OK) {
      std::fputs(text, stdout);
      ccatl_free_string(text);
    }
    return s == CCATL_OK ? 0 : Overrides::report(s);
  }
  char* text = nullptr;
  const ccatl_status s = ccatl_report(report_dir.c_str(), &text);
  if (s != CCATL_OK) return Overrides::report(s);
  std::fputs(text, stdout);
  ccatl_free_string(text);
  return 0;
}

#include "ccatl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ccatl/error.hpp"

namespace ccatl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw InputError("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  if (!parse_double(v, out) || !std::isfinite(out))
    throw InputError("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config: " + key + " expects true or false, got '" + v + "'");
}

std::string show_bool(bool b) { return b ? "true" : "false"; }

struct Option {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<std::pair<std::string, Option>>& table() {
  static const std::vector<std::pair<std::string, Option>> t = [] {
    std::vector<std::pair<std::string, Option>> o;
    auto str = [&](const std::string& key, std::string ExperimentConfig::*field) {
      o.push_back({key, {[field](ExperimentConfig& c, const std::string& v) { c.*field = v; },
                         [field](const ExperimentConfig& c) { return c.*field; }}});
    };
    auto add = [&](const std::string& key, Option opt) { o.push_back({key, std::move(opt)}); };

    str("source", &ExperimentConfig::source_path);
    str("target", &ExperimentConfig::target_path);
    add("synth", {[](ExperimentConfig& c, const std::string& v) { c.use_synth = parse_bool("synth", v); },
                  [](const ExperimentConfig& c) { return show_bool(c.use_synth); }});
    add("label-col", {[](ExperimentConfig& c, const std::string& v) { c.csv.label_column = v; },
                      [](const ExperimentConfig& c) { return c.csv.label_column; }});
    add("na-token", {[](ExperimentConfig& c, const std::string& v) { c.csv.na_token = v; },
                     [](const ExperimentConfig& c) { return c.csv.na_token; }});
    add("ignore-cols", {[](ExperimentConfig& c, const std::string& v) { c.csv.ignore_columns = split_list(v); },
                        [](const ExperimentConfig& c) { return join(c.csv.ignore_columns); }});
    add("baselines", {[](ExperimentConfig& c, const std::string& v) {
                        c.baselines.clear();
                        if (v == "all") {
                          c.baselines.assign(std::begin(kAllBaselines), std::end(kAllBaselines));
                          return;
                        }
                        for (const auto& name : split_list(v)) {
                          const Baseline b = parse_baseline(name);
                          if (std::find(c.baselines.begin(), c.baselines.end(), b) == c.baselines.end())
                            c.baselines.push_back(b);
                        }
                      },
                      [](const ExperimentConfig& c) {
                        std::vector<std::string> names;
                        for (Baseline b : c.baselines) names.push_back(to_string(b));
                        return join(names);
                      }});
    add("k-impute", {[](ExperimentConfig& c, const std::string& v) { c.pipeline.k_impute = parse_integer<int>("k-impute", v); },
                     [](const ExperimentConfig& c) { return std::to_string(c.pipeline.k_impute); }});
    add("k-classify",
        {[](ExperimentConfig& c, const std::string& v) { c.pipeline.k_classify = parse_integer<int>("k-classify", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.pipeline.k_classify); }});
    add("rho", {[](ExperimentConfig& c, const std::string& v) { c.pipeline.rho = parse_real("rho", v); },
                [](const ExperimentConfig& c) { return format_double(c.pipeline.rho); }});
    add("kappa", {[](ExperimentConfig& c, const std::string& v) { c.pipeline.kappa = parse_real("kappa", v); },
                  [](const ExperimentConfig& c) { return format_double(c.pipeline.kappa); }});
    add("kernel", {[](ExperimentConfig& c, const std::string& v) { c.pipeline.kernel = parse_kernel(v); },
                   [](const ExperimentConfig& c) { return to_string(c.pipeline.kernel); }});
    add("mmd-kernel", {[](ExperimentConfig& c, const std::string& v) { c.mmd_kernel = parse_kernel(v); },
                       [](const ExperimentConfig& c) { return to_string(c.mmd_kernel); }});
    add("dcca-epochs",
        {[](ExperimentConfig& c, const std::string& v) { c.pipeline.dcca.epochs = parse_integer<int>("dcca-epochs", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.pipeline.dcca.epochs); }});
    add("dcca-lr",
        {[](ExperimentConfig& c, const std::string& v) { c.pipeline.dcca.learning_rate = parse_real("dcca-lr", v); },
         [](const ExperimentConfig& c) { return format_double(c.pipeline.dcca.learning_rate); }});
    add("dcca-lambda",
        {[](ExperimentConfig& c, const std::string& v) { c.pipeline.dcca.lambda_reg = parse_real("dcca-lambda", v); },
         [](const ExperimentConfig& c) { return format_double(c.pipeline.dcca.lambda_reg); }});
    add("dcca-widths", {[](ExperimentConfig& c, const std::string& v) {
                          c.pipeline.dcca.hidden_widths.clear();
                          for (const auto& w : split_list(v))
                            c.pipeline.dcca.hidden_widths.push_back(parse_integer<Index>("dcca-widths", w));
                        },
                        [](const ExperimentConfig& c) {
                          std::vector<std::string> ws;
                          for (Index w : c.pipeline.dcca.hidden_widths) ws.push_back(std::to_string(w));
                          return join(ws);
                        }});
    add("latent-dim",
        {[](ExperimentConfig& c, const std::string& v) { c.pipeline.latent_dim = parse_integer<Index>("latent-dim", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.pipeline.latent_dim); }});
    add("folds", {[](ExperimentConfig& c, const std::string& v) { c.pipeline.n_folds = parse_integer<int>("folds", v); },
                  [](const ExperimentConfig& c) { return std::to_string(c.pipeline.n_folds); }});
    add("pairing", {[](ExperimentConfig& c, const std::string& v) {
                      if (v == "supervised") c.pipeline.supervised_pairing = true;
                      else if (v == "unsupervised") c.pipeline.supervised_pairing = false;
                      else throw InputError("config: pairing expects supervised or unsupervised, got '" + v + "'");
                    },
                    [](const ExperimentConfig& c) {
                      return std::string(c.pipeline.supervised_pairing ? "supervised" : "unsupervised");
                    }});
    add("cross-pool", {[](ExperimentConfig& c, const std::string& v) {
                         if (v == "joint") c.pipeline.cross_pool = DonorPool::Joint;
                         else if (v == "within") c.pipeline.cross_pool = DonorPool::WithinDomain;
                         else throw InputError("config: cross-pool expects joint or within, got '" + v + "'");
                       },
                       [](const ExperimentConfig& c) {
                         return std::string(c.pipeline.cross_pool == DonorPool::Joint ? "joint" : "within");
                       }});
    add("seed", {[](ExperimentConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>("seed", v); },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    str("out", &ExperimentConfig::out_dir);
    str("transfer-id", &ExperimentConfig::transfer_id);
    add("force", {[](ExperimentConfig& c, const std::string& v) { c.force = parse_bool("force", v); },
                  [](const ExperimentConfig& c) { return show_bool(c.force); }});
    add("jobs", {[](ExperimentConfig& c, const std::string& v) { c.jobs = parse_integer<int>("jobs", v); },
                 [](const ExperimentConfig& c) { return std::to_string(c.jobs); }});

    auto synth_index = [&](const std::string& key, Index SynthConfig::*field) {
      add(key, {[key, field](ExperimentConfig& c, const std::string& v) { c.synth.*field = parse_integer<Index>(key, v); },
                [field](const ExperimentConfig& c) { return std::to_string(c.synth.*field); }});
    };
    auto synth_real = [&](const std::string& key, double SynthConfig::*field) {
      add(key, {[key, field](ExperimentConfig& c, const std::string& v) { c.synth.*field = parse_real(key, v); },
                [field](const ExperimentConfig& c) { return format_double(c.synth.*field); }});
    };
    synth_index("synth-n-source", &SynthConfig::n_source);
    synth_index("synth-n-target", &SynthConfig::n_target);
    synth_index("synth-d-common", &SynthConfig::d_common);
    synth_index("synth-d-source-only", &SynthConfig::d_source_only);
    synth_index("synth-d-target-only", &SynthConfig::d_target_only);
    synth_real("synth-missing", &SynthConfig::missing_rate);
    synth_index("synth-latent", &SynthConfig::latent_dim);
    synth_real("synth-label-noise", &SynthConfig::label_noise);
    add("synth-seed",
        {[](ExperimentConfig& c, const std::string& v) { c.synth.seed = parse_integer<std::uint64_t>("synth-seed", v); },
         [](const ExperimentConfig& c) { return std::to_string(c.synth.seed); }});
    return o;
  }();
  return t;
}

const Option& lookup(const std::string& key) {
  for (const auto& [k, opt] : table())
    if (k == key) return opt;
  throw InputError("config: unknown key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& option_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : table()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

void set_option(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  lookup(key).set(cfg, trim(value));
}

std::string get_option(const ExperimentConfig& cfg, const std::string& key) { return lookup(key).get(cfg); }

void load_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError("config: line " + std::to_string(line_no) + " is not of the form key = value");
    set_option(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  load_config_text(cfg, ss.str());
}

std::string env_name(const std::string& key) {
  std::string name = "CCATL_";
  for (char ch : key) name += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

void apply_env(ExperimentConfig& cfg, const EnvLookup& lookup_env) {
  for (const auto& key : option_keys())
    if (auto v = lookup_env(env_name(key))) set_option(cfg, key, *v);
}

void apply_process_env(ExperimentConfig& cfg) {
  apply_env(cfg, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.baselines.empty()) throw InputError("config: no baselines selected");
  if (cfg.use_synth) {
    validate(cfg.synth);
  } else {
    if (cfg.source_path.empty()) throw InputError("config: source path not set");
    if (cfg.target_path.empty()) throw InputError("config: target path not set");
  }
  const auto& p = cfg.pipeline;
  if (p.k_impute < 1) throw InputError("config: k-impute must be >= 1");
  if (p.k_classify < 1) throw InputError("config: k-classify must be >= 1");
  if (!(p.rho > 0.0)) throw InputError("config: rho must be > 0");
  if (!(p.kappa > 0.0)) throw InputError("config: kappa must be > 0");
  if (p.latent_dim < 0) throw InputError("config: latent-dim must be >= 0");
  if (p.n_folds < 2) throw InputError("config: folds must be >= 2");
  if (p.dcca.epochs < 1) throw InputError("config: dcca-epochs must be >= 1");
  if (!(p.dcca.learning_rate > 0.0)) throw InputError("config: dcca-lr must be > 0");
  if (!(p.dcca.lambda_reg > 0.0)) throw InputError("config: dcca-lambda must be > 0");
  for (Index w : p.dcca.hidden_widths)
    if (w < 1) throw InputError("config: dcca-widths entries must be >= 1");
  if (cfg.jobs < 1) throw InputError("config: jobs must be >= 1");
  if (cfg.out_dir.empty()) throw InputError("config: out directory not set");
}

std::string to_manifest(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, opt] : table()) out += key + " = " + opt.get(cfg) + "\n";
  return out;
}

std::string resolved_transfer_id(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::string id = cfg.transfer_id;
  if (id.empty())
    id = cfg.use_synth ? "synth" + std::to_string(cfg.synth.seed)
                       : fs::path(cfg.source_path).stem().string() + "->" + fs::path(cfg.target_path).stem().string();
  for (char& ch : id)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '/') ch = '_';
  return id;
}

}  // namespace ccatl

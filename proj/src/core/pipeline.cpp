#include "ccatl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "ccatl/error.hpp"
#include "ccatl/serialize.hpp"
#include "json.hpp"

namespace ccatl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPlusMinus = "\xC2\xB1";

template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string sig4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string cell_text(const AccuracyCell& c) {
  switch (c.state) {
    case AccuracyCell::State::Value: return format_double(c.mean) + kPlusMinus + format_double(c.std_dev);
    case AccuracyCell::State::Error: return "ERROR";
    case AccuracyCell::State::Empty: break;
  }
  return "";
}

}  // namespace

std::string ErrorRecord::to_json() const {
  const nlohmann::json j = {{"status", static_cast<int>(status)},
                            {"kind", kind},
                            {"stage", stage},
                            {"message", message},
                            {"path", path}};
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const std::string tmp = path + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp);
  }
  fs::rename(tmp, target);
}

void add_average_row(AccuracyMatrix& m) {
  std::vector<AccuracyCell> avg(m.baselines.size());
  for (std::size_t c = 0; c < m.baselines.size(); ++c) {
    double sum_mean = 0.0, sum_std = 0.0;
    int n = 0;
    for (const auto& row : m.cells)
      if (row[c].state == AccuracyCell::State::Value) {
        sum_mean += row[c].mean;
        sum_std += row[c].std_dev;
        ++n;
      }
    if (n > 0) avg[c] = {AccuracyCell::State::Value, sum_mean / n, sum_std / n};
  }
  m.transfer_ids.push_back("Average");
  m.cells.push_back(std::move(avg));
}

void write_accuracy_csv(std::ostream& out, const AccuracyMatrix& m) {
  out << "transfer_id";
  for (const auto& b : m.baselines) out << ',' << b;
  out << '\n';
  for (std::size_t r = 0; r < m.transfer_ids.size(); ++r) {
    out << m.transfer_ids[r];
    for (const auto& c : m.cells[r]) out << ',' << cell_text(c);
    out << '\n';
  }
}

AccuracyMatrix read_accuracy_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("accuracy csv: empty input");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "transfer_id") throw InputError("accuracy csv: bad header");
  AccuracyMatrix m;
  m.baselines.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw InputError("accuracy csv: row width mismatch");
    m.transfer_ids.push_back(f[0]);
    std::vector<AccuracyCell> row;
    for (std::size_t c = 1; c < f.size(); ++c) {
      AccuracyCell cell;
      if (f[c] == "ERROR") {
        cell.state = AccuracyCell::State::Error;
      } else if (!f[c].empty()) {
        const auto pm = f[c].find(kPlusMinus);
        if (pm == std::string::npos || !parse_double(f[c].substr(0, pm), cell.mean) ||
            !parse_double(f[c].substr(pm + 2), cell.std_dev))
          throw InputError("accuracy csv: bad cell '" + f[c] + "'");
        cell.state = AccuracyCell::State::Value;
      }
      row.push_back(cell);
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

DivergenceMatrix divergence_matrix(const std::vector<std::string>& transfer_ids,
                                   const std::vector<std::vector<DivergenceRow>>& per_transfer,
                                   const std::vector<bool>& failed) {
  DivergenceMatrix m;
  m.transfer_ids = transfer_ids;
  std::map<std::string, std::size_t> col_index;
  for (const auto& rows : per_transfer)
    for (const auto& r : rows)
      for (const char* metric : {"mmd", "proxy_a", "coral"}) {
        const auto name = r.baseline + ":" + to_string(r.report.stage) + ":" + metric;
        if (col_index.emplace(name, m.columns.size()).second) m.columns.push_back(name);
      }
  for (std::size_t t = 0; t < transfer_ids.size(); ++t) {
    std::vector<std::optional<double>> row(m.columns.size());
    for (const auto& r : per_transfer[t]) {
      const auto prefix = r.baseline + ":" + to_string(r.report.stage) + ":";
      row[col_index[prefix + "mmd"]] = r.report.mmd;
      row[col_index[prefix + "proxy_a"]] = r.report.proxy_a;
      row[col_index[prefix + "coral"]] = r.report.coral;
    }
    m.cells.push_back(std::move(row));
    m.failed.push_back(std::vector<bool>(m.columns.size(), failed[t]));
  }
  return m;
}

void add_average_row(DivergenceMatrix& m) {
  std::vector<std::optional<double>> avg(m.columns.size());
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    double sum = 0.0;
    int n = 0;
    for (const auto& row : m.cells)
      if (row[c]) {
        sum += *row[c];
        ++n;
      }
    if (n > 0) avg[c] = sum / n;
  }
  m.transfer_ids.push_back("Average");
  m.cells.push_back(std::move(avg));
  m.failed.push_back(std::vector<bool>(m.columns.size(), false));
}

void write_divergence_matrix_csv(std::ostream& out, const DivergenceMatrix& m) {
  out << "transfer_id";
  for (const auto& c : m.columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < m.transfer_ids.size(); ++r) {
    out << m.transfer_ids[r];
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      out << ',';
      if (m.cells[r][c]) out << format_double(*m.cells[r][c]);
      else if (m.failed[r][c]) out << "ERROR";
    }
    out << '\n';
  }
}

namespace {

struct BaselineArtifacts {
  std::string stage;
  std::exception_ptr error;
  EvalResult eval;
  std::vector<DivergenceReport> divergence;
  std::vector<Pair> pairs;
  std::string model_text;
  std::string alignment_text;
  std::vector<double> trace;
};

void run_baseline(const Dataset& source, const Dataset& target, Baseline b, const ExperimentConfig& cfg,
                  BaselineArtifacts& art) {
  const auto name = to_string(b);
  art.stage = "evaluate:" + name;
  art.eval = evaluate_baseline(source, target, b, cfg.pipeline, cfg.seed);
  if (b == Baseline::Original) return;

  art.stage = "fit:" + name;
  std::vector<Index> all(static_cast<std::size_t>(target.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  const FittedTransfer ft = fit_transfer(source, target, all, b, cfg.pipeline, cfg.seed);
  art.pairs = ft.paired.pairs;

  art.stage = "divergence:" + name;
  art.divergence.push_back(
      divergence_report(ft.paired.source_rows, ft.paired.target_rows, Stage::PreCca, cfg.mmd_kernel, cfg.seed));
  if (cca_kind(b) != CcaKind::None)
    art.divergence.push_back(divergence_report(ft.map_source_paired(), ft.map_target_paired(), Stage::PostCca,
                                               cfg.mmd_kernel, cfg.seed));

  art.stage = "serialize:" + name;
  std::ostringstream model;
  std::visit(
      [&](const auto& m) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(m)>, std::monostate>) write_model(model, m);
      },
      ft.model);
  art.model_text = model.str();
  if (ft.dcca_alignment) {
    std::ostringstream align;
    write_model(align, *ft.dcca_alignment);
    art.alignment_text = align.str();
  }
  if (const auto* d = std::get_if<DccaModel>(&ft.model)) art.trace = d->trace;
}

ErrorRecord make_record(const std::string& stage, const std::string& path) {
  ErrorRecord rec;
  rec.stage = stage;
  rec.path = path;
  try {
    throw;
  } catch (const NumericalError& e) {
    rec.status = RunStatus::NumericalFailure;
    rec.kind = "numerical";
    rec.message = e.what();
  } catch (const Error& e) {
    rec.status = RunStatus::InputFailure;
    rec.kind = "input";
    rec.message = e.what();
  } catch (const fs::filesystem_error& e) {
    rec.status = RunStatus::InputFailure;
    rec.kind = "input";
    rec.message = e.what();
    if (rec.path.empty()) rec.path = e.path1().string();
  } catch (const std::exception& e) {
    rec.status = RunStatus::InputFailure;
    rec.kind = "internal";
    rec.message = e.what();
  }
  return rec;
}

Dataset load_input(const std::string& path, const CsvOptions& csv) {
  if (!fs::exists(path)) throw InputError("file not found: " + path);
  return load_csv(path, csv);
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome outcome;
  outcome.transfer_id = resolved_transfer_id(cfg);
  std::string stage = "config";
  std::string path;
  try {
    validate(cfg);
    stage = "load";
    Dataset source, target;
    if (cfg.use_synth) {
      std::tie(source, target) = synth_generate(cfg.synth);
    } else {
      path = cfg.source_path;
      source = load_input(path, cfg.csv);
      path = cfg.target_path;
      target = load_input(path, cfg.csv);
      path.clear();
    }
    stage = "direction";
    if (source.rows() < target.rows() && !cfg.force)
      throw InputError("source has " + std::to_string(source.rows()) + " rows but target has " +
                       std::to_string(target.rows()) + "; transfer runs from the larger dataset (use --force)");
    stage = "harmonize";
    const auto [src, tgt] = harmonize_schemas(source, target);

    std::vector<BaselineArtifacts> arts(cfg.baselines.size());
    parallel_for(arts.size(), cfg.jobs, [&](std::size_t i) {
      try {
        run_baseline(src, tgt, cfg.baselines[i], cfg, arts[i]);
      } catch (...) {
        arts[i].error = std::current_exception();
      }
    });
    for (auto& art : arts)
      if (art.error) {
        stage = art.stage;
        std::rethrow_exception(art.error);
      }

    stage = "write";
    const fs::path out(cfg.out_dir);
    AccuracyMatrix acc;
    acc.transfer_ids.push_back(outcome.transfer_id);
    acc.cells.emplace_back();
    for (std::size_t i = 0; i < arts.size(); ++i) {
      const auto name = to_string(cfg.baselines[i]);
      const auto& art = arts[i];
      outcome.eval.push_back({outcome.transfer_id, art.eval});
      acc.baselines.push_back(name);
      acc.cells.back().push_back({AccuracyCell::State::Value, art.eval.mean_accuracy, art.eval.std_dev});
      for (const auto& rep : art.divergence) outcome.divergence.push_back({outcome.transfer_id, name, rep});
      if (cfg.baselines[i] != Baseline::Original) {
        std::ostringstream pairs;
        write_pairs_csv(pairs, art.pairs);
        write_file_atomic((out / ("pairs_" + name + ".csv")).string(), pairs.str());
      }
      if (!art.model_text.empty())
        write_file_atomic((out / "models" / (name + ".model")).string(), art.model_text);
      if (!art.alignment_text.empty())
        write_file_atomic((out / "models" / (name + "_alignment.model")).string(), art.alignment_text);
      if (!art.trace.empty()) {
        std::string trace = "epoch,objective\n";
        for (std::size_t e = 0; e < art.trace.size(); ++e)
          trace += std::to_string(e) + "," + format_double(art.trace[e]) + "\n";
        write_file_atomic((out / ("trace_" + name + ".csv")).string(), trace);
      }
    }
    std::ostringstream acc_csv, eval_csv, div_csv;
    write_accuracy_csv(acc_csv, acc);
    write_eval_csv(eval_csv, outcome.eval);
    write_divergence_csv(div_csv, outcome.divergence);
    write_file_atomic((out / "accuracy.csv").string(), acc_csv.str());
    write_file_atomic((out / "eval_results.csv").string(), eval_csv.str());
    write_file_atomic((out / "divergence.csv").string(), div_csv.str());
    write_file_atomic((out / "summary.txt").string(), render_report(acc, outcome.divergence));
    write_file_atomic((out / "manifest.txt").string(), std::string("# ccatl ") + CCATL_VERSION + "\n# eigen " +
                                                           eigen_version() + "\n" + to_manifest(cfg));
    fs::remove(out / "error.json");
  } catch (...) {
    outcome.error = make_record(stage, path);
    outcome.status = outcome.error->status;
    outcome.eval.clear();
    outcome.divergence.clear();
    try {
      if (!cfg.out_dir.empty()) write_file_atomic((fs::path(cfg.out_dir) / "error.json").string(), outcome.error->to_json());
    } catch (...) {
    }
  }
  return outcome;
}

GridOutcome run_grid(const std::vector<ExperimentConfig>& configs, const std::string& out_dir, int jobs) {
  if (configs.empty()) throw InputError("grid: no configurations");
  if (out_dir.empty()) throw InputError("grid: out directory not set");
  std::vector<ExperimentConfig> cells = configs;
  std::map<std::string, int> seen;
  for (auto& c : cells) {
    auto id = resolved_transfer_id(c);
    if (const int n = seen[id]++; n > 0) id += "_" + std::to_string(n + 1);
    c.transfer_id = id;
    c.out_dir = (fs::path(out_dir) / "cells" / id).string();
    if (jobs > 1) c.jobs = 1;
  }

  GridOutcome g;
  g.runs.resize(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) { g.runs[i] = run_experiment(cells[i]); });

  for (Baseline b : kAllBaselines)
    for (const auto& c : cells)
      if (std::find(c.baselines.begin(), c.baselines.end(), b) != c.baselines.end()) {
        g.accuracy.baselines.push_back(to_string(b));
        break;
      }
  std::vector<std::vector<DivergenceRow>> per_transfer;
  std::vector<bool> failed;
  std::vector<EvalRow> all_eval;
  std::vector<DivergenceRow> all_div;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& run = g.runs[i];
    g.accuracy.transfer_ids.push_back(run.transfer_id);
    std::vector<AccuracyCell> row(g.accuracy.baselines.size());
    for (std::size_t c = 0; c < g.accuracy.baselines.size(); ++c) {
      const Baseline b = parse_baseline(g.accuracy.baselines[c]);
      const bool configured = std::find(cells[i].baselines.begin(), cells[i].baselines.end(), b) != cells[i].baselines.end();
      if (!configured) continue;
      if (run.status != RunStatus::Ok) {
        row[c].state = AccuracyCell::State::Error;
        continue;
      }
      for (const auto& e : run.eval)
        if (e.result.baseline == b) row[c] = {AccuracyCell::State::Value, e.result.mean_accuracy, e.result.std_dev};
    }
    g.accuracy.cells.push_back(std::move(row));
    per_transfer.push_back(run.divergence);
    failed.push_back(run.status != RunStatus::Ok);
    all_eval.insert(all_eval.end(), run.eval.begin(), run.eval.end());
    all_div.insert(all_div.end(), run.divergence.begin(), run.divergence.end());
    if (run.status != RunStatus::Ok) g.status = RunStatus::Partial;
  }
  g.divergence = divergence_matrix(g.accuracy.transfer_ids, per_transfer, failed);
  add_average_row(g.accuracy);
  add_average_row(g.divergence);

  const fs::path out(out_dir);
  std::ostringstream acc_csv, div_matrix, eval_csv, div_csv;
  write_accuracy_csv(acc_csv, g.accuracy);
  write_divergence_matrix_csv(div_matrix, g.divergence);
  write_eval_csv(eval_csv, all_eval);
  write_divergence_csv(div_csv, all_div);
  write_file_atomic((out / "accuracy.csv").string(), acc_csv.str());
  write_file_atomic((out / "divergence_matrix.csv").string(), div_matrix.str());
  write_file_atomic((out / "eval_results.csv").string(), eval_csv.str());
  write_file_atomic((out / "divergence.csv").string(), div_csv.str());
  std::string summary = render_report(g.accuracy, all_div);
  for (const auto& run : g.runs)
    if (run.error)
      summary += "\nFAILED " + run.transfer_id + " [" + run.error->stage + "] " + run.error->message + "\n";
  write_file_atomic((out / "summary.txt").string(), summary);
  return g;
}

std::vector<ExperimentConfig> grid_from_pairs(const ExperimentConfig& base, const std::string& pairs_path) {
  if (!fs::exists(pairs_path)) throw InputError("file not found: " + pairs_path);
  std::stringstream in(read_file(pairs_path));
  std::string line;
  if (!std::getline(in, line) || line != "transfer_id,source,target")
    throw InputError("pairs file: expected header transfer_id,source,target");
  std::vector<ExperimentConfig> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw InputError("pairs file: expected 3 fields in '" + line + "'");
    ExperimentConfig c = base;
    c.transfer_id = f[0];
    if (f[1].rfind("synth:", 0) == 0) {
      c.use_synth = true;
      set_option(c, "synth-seed", f[1].substr(6));
    } else {
      c.use_synth = false;
      c.source_path = f[1];
      c.target_path = f[2];
    }
    out.push_back(std::move(c));
  }
  if (out.empty()) throw InputError("pairs file lists no transfers");
  return out;
}

void write_synth(const SynthConfig& cfg, const CsvOptions& csv, const std::string& out_dir) {
  const auto [source, target] = synth_generate(cfg);
  std::ostringstream s, t;
  write_csv(s, source, csv);
  write_csv(t, target, csv);
  write_file_atomic((fs::path(out_dir) / "source.csv").string(), s.str());
  write_file_atomic((fs::path(out_dir) / "target.csv").string(), t.str());
}

std::string render_report(const AccuracyMatrix& acc, const std::vector<DivergenceRow>& div) {
  std::ostringstream out;
  out << "Accuracy (mean " << kPlusMinus << " std over folds)\n";
  std::vector<std::vector<std::string>> table;
  table.push_back({"transfer"});
  table[0].insert(table[0].end(), acc.baselines.begin(), acc.baselines.end());
  for (std::size_t r = 0; r < acc.transfer_ids.size(); ++r) {
    std::vector<std::string> row{acc.transfer_ids[r]};
    for (const auto& c : acc.cells[r]) {
      if (c.state == AccuracyCell::State::Value) row.push_back(fixed4(c.mean) + kPlusMinus + fixed4(c.std_dev));
      else row.push_back(c.state == AccuracyCell::State::Error ? "ERROR" : "-");
    }
    table.push_back(std::move(row));
  }
  auto print = [&](const std::vector<std::vector<std::string>>& t) {
    std::vector<std::size_t> width;
    auto visible = [](const std::string& s) {
      return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
    };
    for (const auto& row : t)
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (width.size() <= c) width.push_back(0);
        width[c] = std::max(width[c], visible(row[c]));
      }
    for (const auto& row : t) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << row[c] << std::string(width[c] - visible(row[c]) + (c + 1 < row.size() ? 2 : 0), ' ');
      out << '\n';
    }
  };
  print(table);
  if (!div.empty()) {
    out << "\nDivergence on paired training rows\n";
    std::vector<std::vector<std::string>> dt{{"transfer", "baseline", "stage", "mmd", "proxy_a", "coral"}};
    for (const auto& r : div)
      dt.push_back({r.transfer_id, r.baseline, to_string(r.report.stage), sig4(r.report.mmd), sig4(r.report.proxy_a),
                    sig4(r.report.coral)});
    print(dt);
  }
  return out.str();
}

std::string render_report(const std::string& dir) {
  const fs::path d(dir);
  if (!fs::exists(d / "accuracy.csv")) throw InputError("no accuracy.csv in " + dir);
  std::stringstream acc_in(read_file((d / "accuracy.csv").string()));
  const auto acc = read_accuracy_csv(acc_in);
  std::vector<DivergenceRow> div;
  if (fs::exists(d / "divergence.csv")) {
    std::stringstream div_in(read_file((d / "divergence.csv").string()));
    div = read_divergence_csv(div_in);
  }
  std::string text = render_report(acc, div);
  if (fs::exists(d / "error.json")) text += "\nerror record:\n" + read_file((d / "error.json").string());
  return text;
}

}  // namespace ccatl

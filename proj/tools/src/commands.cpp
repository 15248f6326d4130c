#include "cbeta/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cbeta/cli/report.hpp"
#include "cbeta/error.hpp"

#ifndef CBETA_VERSION
#define CBETA_VERSION "0.0.0"
#endif

namespace cbeta::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

const fs::path& output_dir(const RunConfig& cfg) {
  if (cfg.paths.output_dir.empty()) invalid("no output directory: set paths.output_dir or pass --output");
  const auto& dir = cfg.paths.output_dir.resolved;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::Io, "cannot create output directory " + dir.string() +
                                   (ec ? ": " + ec.message() : std::string()));
  return dir;
}

const fs::path& require(const ConfigPath& p, const char* key) {
  if (p.empty()) invalid(std::string("paths.") + key + " is required for this command");
  return p.resolved;
}

// Collects outputs in write order together with their digests.
class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& file, std::string_view content) {
    write_file(dir_ / file, content);
    written_.push_back(dir_ / file);
    digests_.push_back({{"file", file}, {"sha256", sha256_hex(content)}});
  }

  const json& digests() const { return digests_; }
  std::vector<fs::path> finish() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  json digests_ = json::array();
};

struct Inputs {
  std::vector<CoinSeries> coins;
  UncertaintySeries epu;
  RiskFreeSeries riskfree;
  json digests = json::array();
};

void add_digest(json& digests, const std::string& label, const fs::path& path) {
  digests.push_back({{"path", label}, {"sha256", sha256_file(path)}});
}

template <class F>
auto with_file_context(const fs::path& path, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

Inputs load_raw(const RunConfig& cfg, bool need_riskfree) {
  Inputs in;
  const auto& market = require(cfg.paths.market_dir, "market_dir");
  const auto& epu_path = require(cfg.paths.epu_file, "epu_file");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(market))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) invalid("paths.market_dir: no .csv files in " + cfg.paths.market_dir.text);
  for (const auto& f : files) {
    std::ifstream s(f, std::ios::binary);
    if (!s) throw Error(ErrorCode::Io, "cannot read " + f.string());
    in.coins.push_back(with_file_context(f, [&] { return parse_market_csv(s, f.stem().string()); }));
    add_digest(in.digests, cfg.paths.market_dir.text + "/" + f.filename().string(), f);
  }

  {
    std::ifstream s(epu_path, std::ios::binary);
    if (!s) throw Error(ErrorCode::Io, "cannot read " + epu_path.string());
    in.epu = with_file_context(epu_path, [&] { return parse_epu_csv(s); });
    add_digest(in.digests, cfg.paths.epu_file.text, epu_path);
  }
  if (need_riskfree || !cfg.paths.riskfree_file.empty()) {
    const auto& rf_path = require(cfg.paths.riskfree_file, "riskfree_file");
    std::ifstream s(rf_path, std::ios::binary);
    if (!s) throw Error(ErrorCode::Io, "cannot read " + rf_path.string());
    in.riskfree = with_file_context(rf_path, [&] { return parse_riskfree_csv(s); });
    add_digest(in.digests, cfg.paths.riskfree_file.text, rf_path);
  }
  return in;
}

Panel load_panel_file(const RunConfig& cfg, json& digests) {
  const auto& path = cfg.paths.panel_file.resolved;
  std::ifstream s(path, std::ios::binary);
  if (!s) throw Error(ErrorCode::Io, "cannot read " + path.string());
  Panel p = with_file_context(path, [&] { return read_panel_csv(s, cfg.panel.riskfree_mode); });
  add_digest(digests, cfg.paths.panel_file.text, path);
  return p;
}

PanelBuild build_for_mode(const RunConfig& cfg, const Inputs& in, RiskFreeMode mode,
                          std::vector<std::string>* universe_out = nullptr) {
  const auto universe = filter_universe(in.coins, cfg.universe);
  if (universe_out) *universe_out = universe;
  PanelOptions opts = cfg.panel;
  opts.riskfree_mode = mode;
  return build_panel(universe, in.coins, in.epu, in.riskfree, opts);
}

SynthConfig synth_config(const RunConfig& cfg) {
  SynthConfig s = cfg.synth ? *cfg.synth : synth_preset("B");
  if (!cfg.seed) invalid("synthetic data needs a seed: pass --seed or set \"seed\" in the config");
  s.seed = cfg.seed;
  return s;
}

json manifest(const RunConfig& cfg, const std::string& command, const json& inputs, const json& outputs) {
  json m;
  m["tool"] = "cbeta";
  m["version"] = CBETA_VERSION;
  m["command"] = command;
  m["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  m["config"] = config_to_json(cfg);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  return m;
}

json drops_json(const std::vector<PanelDrop>& drops) {
  json a = json::array();
  for (const auto& d : drops) a.push_back({{"coin_id", d.coin_id}, {"reason", d.reason}, {"count", d.count}});
  return a;
}

json panel_summary(const Panel& p) {
  json j;
  j["rows"] = p.size();
  j["coins"] = p.coins().size();
  j["dates"] = p.dates().size();
  j["first_date"] = p.empty() ? json(nullptr) : json(format_date(p.dates().front()));
  j["last_date"] = p.empty() ? json(nullptr) : json(format_date(p.dates().back()));
  j["riskfree_mode"] = std::string(name(p.riskfree_mode()));
  return j;
}

std::string factors_text(const FactorSet& f) {
  std::ostringstream s;
  write_factor_csv(f, s);
  return s.str();
}

}  // namespace

std::vector<fs::path> cmd_ingest(const RunConfig& cfg) {
  const auto& dir = output_dir(cfg);
  Writer w(dir);
  json inputs = json::array();
  json report;
  Panel panel;
  if (cfg.paths.market_dir.empty() && !cfg.paths.panel_file.empty()) {
    panel = load_panel_file(cfg, inputs);
    report["source"] = "panel_file";
    report["panel"] = panel_summary(panel);
  } else {
    Inputs in = load_raw(cfg, cfg.panel.riskfree_mode == RiskFreeMode::TBill);
    inputs = in.digests;
    std::vector<std::string> universe;
    PanelBuild built = build_for_mode(cfg, in, cfg.panel.riskfree_mode, &universe);
    panel = std::move(built.panel);
    report["source"] = "market_dir";
    report["coins_loaded"] = in.coins.size();
    report["universe"] = universe;
    report["panel"] = panel_summary(panel);
    report["epu_mean"] = built.epu_mean;
    report["epu_sd"] = built.epu_sd;
    report["drops"] = drops_json(built.drops);
  }
  w.put("panel.csv", panel_to_csv(panel));
  w.put("ingest_report.json", report.dump(2) + "\n");
  w.put("manifest.json", manifest(cfg, "ingest", inputs, w.digests()).dump(2) + "\n");
  return w.finish();
}

std::vector<fs::path> cmd_run(const RunConfig& cfg) {
  RunOptions opts = cfg.run_options();
  json inputs = json::array();
  std::map<RiskFreeMode, Panel> panels;
  std::optional<FactorSet> factors;
  std::optional<SyntheticData> synthetic;

  std::set<RiskFreeMode> modes;
  for (const auto& s : cfg.specs) modes.insert(s.riskfree_mode);

  if (!cfg.paths.panel_file.empty()) {
    panels.emplace(cfg.panel.riskfree_mode, load_panel_file(cfg, inputs));
  } else if (!cfg.paths.market_dir.empty()) {
    Inputs in = load_raw(cfg, modes.count(RiskFreeMode::TBill) > 0);
    inputs = in.digests;
    for (auto m : modes) panels.emplace(m, build_for_mode(cfg, in, m).panel);
  } else if (cfg.synth) {
    synthetic = generate_synthetic(synth_config(cfg));
    panels.emplace(synthetic->panel.riskfree_mode(), synthetic->panel);
    factors = synthetic->factors;
  } else {
    invalid("no input data: set paths.panel_file, paths.market_dir or a synth section");
  }
  if (!cfg.paths.factors_file.empty()) {
    const auto& path = cfg.paths.factors_file.resolved;
    std::ifstream s(path, std::ios::binary);
    if (!s) throw Error(ErrorCode::Io, "cannot read " + path.string());
    factors = with_file_context(path, [&] { return read_factor_csv(s); });
    add_digest(inputs, cfg.paths.factors_file.text, path);
  }
  if (factors) opts.factor_override = &*factors;

  const auto& dir = output_dir(cfg);
  const ComparisonReport report = compare_models(
      cfg.specs,
      [&](RiskFreeMode m) -> const Panel& {
        const auto it = panels.find(m);
        if (it == panels.end())
          throw Error(ErrorCode::SpecMismatch,
                      "no panel available for risk-free mode " + std::string(name(m)) +
                          " (a panel file carries only panel.riskfree_mode)");
        return it->second;
      },
      opts);

  Writer w(dir);
  const std::string comparison = comparison_csv(report);
  const std::string pairs = pairs_csv(report);
  w.put("comparison.csv", comparison);
  w.put("comparison_pairs.csv", pairs);
  w.put("comparison.md", comparison_markdown(comparison, pairs));
  for (const auto& r : report.results) {
    const std::string& label = r.spec.label;
    const std::string ct = ct_csv(r);
    w.put(label + "_ct.csv", ct);
    w.put(label + "_first_pass_params.csv", first_pass_params_csv(r));
    w.put(label + "_risk_adjusted.csv", risk_adjusted_csv(r));
    w.put(label + "_factors.csv", factors_text(r.factor_set));
    w.put(label + "_drops.csv", drops_csv(r));
    w.put(label + "_cumulative_ct.svg", cumulative_svg(ct, label + ": cumulative second-pass coefficients"));
  }
  json m = manifest(cfg, "run", inputs, w.digests());
  if (synthetic) m["synth_preset"] = synthetic->truth.preset;
  w.put("manifest.json", m.dump(2) + "\n");
  return w.finish();
}

std::vector<fs::path> cmd_synth(const RunConfig& cfg) {
  const SynthConfig s = synth_config(cfg);
  const SyntheticData data = generate_synthetic(s);
  RunConfig recorded = cfg;
  recorded.synth = s;
  Writer w(output_dir(cfg));
  w.put("panel.csv", panel_to_csv(data.panel));
  w.put("factors.csv", factors_text(data.factors));
  w.put("truth.json", truth_to_json(data.truth));
  json m = manifest(recorded, "synth", json::array(), w.digests());
  m["synth_preset"] = s.preset;
  w.put("manifest.json", m.dump(2) + "\n");
  return w.finish();
}

std::vector<fs::path> cmd_report(const RunConfig& cfg) {
  const auto& dir = output_dir(cfg);
  if (!fs::is_regular_file(dir / "comparison.csv"))
    invalid("no comparison.csv in " + dir.string() + "; run `cbeta run` first");
  std::vector<fs::path> cts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (entry.is_regular_file() && fname.size() > 7 && fname.ends_with("_ct.csv")) cts.push_back(entry.path());
  }
  std::sort(cts.begin(), cts.end());
  const std::string pairs_path = (dir / "comparison_pairs.csv").string();
  const std::string pairs = fs::is_regular_file(pairs_path) ? read_file(pairs_path) : std::string();
  Writer w(dir);
  w.put("comparison.md", comparison_markdown(read_file(dir / "comparison.csv"), pairs));
  for (const auto& p : cts) {
    const std::string fname = p.filename().string();
    const std::string label = fname.substr(0, fname.size() - 7);
    w.put(label + "_cumulative_ct.svg",
          cumulative_svg(read_file(p), label + ": cumulative second-pass coefficients"));
  }
  return w.finish();
}

std::vector<fs::path> cmd_fetch(const RunConfig& cfg) {
  if (!cfg.fetch) invalid("fetch needs a \"fetch\" section in the config");
  const auto& f = *cfg.fetch;
  if (f.coins.empty()) invalid("fetch.coins: list at least one coin");
  if (!f.start || !f.end) invalid("fetch: start and end dates are required");
  if (f.client.url_template.empty()) invalid("fetch.url_template is required");
  return fetch_snapshot(f.client, f.coins, *f.start, *f.end, output_dir(cfg));
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->category()) {
      case ErrorCategory::Validation: return 2;
      case ErrorCategory::Io: return 3;
      case ErrorCategory::Estimation: return 4;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-pass conditional-beta asset pricing on crypto panels", "cbeta"};
  app.require_subcommand(1);
  std::string config_path, output;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--output", output, "Output directory (overrides paths.output_dir)");
  app.add_option("--seed", seed, "Random seed (overrides config seed)");

  auto* ingest = app.add_subcommand("ingest", "Validate inputs and write the coin-day panel");
  auto* run = app.add_subcommand("run", "Estimate every configured spec and write reports");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic panel with known parameters");
  auto* report = app.add_subcommand("report", "Re-render markdown and charts from run CSVs");
  auto* fetch = app.add_subcommand("fetch", "Download market snapshots over HTTP");
  std::string preset;
  synth->add_option("--preset", preset, "Scenario preset A, B or C");
  for (auto* sub : {ingest, run, synth, report, fetch}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? config_from_json(json::object(), fs::current_path())
                                        : load_config(config_path);
    if (!output.empty()) cfg.paths.output_dir = {output, fs::absolute(output)};
    if (seed) cfg.seed = seed;
    if (!preset.empty()) {
      SynthConfig s = synth_preset(preset);
      if (cfg.synth && cfg.synth->preset != preset)
        invalid("--preset " + preset + " conflicts with synth.preset " + cfg.synth->preset);
      if (!cfg.synth) cfg.synth = s;
    }

    std::vector<fs::path> written;
    if (*ingest) written = cmd_ingest(cfg);
    else if (*run) written = cmd_run(cfg);
    else if (*synth) written = cmd_synth(cfg);
    else if (*report) written = cmd_report(cfg);
    else if (*fetch) written = cmd_fetch(cfg);
    for (const auto& p : written) out << p.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace cbeta::cli

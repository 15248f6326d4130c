#include "cbeta/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cbeta/error.hpp"

namespace cbeta::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

// Reads keys from one JSON object and remembers which were consumed, so
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) invalid(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      invalid(path(key) + ": wrong type");
    }
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) invalid(path(item.key()) + ": unknown key");
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class F>
auto guarded(const std::string& where, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw Error(ErrorCode::InvalidConfig, where + ": " + e.what());
    throw;
  }
}

Date date_of(const json& j, const std::string& where) {
  if (!j.is_string()) invalid(where + ": expected a YYYY-MM-DD string");
  Date d;
  if (!try_parse_date(j.get<std::string>(), d)) invalid(where + ": bad date '" + j.get<std::string>() + "'");
  return d;
}

std::string string_of(const json& j, const std::string& where) {
  if (!j.is_string()) invalid(where + ": expected a string");
  return j.get<std::string>();
}

std::vector<Characteristic> characteristics_of(const json& j, const std::string& where) {
  if (!j.is_array()) invalid(where + ": expected an array");
  std::vector<Characteristic> out;
  for (const auto& item : j)
    out.push_back(guarded(where, [&] { return parse_characteristic(string_of(item, where)); }));
  return out;
}

json names_of(const std::vector<Characteristic>& cs) {
  json a = json::array();
  for (auto c : cs) a.push_back(std::string(name(c)));
  return a;
}

NormalLaw normal_of(const json& j, const std::string& where, NormalLaw law) {
  Section s(j, where);
  s.get("mean", law.mean);
  s.get("sd", law.sd);
  s.finish();
  if (!(law.sd >= 0.0)) invalid(where + ".sd: must be >= 0");
  return law;
}

json normal_json(const NormalLaw& n) { return json{{"mean", n.mean}, {"sd", n.sd}}; }

ConfigPath path_of(Section& s, const std::string& key, const fs::path& base, bool must_exist,
                   bool directory) {
  ConfigPath p;
  if (!s.has(key)) return p;
  p.text = string_of(s.at(key), s.path(key));
  if (p.text.empty()) return p;
  const fs::path raw(p.text);
  p.resolved = raw.is_absolute() ? raw : base / raw;
  if (must_exist) {
    std::error_code ec;
    const bool ok = directory ? fs::is_directory(p.resolved, ec) : fs::is_regular_file(p.resolved, ec);
    if (!ok) invalid(s.path(key) + ": " + (directory ? "directory" : "file") + " not found: " + p.text);
  }
  return p;
}

BetaSpec beta_of(Section& s, const std::string& where, BetaSpec beta) {
  if (s.has("beta"))
    beta.mode = guarded(where, [&] { return parse_beta_mode(string_of(s.at("beta"), s.path("beta"))); });
  if (s.has("characteristics")) beta.characteristics = characteristics_of(s.at("characteristics"), s.path("characteristics"));
  if (s.has("lagged_return"))
    beta.lagged_return = guarded(where, [&] {
      return parse_lagged_return(string_of(s.at("lagged_return"), s.path("lagged_return")));
    });
  return beta;
}

ModelSpec spec_of(const json& j, const std::string& where) {
  Section s(j, where);
  ModelSpec spec;
  if (s.has("factors"))
    spec.factors = guarded(where, [&] { return parse_factor_model(string_of(s.at("factors"), s.path("factors"))); });
  spec.beta = beta_of(s, where, spec.beta);
  if (s.has("anomalies")) spec.anomalies = characteristics_of(s.at("anomalies"), s.path("anomalies"));
  if (s.has("riskfree_mode"))
    spec.riskfree_mode = guarded(where, [&] {
      return parse_riskfree_mode(string_of(s.at("riskfree_mode"), s.path("riskfree_mode")));
    });
  if (s.has("label")) {
    spec.label = string_of(s.at("label"), s.path("label"));
  } else {
    std::string fm(name(spec.factors));
    for (auto& ch : fm) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    spec.label = fm + "_" + std::string(name(spec.beta.mode)) + "_" + std::string(name(spec.riskfree_mode));
  }
  for (char ch : spec.label)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
      invalid(where + ".label: only letters, digits, '_', '-' and '.' are allowed");
  s.finish();
  guarded(where, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

json spec_json(const ModelSpec& spec) {
  json j;
  j["label"] = spec.label;
  j["factors"] = std::string(name(spec.factors));
  j["beta"] = std::string(name(spec.beta.mode));
  j["characteristics"] = names_of(spec.beta.characteristics);
  j["lagged_return"] = std::string(name(spec.beta.lagged_return));
  j["anomalies"] = names_of(spec.anomalies);
  j["riskfree_mode"] = std::string(name(spec.riskfree_mode));
  return j;
}

SynthConfig synth_of(const json& j) {
  const std::string where = "synth";
  Section s(j, where);
  std::string preset = "B";
  s.get("preset", preset);
  SynthConfig cfg = guarded(where, [&] { return synth_preset(preset); });
  s.get("n_coins", cfg.n_coins);
  s.get("n_days", cfg.n_days);
  if (s.has("factor_model"))
    cfg.factor_model = guarded(where, [&] {
      return parse_factor_model(string_of(s.at("factor_model"), s.path("factor_model")));
    });
  cfg.beta = beta_of(s, where, cfg.beta);
  s.get("noise_vol", cfg.noise_vol);
  if (s.has("anomalies")) cfg.anomalies = characteristics_of(s.at("anomalies"), s.path("anomalies"));
  s.get("anomaly_effects", cfg.anomaly_effects);
  s.get("characteristic_phi", cfg.characteristic_phi);
  s.get("annual_riskfree", cfg.annual_riskfree);
  if (s.has("start")) cfg.start = date_of(s.at("start"), s.path("start"));
  if (s.has("epu")) {
    Section e(s.at("epu"), s.path("epu"));
    e.get("mean", cfg.epu_dynamics.mean);
    e.get("phi", cfg.epu_dynamics.phi);
    e.get("innovation_sd", cfg.epu_dynamics.innovation_sd);
    e.finish();
  }
  if (s.has("bitcoin_return")) cfg.bitcoin_return = normal_of(s.at("bitcoin_return"), s.path("bitcoin_return"), cfg.bitcoin_return);
  if (s.has("factor_dynamics")) {
    Section f(s.at("factor_dynamics"), s.path("factor_dynamics"));
    for (auto fac : kAllFactors) {
      const std::string key(name(fac));
      if (f.has(key)) cfg.factor_dynamics[index(fac)] = normal_of(f.at(key), f.path(key), cfg.factor_dynamics[index(fac)]);
    }
    f.finish();
  }
  if (s.has("theta_law")) {
    Section t(s.at("theta_law"), s.path("theta_law"));
    auto& law = cfg.theta_law;
    const std::pair<const char*, NormalLaw*> fields[] = {
        {"alpha", &law.alpha}, {"base", &law.base},         {"u", &law.u},
        {"r", &law.r},         {"char_base", &law.char_base}, {"char_u", &law.char_u},
        {"char_r", &law.char_r}};
    for (const auto& [key, target] : fields)
      if (t.has(key)) *target = normal_of(t.at(key), t.path(key), *target);
    t.finish();
  }
  if (s.has("winsor")) {
    Section w(s.at("winsor"), s.path("winsor"));
    w.get("lower", cfg.winsor.lower);
    w.get("upper", cfg.winsor.upper);
    w.finish();
  }
  s.finish();
  return cfg;
}

json synth_json(const SynthConfig& cfg) {
  json j;
  j["preset"] = cfg.preset;
  j["n_coins"] = cfg.n_coins;
  j["n_days"] = cfg.n_days;
  j["factor_model"] = std::string(name(cfg.factor_model));
  j["beta"] = std::string(name(cfg.beta.mode));
  j["characteristics"] = names_of(cfg.beta.characteristics);
  j["lagged_return"] = std::string(name(cfg.beta.lagged_return));
  j["noise_vol"] = cfg.noise_vol;
  j["anomalies"] = names_of(cfg.anomalies);
  j["anomaly_effects"] = cfg.anomaly_effects;
  j["characteristic_phi"] = cfg.characteristic_phi;
  j["annual_riskfree"] = cfg.annual_riskfree;
  j["start"] = format_date(cfg.start);
  j["epu"] = json{{"mean", cfg.epu_dynamics.mean},
                  {"phi", cfg.epu_dynamics.phi},
                  {"innovation_sd", cfg.epu_dynamics.innovation_sd}};
  j["bitcoin_return"] = normal_json(cfg.bitcoin_return);
  json fd;
  for (auto f : kAllFactors) fd[std::string(name(f))] = normal_json(cfg.factor_dynamics[index(f)]);
  j["factor_dynamics"] = fd;
  const auto& law = cfg.theta_law;
  j["theta_law"] = json{{"alpha", normal_json(law.alpha)},     {"base", normal_json(law.base)},
                        {"u", normal_json(law.u)},             {"r", normal_json(law.r)},
                        {"char_base", normal_json(law.char_base)}, {"char_u", normal_json(law.char_u)},
                        {"char_r", normal_json(law.char_r)}};
  j["winsor"] = json{{"lower", cfg.winsor.lower}, {"upper", cfg.winsor.upper}};
  return j;
}

FetchSection fetch_of(const json& j) {
  Section s(j, "fetch");
  FetchSection f;
  s.get("url_template", f.client.url_template);
  s.get("api_key_env", f.client.api_key_env);
  s.get("api_key_header", f.client.api_key_header);
  s.get("timeout_seconds", f.client.timeout_seconds);
  s.get("max_attempts", f.client.max_attempts);
  long backoff = f.client.initial_backoff.count();
  s.get("initial_backoff_ms", backoff);
  f.client.initial_backoff = std::chrono::milliseconds(backoff);
  s.get("concurrency", f.client.concurrency);
  s.get("coins", f.coins);
  if (s.has("start")) f.start = date_of(s.at("start"), s.path("start"));
  if (s.has("end")) f.end = date_of(s.at("end"), s.path("end"));
  s.finish();
  if (f.client.max_attempts < 1) invalid("fetch.max_attempts: must be >= 1");
  return f;
}

}  // namespace

RunOptions RunConfig::run_options() const {
  RunOptions o;
  o.factors = factors;
  o.factors.bitcoin_id = panel.bitcoin_id;
  o.first_pass = first_pass;
  o.second_pass = second_pass;
  o.threads = threads;
  return o;
}

std::vector<ModelSpec> default_specs() {
  ModelSpec u;
  u.label = "capm_unconditional";
  u.beta.mode = BetaMode::Unconditional;
  ModelSpec c;
  c.label = "capm_conditional";
  return {u, c};
}

RunConfig config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  Section top(doc, "");

  if (top.has("paths")) {
    Section p(top.at("paths"), "paths");
    cfg.paths.market_dir = path_of(p, "market_dir", base_dir, true, true);
    cfg.paths.epu_file = path_of(p, "epu_file", base_dir, true, false);
    cfg.paths.riskfree_file = path_of(p, "riskfree_file", base_dir, true, false);
    cfg.paths.panel_file = path_of(p, "panel_file", base_dir, true, false);
    cfg.paths.factors_file = path_of(p, "factors_file", base_dir, true, false);
    cfg.paths.output_dir = path_of(p, "output_dir", base_dir, false, true);
    p.finish();
  }

  if (top.has("universe")) {
    Section u(top.at("universe"), "universe");
    u.get("top_n", cfg.universe.top_n);
    u.get("min_history_days", cfg.universe.min_history_days);
    if (u.has("rank_date")) cfg.universe.rank_date = date_of(u.at("rank_date"), "universe.rank_date");
    u.finish();
  }

  if (top.has("windows")) {
    Section w(top.at("windows"), "windows");
    auto& win = cfg.panel.windows;
    w.get("momentum_days", win.momentum_days);
    w.get("liquidity_days", win.liquidity_days);
    w.get("value_begin", win.value_begin);
    w.get("value_end", win.value_end);
    w.get("min_valid_fraction", win.min_valid_fraction);
    w.finish();
    if (win.momentum_days < 1 || win.liquidity_days < 1 || win.value_end < 1 || win.value_begin < win.value_end)
      invalid("windows: lengths must be positive and value_begin >= value_end");
    if (!(win.min_valid_fraction > 0.0 && win.min_valid_fraction <= 1.0))
      invalid("windows.min_valid_fraction: must be in (0, 1]");
  }

  if (top.has("panel")) {
    Section p(top.at("panel"), "panel");
    p.get("winsor_lower", cfg.panel.winsor.lower);
    p.get("winsor_upper", cfg.panel.winsor.upper);
    p.get("max_ffill_days", cfg.panel.max_ffill_days);
    if (p.has("riskfree_mode"))
      cfg.panel.riskfree_mode = guarded("panel", [&] {
        return parse_riskfree_mode(string_of(p.at("riskfree_mode"), "panel.riskfree_mode"));
      });
    p.get("bitcoin_id", cfg.panel.bitcoin_id);
    p.finish();
    const auto& w = cfg.panel.winsor;
    if (!(w.lower >= 0.0 && w.lower < w.upper && w.upper <= 1.0))
      invalid("panel: winsor limits must satisfy 0 <= lower < upper <= 1");
    if (cfg.panel.max_ffill_days < 0) invalid("panel.max_ffill_days: must be >= 0");
  }
  cfg.factors.bitcoin_id = cfg.panel.bitcoin_id;

  if (top.has("factors")) {
    Section f(top.at("factors"), "factors");
    f.get("low_breakpoint", cfg.factors.low_breakpoint);
    f.get("high_breakpoint", cfg.factors.high_breakpoint);
    f.get("min_coins", cfg.factors.min_coins);
    f.get("exclude_btc_from_market", cfg.factors.exclude_btc_from_market);
    f.finish();
    if (!(cfg.factors.low_breakpoint > 0.0 && cfg.factors.low_breakpoint < cfg.factors.high_breakpoint &&
          cfg.factors.high_breakpoint < 1.0))
      invalid("factors: breakpoints must satisfy 0 < low < high < 1");
  }

  if (top.has("first_pass")) {
    Section f(top.at("first_pass"), "first_pass");
    f.get("min_extra_obs", cfg.first_pass.min_extra_obs);
    f.get("rank_tolerance", cfg.first_pass.ols.rank_tolerance);
    f.finish();
  }

  if (top.has("second_pass")) {
    Section s(top.at("second_pass"), "second_pass");
    s.get("min_coins", cfg.second_pass.min_coins);
    s.get("rank_tolerance", cfg.second_pass.ols.rank_tolerance);
    if (s.has("nw_lags")) {
      std::size_t lags = 0;
      s.get("nw_lags", lags);
      cfg.second_pass.fm.nw_lags = lags;
    }
    s.get("critical", cfg.second_pass.fm.critical);
    s.finish();
    if (!(cfg.second_pass.fm.critical > 0.0)) invalid("second_pass.critical: must be > 0");
  }

  if (top.has("specs")) {
    const auto& arr = top.at("specs");
    if (!arr.is_array() || arr.empty()) invalid("specs: expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.specs.push_back(spec_of(arr[i], "specs[" + std::to_string(i) + "]"));
  } else {
    cfg.specs = default_specs();
  }
  std::set<std::string> labels;
  for (const auto& s : cfg.specs)
    if (!labels.insert(s.label).second) invalid("specs: duplicate label '" + s.label + "'");

  if (top.has("seed")) {
    const auto& s = top.at("seed");
    if (!s.is_null()) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) invalid("seed: expected a non-negative integer");
      cfg.seed = s.get<std::uint64_t>();
    }
  }
  top.get("threads", cfg.threads);
  if (top.has("synth")) cfg.synth = synth_of(top.at("synth"));
  if (top.has("fetch")) cfg.fetch = fetch_of(top.at("fetch"));
  top.finish();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) invalid("config file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["paths"] = json{{"market_dir", cfg.paths.market_dir.text},
                    {"epu_file", cfg.paths.epu_file.text},
                    {"riskfree_file", cfg.paths.riskfree_file.text},
                    {"panel_file", cfg.paths.panel_file.text},
                    {"factors_file", cfg.paths.factors_file.text},
                    {"output_dir", cfg.paths.output_dir.text}};
  j["universe"] = json{{"top_n", cfg.universe.top_n},
                       {"min_history_days", cfg.universe.min_history_days},
                       {"rank_date", cfg.universe.rank_date ? json(format_date(*cfg.universe.rank_date))
                                                            : json(nullptr)}};
  const auto& w = cfg.panel.windows;
  j["windows"] = json{{"momentum_days", w.momentum_days},
                      {"liquidity_days", w.liquidity_days},
                      {"value_begin", w.value_begin},
                      {"value_end", w.value_end},
                      {"min_valid_fraction", w.min_valid_fraction}};
  j["panel"] = json{{"winsor_lower", cfg.panel.winsor.lower},
                    {"winsor_upper", cfg.panel.winsor.upper},
                    {"max_ffill_days", cfg.panel.max_ffill_days},
                    {"riskfree_mode", std::string(name(cfg.panel.riskfree_mode))},
                    {"bitcoin_id", cfg.panel.bitcoin_id}};
  j["factors"] = json{{"low_breakpoint", cfg.factors.low_breakpoint},
                      {"high_breakpoint", cfg.factors.high_breakpoint},
                      {"min_coins", cfg.factors.min_coins},
                      {"exclude_btc_from_market", cfg.factors.exclude_btc_from_market}};
  j["first_pass"] = json{{"min_extra_obs", cfg.first_pass.min_extra_obs},
                         {"rank_tolerance", cfg.first_pass.ols.rank_tolerance}};
  j["second_pass"] = json{{"min_coins", cfg.second_pass.min_coins},
                          {"rank_tolerance", cfg.second_pass.ols.rank_tolerance},
                          {"nw_lags", cfg.second_pass.fm.nw_lags ? json(*cfg.second_pass.fm.nw_lags) : json(nullptr)},
                          {"critical", cfg.second_pass.fm.critical}};
  json specs = json::array();
  for (const auto& s : cfg.specs) specs.push_back(spec_json(s));
  j["specs"] = specs;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["threads"] = cfg.threads;
  if (cfg.synth) j["synth"] = synth_json(*cfg.synth);
  if (cfg.fetch) {
    const auto& f = *cfg.fetch;
    json coins = f.coins;
    j["fetch"] = json{{"url_template", f.client.url_template},
                      {"api_key_env", f.client.api_key_env},
                      {"api_key_header", f.client.api_key_header},
                      {"timeout_seconds", f.client.timeout_seconds},
                      {"max_attempts", f.client.max_attempts},
                      {"initial_backoff_ms", f.client.initial_backoff.count()},
                      {"concurrency", f.client.concurrency},
                      {"coins", coins},
                      {"start", f.start ? json(format_date(*f.start)) : json(nullptr)},
                      {"end", f.end ? json(format_date(*f.end)) : json(nullptr)}};
  }
  return j;
}

}  // namespace cbeta::cli

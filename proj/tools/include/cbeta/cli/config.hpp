#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbeta/fetch.hpp"
#include "cbeta/ingest.hpp"
#include "cbeta/panel.hpp"
#include "cbeta/pipeline.hpp"
#include "cbeta/synth.hpp"

namespace cbeta::cli {

using json = nlohmann::ordered_json;

// A path as written in the config plus its resolution against the config
// file's directory. Only `text` is echoed into manifests.
struct ConfigPath {
  std::string text;
  std::filesystem::path resolved;

  bool empty() const { return text.empty(); }
};

struct Paths {
  ConfigPath market_dir;
  ConfigPath epu_file;
  ConfigPath riskfree_file;
  ConfigPath panel_file;    // prebuilt panel CSV, used instead of raw inputs
  ConfigPath factors_file;  // factor CSV, used instead of building factors
  ConfigPath output_dir;
};

struct FetchSection {
  FetchConfig client;
  std::vector<std::string> coins;
  std::optional<Date> start;
  std::optional<Date> end;
};

struct RunConfig {
  Paths paths;
  UniverseConfig universe;
  PanelOptions panel;  // riskfree_mode is the mode of the ingest panel
  FactorOptions factors;
  FirstPassOptions first_pass;
  SecondPassOptions second_pass;
  std::vector<ModelSpec> specs;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::optional<SynthConfig> synth;
  std::optional<FetchSection> fetch;

  // Pipeline options assembled from the sections above.
  RunOptions run_options() const;
};

// Parses and validates a config document. Unknown keys are rejected at
// every level. Relative paths resolve against `base_dir`. Referenced input
// paths must exist. Throws Error(InvalidConfig).
RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Full document with every default spelled out.
json config_to_json(const RunConfig& cfg);

// Default comparison: CAPM unconditional and conditional, t-bill excess.
std::vector<ModelSpec> default_specs();

}  // namespace cbeta::cli

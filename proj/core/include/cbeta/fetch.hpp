#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cbeta/date.hpp"

namespace cbeta {

// Client settings for a CoinMarketCap-style daily-history endpoint.
//
// `url_template` is a full http:// URL; the placeholders {coin}, {start}
// and {end} are substituted per request (dates as YYYY-MM-DD). The response
// body must be JSON: either an array of objects or an object with a "data"
// array, each element carrying date, close, volume and market_cap.
struct FetchConfig {
  std::string url_template;
  std::string api_key_env;  // name of the env var holding the key; empty = none
  std::string api_key_header = "X-CMC_PRO_API_KEY";
  double timeout_seconds = 30.0;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t concurrency = 4;
};

// Writes one `<coin>.csv` per coin in the market CSV schema into out_dir,
// overwriting existing files. Returns the written paths in coin order.
// Throws Error(HttpError) on a non-2xx status and Error(RateLimited) once
// max_attempts consecutive 429 responses were seen for one coin.
std::vector<std::filesystem::path> fetch_snapshot(const FetchConfig& cfg,
                                                  const std::vector<std::string>& coin_ids,
                                                  Date start, Date end,
                                                  const std::filesystem::path& out_dir);

}  // namespace cbeta

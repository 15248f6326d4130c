#include "cbeta/fetch.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cbeta/error.hpp"
#include "cbeta/ingest.hpp"

namespace cbeta {

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "fetch url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

double number_field(const nlohmann::json& row, const char* key) {
  const auto& v = row.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return std::stod(v.get<std::string>());
  throw Error(ErrorCode::MalformedRow, std::string("field '") + key + "' is not numeric");
}

CoinSeries decode_payload(const std::string& coin, const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, coin + ": response is not JSON: " + e.what());
  }
  const nlohmann::json& rows = doc.is_object() ? doc.at("data") : doc;
  if (!rows.is_array()) throw Error(ErrorCode::MalformedRow, coin + ": expected a row array");
  CoinSeries series{coin, {}};
  try {
    for (const auto& row : rows) {
      DailyBar bar;
      bar.date = parse_date(row.at("date").get<std::string>());
      bar.close = number_field(row, "close");
      bar.volume = number_field(row, "volume");
      bar.market_cap = number_field(row, "market_cap");
      series.bars.push_back(bar);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, coin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::MalformedRow, coin + ": " + e.what());
  }
  // Route through the CSV parser so fetched files obey the same validation.
  return parse_market_csv(serialize_market_csv(series), coin);
}

std::string fetch_one(const FetchConfig& cfg, const std::string& coin, Date start, Date end) {
  std::string url = cfg.url_template;
  replace_all(url, "{coin}", coin);
  replace_all(url, "{start}", format_date(start));
  replace_all(url, "{end}", format_date(end));
  const auto parts = split_url(url);

  httplib::Client client(parts.origin);
  const auto timeout = std::chrono::duration<double>(cfg.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!cfg.api_key_env.empty())
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) headers.emplace(cfg.api_key_header, key);

  auto backoff = cfg.initial_backoff;
  int last_status = 0;
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    auto res = client.Get(parts.path, headers);
    if (res) {
      last_status = res->status;
      if (res->status >= 200 && res->status < 300) return res->body;
      if (res->status != 429)
        throw Error(ErrorCode::HttpError, coin + ": status " + std::to_string(res->status));
    } else {
      last_status = 0;
    }
    if (attempt < cfg.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  if (last_status == 429)
    throw Error(ErrorCode::RateLimited,
                coin + ": still rate limited after " + std::to_string(cfg.max_attempts) + " attempts");
  throw Error(ErrorCode::HttpError, coin + ": no response from " + parts.origin);
}

}  // namespace

std::vector<std::filesystem::path> fetch_snapshot(const FetchConfig& cfg,
                                                  const std::vector<std::string>& coin_ids,
                                                  Date start, Date end,
                                                  const std::filesystem::path& out_dir) {
  if (coin_ids.empty()) return {};
  if (cfg.max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "max_attempts must be >= 1");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t n = coin_ids.size();
  std::vector<std::filesystem::path> paths(n);
  std::vector<std::optional<Error>> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto series = decode_payload(coin_ids[i], fetch_one(cfg, coin_ids[i], start, end));
        const auto path = out_dir / (coin_ids[i] + ".csv");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << serialize_market_csv(series);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
        paths[i] = path;
      } catch (const Error& e) {
        failures[i] = e;
      } catch (const std::exception& e) {
        failures[i] = Error(ErrorCode::HttpError, coin_ids[i] + ": " + e.what());
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(cfg.concurrency, 1, n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures)
    if (f) throw *f;
  return paths;
}

}  // namespace cbeta

#include "cbeta/cli/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "cbeta/csv.hpp"
#include "cbeta/error.hpp"

namespace cbeta::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : std::string(); }

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Plain comma-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::MalformedRow, "missing column '" + std::string(name) + "'");
  }
};

Table parse_table(std::string_view text) {
  Table t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (auto f : csv::split(line)) fields.emplace_back(f);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw Error(ErrorCode::MalformedRow, "row has " + std::to_string(fields.size()) +
                                                 " fields, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

double to_double(const std::string& s) {
  double v = std::nan("");
  if (s.empty() || !csv::parse_double(s, v)) return std::nan("");
  return v;
}

constexpr std::array<Characteristic, kNumCharacteristics> kReportOrder{
    Characteristic::Size, Characteristic::Liquidity, Characteristic::Momentum, Characteristic::Value};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string comparison_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << "label,factors,beta,riskfree_mode,coins_first_pass,coins_second_pass,n_dates,"
         "first_pass_avg_adj_r2,second_pass_avg_adj_r2,n_significant,critical,nw_lags";
  for (auto c : kReportOrder) {
    const std::string s(short_name(c));
    out << ',' << s << "_mean," << s << "_fm_t," << s << "_nw_t," << s << "_share_sig";
  }
  out << '\n';
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << r.label << ',' << name(r.factors) << ',' << name(r.mode) << ',' << name(r.riskfree_mode) << ','
        << r.coins_first_pass << ',' << r.coins_second_pass << ',' << r.n_dates << ','
        << num(r.first_pass_avg_adj_r2) << ',' << num(r.second_pass_avg_adj_r2) << ',' << r.n_significant
        << ',' << num(report.critical) << ',' << report.results[i].second.fm.nw_lags;
    for (auto c : kReportOrder) {
      const auto it = std::find_if(r.anomalies.begin(), r.anomalies.end(),
                                   [&](const AnomalyStats& a) { return a.name == short_name(c); });
      if (it == r.anomalies.end())
        out << ",,,,";
      else
        out << ',' << num(it->fm_mean) << ',' << num(it->fm_t) << ',' << num(it->nw_t) << ','
            << num(it->share_significant);
    }
    out << '\n';
  }
  return out.str();
}

std::string pairs_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << "unconditional,conditional,delta_second_pass_adj_r2,delta_significant,unconditional_coins,"
         "conditional_coins,conditional_coins_subset\n";
  for (const auto& p : report.pairs)
    out << p.unconditional_label << ',' << p.conditional_label << ',' << num(p.delta_second_pass_adj_r2) << ','
        << p.delta_significant << ',' << p.unconditional_coins << ',' << p.conditional_coins << ','
        << (p.conditional_coins_subset ? "true" : "false") << '\n';
  return out.str();
}

std::string comparison_markdown(std::string_view comparison, std::string_view pairs) {
  const Table rows = parse_table(comparison);
  const Table pair_rows = parse_table(pairs);
  std::ostringstream md;
  md << "# Model comparison\n\n";
  std::string critical = "1.96";
  if (!rows.rows.empty()) critical = rows.rows.front()[rows.column("critical")];
  md << "An anomaly counts as significant when |NW t| > " << critical
     << ". Newey-West lags follow L = floor(4 (T/100)^(2/9)) with T the number of second-pass dates;"
        " the lag used per spec is listed below.\n\n";

  md << "| spec | factors | beta | risk-free | coins 1st/2nd | dates | NW lags | 1st-pass adj R2 | "
        "2nd-pass adj R2 | significant |";
  std::vector<Characteristic> shown;
  for (auto c : kReportOrder) {
    const auto col = rows.column(std::string(short_name(c)) + "_mean");
    if (std::any_of(rows.rows.begin(), rows.rows.end(), [&](const auto& r) { return !r[col].empty(); }))
      shown.push_back(c);
  }
  for (auto c : shown) md << ' ' << name(c) << " mean (FM t, NW t) |";
  md << "\n|";
  for (std::size_t i = 0; i < 10 + shown.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& r : rows.rows) {
    auto f = [&](std::string_view col) -> const std::string& { return r[rows.column(col)]; };
    md << "| " << f("label") << " | " << f("factors") << " | " << f("beta") << " | " << f("riskfree_mode")
       << " | " << f("coins_first_pass") << '/' << f("coins_second_pass") << " | " << f("n_dates") << " | "
       << f("nw_lags") << " | " << fixed(to_double(f("first_pass_avg_adj_r2")), 4) << " | "
       << fixed(to_double(f("second_pass_avg_adj_r2")), 4) << " | " << f("n_significant") << " |";
    for (auto c : shown) {
      const std::string s(short_name(c));
      if (f(s + "_mean").empty()) {
        md << " |";
        continue;
      }
      md << ' ' << fixed(to_double(f(s + "_mean")), 6) << " (" << fixed(to_double(f(s + "_fm_t")), 2) << ", "
         << fixed(to_double(f(s + "_nw_t")), 2) << ") |";
    }
    md << '\n';
  }

  if (!pair_rows.rows.empty()) {
    md << "\n## Unconditional vs conditional\n\n"
          "| unconditional | conditional | change in 2nd-pass adj R2 | change in significant | "
          "coins uncond/cond | conditional subset |\n|---|---|---|---|---|---|\n";
    for (const auto& r : pair_rows.rows) {
      auto f = [&](std::string_view col) -> const std::string& { return r[pair_rows.column(col)]; };
      md << "| " << f("unconditional") << " | " << f("conditional") << " | "
         << fixed(to_double(f("delta_second_pass_adj_r2")), 4) << " | " << f("delta_significant") << " | "
         << f("unconditional_coins") << '/' << f("conditional_coins") << " | "
         << f("conditional_coins_subset") << " |\n";
    }
  }
  return md.str();
}

std::string ct_csv(const ModelResult& result) {
  std::ostringstream out;
  out << "date,c0";
  for (auto c : result.spec.anomalies) out << ",c_" << short_name(c);
  out << ",adj_r2\n";
  for (const auto& f : result.second.fits) {
    out << format_date(f.date) << ',' << num(f.c0);
    for (double v : f.c) out << ',' << num(v);
    out << ',' << num(f.adj_r2) << '\n';
  }
  return out.str();
}

std::string first_pass_params_csv(const ModelResult& result) {
  std::ostringstream out;
  out << "coin_id,param_name,estimate,stderr\n";
  for (const auto& fit : result.first_pass)
    for (std::size_t k = 0; k < fit.column_names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      out << fit.coin_id << ',' << fit.column_names[k] << ',' << num(fit.coefficients(i)) << ','
          << num(fit.standard_errors(i)) << '\n';
    }
  return out.str();
}

std::string risk_adjusted_csv(const ModelResult& result) {
  std::ostringstream out;
  out << "coin_id,date,risk_adjusted\n";
  for (const auto& fit : result.first_pass)
    for (std::size_t i = 0; i < fit.dates.size(); ++i)
      out << fit.coin_id << ',' << format_date(fit.dates[i]) << ',' << num(fit.risk_adjusted[i]) << '\n';
  return out.str();
}

std::string drops_csv(const ModelResult& result) {
  auto clean = [](std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  std::ostringstream out;
  out << "kind,id,reason\n";
  for (const auto& d : result.dropped_coins) out << "coin," << d.coin_id << ',' << clean(d.reason) << '\n';
  for (const auto& d : result.dropped_dates) out << "date," << format_date(d.date) << ',' << clean(d.reason) << '\n';
  return out.str();
}

std::string cumulative_svg(std::string_view ct, std::string_view title) {
  const Table t = parse_table(ct);
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind("c_", 0) == 0) cols.push_back(i);
  const std::size_t date_col = t.column("date");

  std::vector<std::vector<double>> series(cols.size());
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    double acc = 0.0;
    for (const auto& r : t.rows) {
      const double v = to_double(r[cols[k]]);
      if (std::isfinite(v)) acc += v;
      series[k].push_back(acc);
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
  }
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }

  constexpr double W = 800, H = 420, L = 70, R = 150, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  const std::size_t n = t.rows.size();
  auto x_of = [&](std::size_t i) { return L + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
  auto y_of = [&](double v) { return T + ph * (hi - v) / (hi - lo); };
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  auto xml = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out += c;
    }
    return out;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << L << "\" y=\"24\" font-size=\"15\">" << xml(title) << "</text>\n";
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (lo < 0.0 && hi > 0.0)
    svg << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << fixed(y_of(0.0), 2) << "\" y2=\""
        << fixed(y_of(0.0), 2) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (double v : {lo, 0.0, hi}) {
    if (v < lo || v > hi) continue;
    svg << "<text x=\"" << L - 6 << "\" y=\"" << fixed(y_of(v) + 4, 2) << "\" text-anchor=\"end\">"
        << fixed(v, 4) << "</text>\n";
  }
  if (n > 0) {
    svg << "<text x=\"" << L << "\" y=\"" << T + ph + 18 << "\">" << t.rows.front()[date_col] << "</text>\n";
    svg << "<text x=\"" << L + pw << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"end\">"
        << t.rows.back()[date_col] << "</text>\n";
  }
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">date</text>\n";
  svg << "<text transform=\"translate(18 " << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
         "cumulative c_t</text>\n";
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const char* color = colors[k % std::size(colors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i)
      svg << (i ? " " : "") << fixed(x_of(i), 2) << ',' << fixed(y_of(series[k][i]), 2);
    svg << "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(k);
    svg << "<line x1=\"" << L + pw + 15 << "\" x2=\"" << L + pw + 40 << "\" y1=\"" << ly - 4 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly << "\">" << xml(t.header[cols[k]]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cbeta::cli

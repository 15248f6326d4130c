#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cbeta/pipeline.hpp"

namespace cbeta::cli {

std::string sha256_hex(std::string_view bytes);
// Throws Error(Io) if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

// Creates parent directories as needed. Throws Error(Io).
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// One row per spec; anomaly columns for characteristics a spec does not
// test are left empty.
std::string comparison_csv(const ComparisonReport& report);
std::string pairs_csv(const ComparisonReport& report);

// Rendered only from the two CSV documents above.
std::string comparison_markdown(std::string_view comparison, std::string_view pairs);

// date,c0,c_<anomaly>...,adj_r2 in the spec's anomaly order.
std::string ct_csv(const ModelResult& result);
// coin_id,param_name,estimate,stderr including the intercept row "alpha".
std::string first_pass_params_csv(const ModelResult& result);
// coin_id,date,risk_adjusted
std::string risk_adjusted_csv(const ModelResult& result);
// kind,id,reason for dropped coins and dates.
std::string drops_csv(const ModelResult& result);

// Line chart of the running sum of every c_<anomaly> column of a ct CSV.
std::string cumulative_svg(std::string_view ct, std::string_view title);

}  // namespace cbeta::cli

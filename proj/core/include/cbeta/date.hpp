#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace cbeta {

// Calendar day in UTC. Crypto markets trade every day, so all window
// arithmetic in this library is in calendar days.
using Date = std::chrono::sys_days;
using Days = std::chrono::days;

// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws
// std::invalid_argument on anything else, including impossible days.
Date parse_date(std::string_view text);

// Non-throwing variant; returns false on malformed input.
bool try_parse_date(std::string_view text, Date& out);

std::string format_date(Date d);

inline long days_between(Date from, Date to) {
  return static_cast<long>((to - from).count());
}

}  // namespace cbeta

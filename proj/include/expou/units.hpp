#pragma once

#include <cmath>

// Everything inside the library is in daily units (days, day^-1, day^-1/2).
// Conversions happen once, at the configuration boundary.
namespace expou::units {

inline constexpr double kTradingDaysPerYear = 252.0;

inline double annual_vol_to_daily(double vol_annual) { return vol_annual / std::sqrt(kTradingDaysPerYear); }
inline double daily_vol_to_annual(double vol_daily) { return vol_daily * std::sqrt(kTradingDaysPerYear); }
inline double annual_rate_to_daily(double rate_annual) { return rate_annual / kTradingDaysPerYear; }
inline double daily_rate_to_annual(double rate_daily) { return rate_daily * kTradingDaysPerYear; }

}  // namespace expou::units

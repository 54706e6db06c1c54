#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "expou/pricer.hpp"

namespace expou {

inline constexpr double kMinImpliedVol = 1e-6;  // day^-1/2
inline constexpr double kMaxImpliedVol = 10.0;  // day^-1/2
inline constexpr double kImpliedVolPriceTol = 1e-12;
inline constexpr int kImpliedVolMaxIter = 100;

/// Black-Scholes volatility (day^-1/2) reproducing `price`. Safeguarded Newton on
/// [kMinImpliedVol, kMaxImpliedVol]: each Newton step that leaves the current bracket
/// is replaced by bisection. Throws InversionError outside the no-arbitrage band.
double implied_vol(double price, const OptionSpec& spec);

struct SmilePoint {
    double moneyness;
    std::optional<double> implied_vol_annual;  // empty when inversion failed
    double price;
};

/// Prices one contract per moneyness point; spot, maturity and rate come from the template,
/// strike = spot / moneyness.
using CallPricer = std::function<double(const OptionSpec&)>;

std::vector<SmilePoint> smile_curve(const CallPricer& pricer, std::span<const double> moneyness_grid,
                                    const OptionSpec& spec_template);

/// Smile of the expansion price for a fixed coefficient set.
std::vector<SmilePoint> smile_curve(const MartingaleParams& mp, const ExpansionCoeffs& coeffs,
                                    std::span<const double> moneyness_grid, const OptionSpec& spec_template);

}  // namespace expou

#pragma once

#include "expou/risk_neutral.hpp"

namespace expou {

/// European contract and market state. Maturity in days, rate per day.
struct OptionSpec {
    double spot;
    double strike;
    double maturity;
    double rate = 0.0;

    OptionSpec(double spot_, double strike_, double maturity_, double rate_ = 0.0);

    double moneyness() const noexcept { return spot / strike; }
    double discounted_strike() const noexcept;
};

/// Standard normal CDF, computed as erfc(-x/sqrt(2))/2 through std::erfc
/// (double precision, about 1e-16 relative in both tails).
double norm_cdf(double x);
double norm_pdf(double x);

double bs_call(const OptionSpec& spec, double vol);
double bs_put(const OptionSpec& spec, double vol);
double bs_delta(const OptionSpec& spec, double vol);
/// dC/dvol, with vol in day^-1/2.
double bs_vega(const OptionSpec& spec, double vol);

/// Payoff integrals of the Hermite-corrected density terms (second, third and fourth
/// order), evaluated in closed form with volatility m_bar.
struct CallComponents {
    double c0;
    double c1;
    double c2;
};

CallComponents call_components(const OptionSpec& spec, double m_bar);

struct PriceBreakdown {
    double bs = 0.0;
    double c0_term = 0.0;  // theta * C0
    double c1_term = 0.0;  // rho * sigma3 * C1
    double c2_term = 0.0;  // (kappa + theta^2/2) * C2
    double total = 0.0;
    bool negative_price = false;
    RegimeWarning regime{};

    bool warning() const noexcept { return negative_price || static_cast<bool>(regime); }
};

/// Expansion call price assembled in the compact single-formula form.
PriceBreakdown expou_call(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs);

/// Same price assembled as C_BS + theta C0 + rho sigma3 C1 + (kappa + theta^2/2) C2.
/// Kept as an independent code path for cross-checking expou_call.
PriceBreakdown expou_call_components(const OptionSpec& spec, const MartingaleParams& mp,
                                     const ExpansionCoeffs& coeffs);

/// Put from put-call parity.
double expou_put(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs);

/// dC/dS of expou_call in closed form.
double delta(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs);

}  // namespace expou

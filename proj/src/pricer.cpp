#include "expou/pricer.hpp"

#include <cmath>
#include <numbers>

#include "expou/errors.hpp"

namespace expou {

namespace {

struct Moneyness {
    double d1;
    double d2;
    double total_sd;  // sqrt(vol^2 T)
};

Moneyness moneyness_terms(const OptionSpec& spec, double vol) {
    const double sd = vol * std::sqrt(spec.maturity);
    const double log_fwd = std::log(spec.spot / spec.strike) + spec.rate * spec.maturity;
    const double d1 = log_fwd / sd + 0.5 * sd;
    return {d1, d1 - sd, sd};
}

void require_vol(double vol, const char* who) {
    if (!(vol > 0.0)) throw DomainError(std::string(who) + ": volatility must be positive");
}

}  // namespace

OptionSpec::OptionSpec(double spot_, double strike_, double maturity_, double rate_)
    : spot(spot_), strike(strike_), maturity(maturity_), rate(rate_) {
    if (!(spot_ > 0.0)) throw ParameterError("OptionSpec: spot must be positive");
    if (!(strike_ > 0.0)) throw ParameterError("OptionSpec: strike must be positive");
    if (!(maturity_ > 0.0)) throw ParameterError("OptionSpec: maturity must be positive");
    if (!std::isfinite(rate_)) throw ParameterError("OptionSpec: rate must be finite");
}

double OptionSpec::discounted_strike() const noexcept { return strike * std::exp(-rate * maturity); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double bs_call(const OptionSpec& spec, double vol) {
    require_vol(vol, "bs_call");
    const auto m = moneyness_terms(spec, vol);
    return spec.spot * norm_cdf(m.d1) - spec.discounted_strike() * norm_cdf(m.d2);
}

double bs_put(const OptionSpec& spec, double vol) {
    require_vol(vol, "bs_put");
    const auto m = moneyness_terms(spec, vol);
    return spec.discounted_strike() * norm_cdf(-m.d2) - spec.spot * norm_cdf(-m.d1);
}

double bs_delta(const OptionSpec& spec, double vol) {
    require_vol(vol, "bs_delta");
    return norm_cdf(moneyness_terms(spec, vol).d1);
}

double bs_vega(const OptionSpec& spec, double vol) {
    require_vol(vol, "bs_vega");
    const auto m = moneyness_terms(spec, vol);
    return spec.spot * norm_pdf(m.d1) * std::sqrt(spec.maturity);
}

CallComponents call_components(const OptionSpec& spec, double m_bar) {
    require_vol(m_bar, "call_components");
    const auto m = moneyness_terms(spec, m_bar);
    const double s = m.total_sd;
    const double h = m.d2 / std::numbers::sqrt2;
    const double h1 = hermite_poly(1, h);
    const double h2 = hermite_poly(2, h);
    const double forward_part = spec.spot * norm_cdf(m.d1);
    const double kernel = spec.discounted_strike() / s * norm_pdf(m.d2);

    CallComponents c;
    c.c0 = forward_part + kernel;
    c.c1 = forward_part - kernel * (h1 / (std::numbers::sqrt2 * s) - 1.0);
    c.c2 = forward_part + kernel * (h2 / (2.0 * s * s) - h1 / (std::numbers::sqrt2 * s) + 1.0);
    return c;
}

PriceBreakdown expou_call(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs) {
    const auto m = moneyness_terms(spec, mp.m_bar);
    const double s = m.total_sd;
    const double h = m.d2 / std::numbers::sqrt2;
    const double skew = mp.rho * coeffs.sigma3;
    const double quartic = coeffs.quartic_weight();
    const double all = coeffs.theta + skew + quartic;

    PriceBreakdown out;
    out.bs = spec.spot * norm_cdf(m.d1) - spec.discounted_strike() * norm_cdf(m.d2);
    const double bracket = quartic / (2.0 * s * s) * hermite_poly(2, h) -
                           (skew + quartic) / (std::numbers::sqrt2 * s) * hermite_poly(1, h) + all;
    out.total = out.bs + all * spec.spot * norm_cdf(m.d1) +
                spec.discounted_strike() / s * norm_pdf(m.d2) * bracket;

    // Term split for reporting; the total above does not depend on it.
    const auto comp = call_components(spec, mp.m_bar);
    out.c0_term = coeffs.theta * comp.c0;
    out.c1_term = skew * comp.c1;
    out.c2_term = quartic * comp.c2;
    out.negative_price = out.total < 0.0;
    out.regime = coeffs.regime;
    return out;
}

PriceBreakdown expou_call_components(const OptionSpec& spec, const MartingaleParams& mp,
                                     const ExpansionCoeffs& coeffs) {
    const auto comp = call_components(spec, mp.m_bar);
    PriceBreakdown out;
    out.bs = bs_call(spec, mp.m_bar);
    out.c0_term = coeffs.theta * comp.c0;
    out.c1_term = mp.rho * coeffs.sigma3 * comp.c1;
    out.c2_term = coeffs.quartic_weight() * comp.c2;
    out.total = out.bs + out.c0_term + out.c1_term + out.c2_term;
    out.negative_price = out.total < 0.0;
    out.regime = coeffs.regime;
    return out;
}

double expou_put(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs) {
    return expou_call(spec, mp, coeffs).total + spec.discounted_strike() - spec.spot;
}

double delta(const OptionSpec& spec, const MartingaleParams& mp, const ExpansionCoeffs& coeffs) {
    const auto m = moneyness_terms(spec, mp.m_bar);
    const double s = m.total_sd;
    const double two_var = 2.0 * s * s;
    const double h = m.d2 / std::numbers::sqrt2;
    const double skew = mp.rho * coeffs.sigma3;
    const double quartic = coeffs.quartic_weight();
    const double all = coeffs.theta + skew + quartic;

    const double bracket = -quartic / std::pow(two_var, 1.5) * hermite_poly(3, h) +
                           (skew + quartic) / two_var * hermite_poly(2, h) -
                           all / std::sqrt(two_var) * hermite_poly(1, h) + all;
    return (1.0 + all) * norm_cdf(m.d1) +
           spec.discounted_strike() / (spec.spot * s) * norm_pdf(m.d2) * bracket;
}

}  // namespace expou

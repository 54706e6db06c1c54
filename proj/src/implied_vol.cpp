#include "expou/implied_vol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "expou/errors.hpp"
#include "expou/units.hpp"

namespace expou {

double implied_vol(double price, const OptionSpec& spec) {
    const double lower = std::max(spec.spot - spec.discounted_strike(), 0.0);
    if (!(price > lower)) {
        throw InversionError(InversionError::Bound::Lower,
                             "implied_vol: price " + std::to_string(price) +
                                 " is not above the intrinsic lower bound " + std::to_string(lower));
    }
    if (!(price < spec.spot)) {
        throw InversionError(InversionError::Bound::Upper, "implied_vol: price " + std::to_string(price) +
                                                               " is not below the spot upper bound " +
                                                               std::to_string(spec.spot));
    }

    double lo = kMinImpliedVol;
    double hi = kMaxImpliedVol;
    const double f_lo = bs_call(spec, lo) - price;
    const double f_hi = bs_call(spec, hi) - price;
    if (f_hi < 0.0) {
        throw InversionError(InversionError::Bound::Upper,
                             "implied_vol: price requires volatility above " + std::to_string(kMaxImpliedVol) +
                                 " per sqrt(day)");
    }
    if (f_lo > 0.0) {
        throw InversionError(InversionError::Bound::Lower,
                             "implied_vol: price requires volatility below " + std::to_string(kMinImpliedVol) +
                                 " per sqrt(day)");
    }

    // Start from the at-the-money approximation C ~ 0.4 S vol sqrt(T), clipped into the bracket.
    double vol = std::clamp(price / (0.4 * spec.spot * std::sqrt(spec.maturity)), lo, hi);
    for (int iter = 0; iter < kImpliedVolMaxIter; ++iter) {
        const double diff = bs_call(spec, vol) - price;
        const double vega = bs_vega(spec, vol);
        if (std::abs(diff) <= kImpliedVolPriceTol * spec.spot) {
            // one more Newton step: the price tolerance alone leaves vol error of tol/vega
            const double polished = vega > 0.0 ? vol - diff / vega : vol;
            return polished > lo && polished < hi ? polished : vol;
        }
        if (diff > 0.0) hi = vol; else lo = vol;

        double next = vega > 0.0 ? vol - diff / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return next;
        vol = next;
    }
    throw InversionError(InversionError::Bound::NoConvergence, "implied_vol: no convergence within iteration cap");
}

std::vector<SmilePoint> smile_curve(const CallPricer& pricer, std::span<const double> moneyness_grid,
                                    const OptionSpec& spec_template) {
    std::vector<SmilePoint> out;
    out.reserve(moneyness_grid.size());
    for (double mny : moneyness_grid) {
        if (!(mny > 0.0)) throw DomainError("smile_curve: moneyness grid values must be positive");
        const OptionSpec spec(spec_template.spot, spec_template.spot / mny, spec_template.maturity,
                              spec_template.rate);
        SmilePoint point{mny, std::nullopt, pricer(spec)};
        try {
            point.implied_vol_annual = units::daily_vol_to_annual(implied_vol(point.price, spec));
        } catch (const InversionError&) {
        }
        out.push_back(point);
    }
    return out;
}

std::vector<SmilePoint> smile_curve(const MartingaleParams& mp, const ExpansionCoeffs& coeffs,
                                    std::span<const double> moneyness_grid, const OptionSpec& spec_template) {
    return smile_curve([&](const OptionSpec& spec) { return expou_call(spec, mp, coeffs).total; }, moneyness_grid,
                       spec_template);
}

}  // namespace expou

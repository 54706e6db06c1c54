#include <doctest.h>

#include "approx.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

#include "expou/errors.hpp"
#include "expou/pricer.hpp"

using namespace expou;
using boost::math::quadrature::gauss_kronrod;

namespace {

const ModelParams ref = ModelParams::reference();
const RiskAversion ref_ra{1e-3, 1e-3};

MartingaleParams at_z0(const ModelParams& p, const RiskAversion& ra, double z0) {
    const double shift = p.k() * ra.lambda0 / (p.alpha() + p.k() * ra.lambda1);
    return to_martingale(p, ra, z0 - shift);
}

double integrate(auto f, double lo, double hi) {
    return gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

// e^{-rT} * integral of the call payoff against Gaussian * H_n(a) / (2 v)^{n/2}, the
// density term each component multiplies.
double payoff_integral(const OptionSpec& s, double m_bar, int n) {
    const double v = m_bar * m_bar * s.maturity;
    const double mu = s.rate * s.maturity - 0.5 * v;
    const double sd = std::sqrt(v);
    const double x_k = std::log(s.strike / s.spot);
    auto f = [&](double x) {
        const double a = (x - mu) / std::sqrt(2.0 * v);
        const double g = std::exp(-0.5 * (x - mu) * (x - mu) / v) / std::sqrt(2.0 * std::numbers::pi * v);
        return (s.spot * std::exp(x) - s.strike) * g * hermite_poly(n, a) / std::pow(2.0 * v, 0.5 * n);
    };
    const double lo = std::max(x_k, mu - 14.0 * sd);
    const double hi = mu + 14.0 * sd;
    if (lo >= hi) return 0.0;
    return std::exp(-s.rate * s.maturity) * integrate(f, lo, hi);
}

}  // namespace

TEST_CASE("normal distribution") {
    CHECK(norm_cdf(0.0) == 0.5);
    for (double d = -8.0; d <= 8.0; d += 0.37) CHECK(std::abs(norm_cdf(-d) - (1.0 - norm_cdf(d))) < 1e-15);
    const double quad =
        0.5 + integrate([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, 0.0, 1.96);
    CHECK(norm_cdf(1.96) == rel(quad, 1e-14));
    CHECK(norm_cdf(1.96) == rel(0.9750021, 1e-7));
    const double h = 1e-5;
    for (double d : {-2.0, 0.0, 0.7}) {
        CHECK(std::abs((norm_cdf(d + h) - norm_cdf(d - h)) / (2 * h) - norm_pdf(d)) < 1e-9);
    }
}

TEST_CASE("Black-Scholes") {
    const OptionSpec atm(100.0, 100.0, 20.0);
    const double c = bs_call(atm, 0.01);
    CHECK(c == rel(100.0 * (2.0 * norm_cdf(0.5 * 0.01 * std::sqrt(20.0)) - 1.0), 1e-13));
    CHECK(c == rel(1.7838, 1e-4));

    // Quadrature oracle over the lognormal.
    const double v = 0.01 * 0.01 * 20.0;
    const double quad = integrate(
        [&](double x) {
            return (100.0 * std::exp(x) - 100.0) * std::exp(-0.5 * (x + 0.5 * v) * (x + 0.5 * v) / v) /
                   std::sqrt(2.0 * std::numbers::pi * v);
        },
        0.0, 15.0 * std::sqrt(v));
    CHECK(c == rel(quad, 1e-12));

    CHECK(bs_call(OptionSpec(100.0, 1e-9, 20.0), 0.01) == rel(100.0, 1e-10));
    CHECK(bs_call(OptionSpec(100.0, 90.0, 1e-10, 1e-4), 0.01) == rel(10.0, 1e-8));
    CHECK(bs_call(OptionSpec(100.0, 110.0, 1e-10), 0.01) < 1e-100);

    const OptionSpec s(100.0, 95.0, 30.0, 2e-4);
    for (double vol : {0.005, 0.01, 0.03}) {
        const double call = bs_call(s, vol);
        CHECK(call > std::max(0.0, s.spot - s.discounted_strike()));
        CHECK(call < s.spot);
        CHECK(std::abs(call - bs_put(s, vol) - (s.spot - s.discounted_strike())) < 1e-12);
    }
    CHECK_THROWS_AS(bs_call(s, 0.0), DomainError);
    CHECK_THROWS_AS(OptionSpec(0.0, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(OptionSpec(1.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("component closed forms against payoff integrals") {
    for (double mny : {0.8, 0.95, 1.0, 1.07, 1.2}) {
        for (double t : {5.0, 20.0, 60.0}) {
            const OptionSpec s(100.0, 100.0 / mny, t, 1e-4);
            const double m_bar = 0.0098;
            const auto comp = call_components(s, m_bar);
            const double i2 = payoff_integral(s, m_bar, 2);
            const double i3 = payoff_integral(s, m_bar, 3);
            const double i4 = payoff_integral(s, m_bar, 4);
            CHECK(std::abs(comp.c0 - i2) < 1e-8 * std::max(1.0, std::abs(i2)));
            CHECK(std::abs(comp.c1 - i3) < 1e-8 * std::max(1.0, std::abs(i3)));
            CHECK(std::abs(comp.c2 - i4) < 1e-8 * std::max(1.0, std::abs(i4)));
        }
    }
    const auto far = call_components(OptionSpec(1.0, 1e4, 20.0), 0.01);
    CHECK(std::abs(far.c0) < 1e-100);
    CHECK(std::abs(far.c1) < 1e-100);
    CHECK(std::abs(far.c2) < 1e-100);
}

TEST_CASE("expansion call") {
    const auto mp = at_z0(ref, ref_ra, 0.0);
    const ExpansionCoeffs none{};
    for (double mny = 0.8; mny <= 1.2; mny += 0.01) {
        const OptionSpec s(100.0, 100.0 / mny, 20.0, 1e-4);
        CHECK(expou_call(s, mp, none).total == bs_call(s, mp.m_bar));
        CHECK(expou_call_components(s, mp, none).total == bs_call(s, mp.m_bar));
        const double sd = mp.m_bar * std::sqrt(20.0);
        const double d1 = std::log(s.spot / s.discounted_strike()) / sd + 0.5 * sd;
        CHECK(std::abs(delta(s, mp, none) - norm_cdf(d1)) < 1e-14);
        CHECK(std::abs(expou_put(s, mp, none) - bs_put(s, mp.m_bar)) < 1e-12 * s.spot);
    }

    for (double z0 : {-0.5, 0.0, 0.5}) {
        const auto mz = at_z0(ref, ref_ra, z0);
        for (double t : {5.0, 20.0, 60.0}) {
            const auto c = expansion_coeffs(mz, t, 1e-4);
            for (double mny = 0.8; mny <= 1.2001; mny += 0.02) {
                const OptionSpec s(100.0, 100.0 / mny, t, 1e-4);
                const auto compact = expou_call(s, mz, c);
                const auto split = expou_call_components(s, mz, c);
                CHECK(std::abs(compact.total - split.total) < 1e-12 * s.spot);
                CHECK(std::abs(compact.total + s.discounted_strike() - expou_put(s, mz, c) - s.spot) < 1e-12 * s.spot);

                // Flipping rho only flips the skew term.
                const ModelParams flipped(ref.m(), ref.alpha(), ref.k(), -ref.rho());
                const auto mf = at_z0(flipped, ref_ra, z0);
                const auto cf = expansion_coeffs(mf, t, 1e-4);
                const double c1 = call_components(s, mz.m_bar).c1;
                CHECK(std::abs(compact.total - expou_call(s, mf, cf).total - 2.0 * mz.rho * c.sigma3 * c1) < 1e-12 * s.spot);
            }
        }
    }

    // At-the-money forward put equals the call.
    const auto c = expansion_coeffs(mp, 20.0, 2e-4);
    const OptionSpec fwd(100.0, 100.0 * std::exp(2e-4 * 20.0), 20.0, 2e-4);
    CHECK(expou_put(fwd, mp, c) == rel(expou_call(fwd, mp, c).total, 1e-13));
}

TEST_CASE("price shape at the reference set") {
    const auto mp = at_z0(ref, ref_ra, 0.0);
    const auto c = expansion_coeffs(mp, 20.0, 0.0);
    for (double mny : {0.95, 0.97, 0.99}) {
        const auto p = expou_call(OptionSpec(100.0, 100.0 / mny, 20.0), mp, c);
        CHECK(p.total - p.bs < 0.0);
    }
    for (double mny : {1.03, 1.05}) {
        const auto p = expou_call(OptionSpec(100.0, 100.0 / mny, 20.0), mp, c);
        CHECK(p.total - p.bs > 0.0);
    }
    double prev = -1.0;
    for (double spot = 80.0; spot <= 120.0; spot += 0.25) {
        const double v = expou_call(OptionSpec(spot, 100.0, 20.0), mp, c).total;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("delta") {
    for (double z0 : {-0.4, 0.0, 0.6}) {
        const auto mp = at_z0(ref, ref_ra, z0);
        const auto c = expansion_coeffs(mp, 20.0, 1e-4);
        for (double mny = 0.8; mny <= 1.2001; mny += 0.01) {
            const double strike = 100.0 / mny;
            const double h = 100.0 * 1e-5;
            const double up = expou_call(OptionSpec(100.0 + h, strike, 20.0, 1e-4), mp, c).total;
            const double dn = expou_call(OptionSpec(100.0 - h, strike, 20.0, 1e-4), mp, c).total;
            CHECK(std::abs(delta(OptionSpec(100.0, strike, 20.0, 1e-4), mp, c) - (up - dn) / (2.0 * h)) < 1e-7);
        }
        CHECK(std::abs(delta(OptionSpec(1.0, 1e4, 20.0), mp, c)) < 1e-100);
    }
}

TEST_CASE("negative prices are flagged, not clamped") {
    const auto mp = at_z0(ref, ref_ra, 0.0);
    ExpansionCoeffs c = expansion_coeffs(mp, 20.0, 0.0);
    c.sigma3 = 5e-3;
    const OptionSpec deep(100.0, 125.0, 20.0);
    const auto p = expou_call(deep, mp, c);
    CHECK(p.total < 0.0);
    CHECK(p.negative_price);
    CHECK(p.warning());
    CHECK(std::abs(p.total + deep.discounted_strike() - expou_put(deep, mp, c) - deep.spot) < 1e-12);
}

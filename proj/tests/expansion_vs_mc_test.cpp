#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

#include "expou/monte_carlo.hpp"
#include "expou/pricer.hpp"

using namespace expou;
using boost::math::quadrature::gauss_kronrod;

namespace {

const RiskAversion ref_ra{1e-3, 1e-3};

MartingaleParams at_z0(const ModelParams& p, double z0) {
    const double shift = p.k() * ref_ra.lambda0 / (p.alpha() + p.k() * ref_ra.lambda1);
    return to_martingale(p, ref_ra, z0 - shift);
}

SimConfig ref_config(std::size_t paths) {
    SimConfig c;
    c.n_paths = paths;
    c.dt = 0.1;
    c.n_steps = 200;
    c.measure = Measure::Martingale;
    return c;
}

}  // namespace

// Both checks below compare the truncated expansion with the exact dynamics. They hold when
// the neglected higher orders are below MC resolution; at the reference set they are not.

TEST_CASE("return density goodness of fit") {
    const auto mp = at_z0(ModelParams::reference(), 0.0);
    const auto coeffs = expansion_coeffs(mp, 20.0, 0.0);
    const double sd = mp.m_bar * std::sqrt(20.0);
    const double lo = coeffs.mu - 6.0 * sd;
    const double hi = coeffs.mu + 6.0 * sd;
    const auto h = mc_return_density(mp, ref_config(200000), 0.0, 0.0, lo, hi, 60);

    std::vector<double> expected;
    for (std::size_t b = 0; b < h.n_bins(); ++b) {
        expected.push_back(gauss_kronrod<double, 31>::integrate(
            [&](double x) { return return_density(coeffs, mp, x); }, h.edges[b], h.edges[b + 1], 5, 1e-12));
    }
    const auto chi = chi_square_test(h, expected);
    MESSAGE("chi2 = " << chi.statistic << " dof = " << chi.dof << " p = " << chi.p_value);
    CHECK(chi.p_value > 0.01);
}

TEST_CASE("call prices against simulation") {
    const auto mp = at_z0(ModelParams::reference(), 0.0);
    const auto coeffs = expansion_coeffs(mp, 20.0, 0.0);
    const std::vector<double> mny{0.95, 1.0, 1.05};
    std::vector<double> strikes;
    for (double x : mny) strikes.push_back(100.0 / x);
    const auto mc = mc_call_prices(mp, ref_config(200000), 100.0, strikes, 20.0, 0.0, 0.0);
    for (std::size_t i = 0; i < mny.size(); ++i) {
        const double analytic = expou_call(OptionSpec(100.0, strikes[i], 20.0), mp, coeffs).total;
        MESSAGE("S/K = " << mny[i] << " mc = " << mc[i].value << " +- " << mc[i].std_error << " expansion = " << analytic);
        CHECK(std::abs(analytic - mc[i].value) <= 3.0 * mc[i].std_error + 2e-4 * 100.0);
    }
}

TEST_CASE("simulated at-the-money price sits inside the variance bracket") {
    // Mean instantaneous variance grows like exp(2 Var z(s)) from z0 = 0. The at-the-money
    // price is concave in variance, so it lands between the two Black-Scholes values.
    const auto mp = at_z0(ModelParams::reference(), 0.0);
    const double t = 20.0;
    const double growth = gauss_kronrod<double, 31>::integrate(
                              [&](double s) {
                                  return std::exp(mp.k * mp.k * -std::expm1(-2.0 * mp.alpha_bar * s) / mp.alpha_bar);
                              },
                              0.0, t, 5, 1e-12) /
                          t;
    const OptionSpec atm(100.0, 100.0, t);
    const std::vector<double> strikes{100.0};
    const auto mc = mc_call_prices(mp, ref_config(100000), 100.0, strikes, t, 0.0, 0.0);
    MESSAGE("mean variance growth " << growth << " mc = " << mc[0].value);
    CHECK(growth > 1.2);
    CHECK(mc[0].value > bs_call(atm, mp.m_bar) + 3.0 * mc[0].std_error);
    CHECK(mc[0].value < bs_call(atm, mp.m_bar * std::sqrt(growth)) - 3.0 * mc[0].std_error);
}

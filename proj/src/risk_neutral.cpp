#include "expou/risk_neutral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "expou/errors.hpp"

namespace expou {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

// -expm1(-x) = 1 - e^{-x}, accurate for small x.
double one_minus_exp(double x) { return -std::expm1(-x); }
cplx one_minus_exp(cplx x) {
    // 1 - e^{-x} for complex x; expm1 on the real part keeps precision when |x| is small.
    const double re = x.real();
    const double im = x.imag();
    const double e = std::exp(-re);
    // 1 - e^{-re}(cos im - i sin im)
    const double cos_m1 = -2.0 * std::sin(0.5 * im) * std::sin(0.5 * im);  // cos(im) - 1
    const double real = -std::expm1(-re) - e * cos_m1;
    const double imag = e * std::sin(im);
    return {real, imag};
}

RegimeWarning assess_regime(const MartingaleParams& mp, const ExpansionCoeffs& c) {
    RegimeWarning w;
    w.small_lambda = mp.lambda < kMinTrustedLambda;
    const double two_var = 2.0 * mp.m_bar * mp.m_bar * c.maturity;
    if (two_var > 0.0) {
        const double second = std::abs(c.theta) / two_var;
        const double third = std::abs(mp.rho * c.sigma3) / std::pow(two_var, 1.5);
        const double fourth = std::abs(c.quartic_weight()) / (two_var * two_var);
        w.large_corrections = std::max({second, third, fourth}) > kMaxTrustedCorrection;
    }
    return w;
}

}  // namespace

MartingaleParams to_martingale(const ModelParams& p, const RiskAversion& ra, double y0) {
    const double alpha_bar = p.alpha() + p.k() * ra.lambda1;
    if (!(alpha_bar > 0.0)) {
        throw ParameterError("risk aversion destabilizes reversion: alpha + k*lambda1 must be positive");
    }
    const double shift = p.k() * ra.lambda0 / alpha_bar;
    MartingaleParams mp{};
    mp.m_bar = p.m() * std::exp(-shift);
    mp.alpha_bar = alpha_bar;
    mp.k = p.k();
    mp.rho = p.rho();
    mp.lambda = p.k() / mp.m_bar;
    mp.nu = alpha_bar / (p.k() * p.k());
    mp.z0 = y0 + shift;
    return mp;
}

ExpansionCoeffs expansion_coeffs(const MartingaleParams& mp, double t, double r) {
    if (!(t >= 0.0)) throw DomainError("expansion_coeffs: t must be non-negative");
    const double x = mp.alpha_bar * t;
    const double a = one_minus_exp(x);         // 1 - e^{-x}
    const double a2 = one_minus_exp(2.0 * x);  // 1 - e^{-2x}
    const double b = x * std::exp(-x);
    const double l2 = mp.lambda * mp.lambda;
    const double l3 = l2 * mp.lambda;
    const double l4 = l2 * l2;
    const double nu = mp.nu;

    ExpansionCoeffs c;
    c.maturity = t;
    c.rate = r;
    c.mu = r * t - 0.5 * mp.m_bar * mp.m_bar * t;
    c.theta = mp.z0 / (l2 * nu) * a;
    c.sigma3 = ((x - a) - mp.z0 * (b - a)) / (l3 * nu * nu);
    // The rho^2 bracket carries 1/(lambda^4 nu^3): first-order expansion of the cubic
    // term in gamma - nu (see README, "Expansion coefficients").
    c.kappa = (x + 0.5 * a2 - 2.0 * a) / (2.0 * l4 * nu * nu * nu) +
              mp.rho * mp.rho * (x - 2.0 * a + b) / (l4 * nu * nu * nu);
    c.regime = assess_regime(mp, c);
    return c;
}

ExpansionCoeffs expansion_coeffs_averaged(const MartingaleParams& mp, double t, double r) {
    if (!(t >= 0.0)) throw DomainError("expansion_coeffs_averaged: t must be non-negative");
    const double x = mp.alpha_bar * t;
    const double a = one_minus_exp(x);
    const double b = x * std::exp(-x);
    const double l2 = mp.lambda * mp.lambda;
    const double l4 = l2 * l2;
    const double nu3 = mp.nu * mp.nu * mp.nu;

    ExpansionCoeffs c;
    c.maturity = t;
    c.rate = r;
    c.mu = r * t - 0.5 * mp.m_bar * mp.m_bar * t;
    c.theta = 0.0;
    c.sigma3 = (x - a) / (l2 * mp.lambda * mp.nu * mp.nu);
    c.kappa = (x - a) / (2.0 * l4 * nu3) + mp.rho * mp.rho * (x - 2.0 * a + b) / (l4 * nu3);
    c.regime = assess_regime(mp, c);
    return c;
}

std::complex<double> char_exponent_full(const MartingaleParams& mp, double omega1, double t_prime, double v0,
                                        double r) {
    if (!(t_prime >= 0.0)) throw DomainError("char_fn_full: t' must be non-negative");
    const cplx gamma = mp.nu + I * mp.rho * omega1;
    const cplx e1 = one_minus_exp(gamma * t_prime);
    const cplx e2 = one_minus_exp(2.0 * gamma * t_prime);
    const double w2 = omega1 * omega1;
    const double drift = r / (mp.m_bar * mp.m_bar) - 0.5;

    cplx c = drift * I * omega1 / mp.lambda * t_prime;
    c += 0.5 * w2 * t_prime;
    c += v0 * w2 / (mp.lambda * gamma) * e1;
    c -= I * mp.rho * w2 * omega1 / gamma * (t_prime - e1 / gamma);
    c -= w2 * w2 / (2.0 * gamma * gamma) * (t_prime + e2 / (2.0 * gamma) - 2.0 * e1 / gamma);
    return c;
}

std::complex<double> char_fn_full(const MartingaleParams& mp, double omega1, double t_prime, double v0, double r) {
    return std::exp(-char_exponent_full(mp, omega1, t_prime, v0, r));
}

std::complex<double> char_fn_expanded(const MartingaleParams& mp, double omega, double t, double r,
                                      const ExpansionCoeffs& coeffs) {
    if (!(t >= 0.0)) throw DomainError("char_fn_expanded: t must be non-negative");
    const double mu = r * t - 0.5 * mp.m_bar * mp.m_bar * t;
    const double w2 = omega * omega;
    const cplx gauss = std::exp(-(I * omega * mu + 0.5 * mp.m_bar * mp.m_bar * w2 * t));
    const cplx poly = 1.0 - coeffs.theta * w2 + I * mp.rho * coeffs.sigma3 * w2 * omega +
                      coeffs.quartic_weight() * w2 * w2;
    return gauss * poly;
}

double hermite_poly(int n, double x) {
    const double x2 = x * x;
    switch (n) {
        case 0: return 1.0;
        case 1: return 2.0 * x;
        case 2: return 4.0 * x2 - 2.0;
        case 3: return x * (8.0 * x2 - 12.0);
        case 4: return (16.0 * x2 - 48.0) * x2 + 12.0;
        default: throw DomainError("hermite_poly: order must be in 0..4");
    }
}

double return_density(const ExpansionCoeffs& coeffs, double m_bar, double rho, double x, double t) {
    if (!(t > 0.0)) throw DomainError("return_density: t must be positive");
    const double var = m_bar * m_bar * t;
    const double two_var = 2.0 * var;
    const double dev = x - coeffs.mu;
    const double arg = dev / std::sqrt(two_var);
    const double gauss = std::exp(-dev * dev / two_var) / std::sqrt(2.0 * std::numbers::pi * var);
    const double correction = 1.0 + coeffs.theta / two_var * hermite_poly(2, arg) +
                              rho * coeffs.sigma3 / std::pow(two_var, 1.5) * hermite_poly(3, arg) +
                              coeffs.quartic_weight() / (two_var * two_var) * hermite_poly(4, arg);
    return gauss * correction;
}

double return_density(const ExpansionCoeffs& coeffs, const MartingaleParams& mp, double x) {
    return return_density(coeffs, mp.m_bar, mp.rho, x, coeffs.maturity);
}

double return_density_negative_mass(const ExpansionCoeffs& coeffs, const MartingaleParams& mp) {
    const double sd = mp.m_bar * std::sqrt(coeffs.maturity);
    const double lo = coeffs.mu - 12.0 * sd;
    const double hi = coeffs.mu + 12.0 * sd;
    constexpr int n = 4000;  // even, composite Simpson
    const double h = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * std::max(0.0, -return_density(coeffs, mp, lo + i * h));
    }
    return sum * h / 3.0;
}

}  // namespace expou

#pragma once

#include <complex>

#include "expou/model.hpp"

namespace expou {

/// Linear market price of volatility risk, Lambda(Y) = lambda0 + lambda1 * Y.
struct RiskAversion {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
};

/// Risk-neutral parameters after absorbing the linear market price of risk:
///
///   dX = (r - m_bar^2 e^{2Z}/2) dt + m_bar e^Z dW1*
///   dZ = -alpha_bar Z dt + k dW2*
///
/// together with the expansion scales lambda = k / m_bar and nu = alpha_bar / k^2.
struct MartingaleParams {
    double m_bar;
    double alpha_bar;
    double k;
    double rho;
    double lambda;
    double nu;
    double z0;

    double v0() const noexcept { return lambda * z0; }
    /// beta_bar^2 = k^2 / (2 alpha_bar) = 1 / (2 nu).
    double beta_bar2() const noexcept { return 0.5 / nu; }
};

/// Raised when the expansion is being evaluated outside the range where it can be trusted.
struct RegimeWarning {
    bool small_lambda = false;       // lambda < 5
    bool large_corrections = false;  // a Hermite prefactor exceeds 0.5 in magnitude

    explicit operator bool() const noexcept { return small_lambda || large_corrections; }
};

inline constexpr double kMinTrustedLambda = 5.0;
inline constexpr double kMaxTrustedCorrection = 0.5;

/// Time-dependent coefficients of the characteristic-function expansion at one maturity.
/// mu is the drift, theta the variance correction, sigma3 the skew coefficient
/// (it enters multiplied by rho) and kappa the kurtosis coefficient.
struct ExpansionCoeffs {
    double mu = 0.0;
    double theta = 0.0;
    double sigma3 = 0.0;
    double kappa = 0.0;
    double maturity = 0.0;
    double rate = 0.0;
    RegimeWarning regime{};

    /// Weight of the fourth-order term, kappa + theta^2 / 2.
    double quartic_weight() const noexcept { return kappa + 0.5 * theta * theta; }
};

MartingaleParams to_martingale(const ModelParams& p, const RiskAversion& ra, double y0);

/// Coefficients conditional on the initial shifted log-volatility mp.z0.
ExpansionCoeffs expansion_coeffs(const MartingaleParams& mp, double t, double r);

/// Coefficients averaged over z0 drawn from the stationary N(0, beta_bar^2) law.
/// theta is zero and kappa already contains the averaged theta^2/2.
ExpansionCoeffs expansion_coeffs_averaged(const MartingaleParams& mp, double t, double r);

/// Exponent C(omega1, t') of the marginal characteristic function exp(-C) before the
/// large-lambda expansion, in scaled variables (u = lambda x, t' = k^2 t).
/// Convention: phi(omega) = E[exp(-i omega X)], matching char_fn_expanded.
std::complex<double> char_exponent_full(const MartingaleParams& mp, double omega1, double t_prime, double v0,
                                        double r = 0.0);

/// exp(-C(omega1, t')).
std::complex<double> char_fn_full(const MartingaleParams& mp, double omega1, double t_prime, double v0,
                                  double r = 0.0);

/// Fourth-order expansion of the characteristic function of the log-return X(t):
/// exp{-[i omega mu + m_bar^2 omega^2 t / 2]} [1 - theta w^2 + i rho sigma3 w^3 + (kappa + theta^2/2) w^4].
std::complex<double> char_fn_expanded(const MartingaleParams& mp, double omega, double t, double r,
                                      const ExpansionCoeffs& coeffs);

/// Physicists' Hermite polynomials H_0..H_4.
double hermite_poly(int n, double x);

/// Hermite-corrected risk-neutral density of X(t). Not clamped: the far tails can go negative.
double return_density(const ExpansionCoeffs& coeffs, double m_bar, double rho, double x, double t);
double return_density(const ExpansionCoeffs& coeffs, const MartingaleParams& mp, double x);

/// Mass carried by the negative part of return_density over mu +/- 12 standard deviations.
double return_density_negative_mass(const ExpansionCoeffs& coeffs, const MartingaleParams& mp);

}  // namespace expou

#pragma once

// Physical-measure exponential Ornstein-Uhlenbeck stochastic volatility model:
//
//   dS/S = mu dt + m exp(Y) dW1
//   dY   = -alpha Y dt + k dW2,        <dW1 dW2> = rho dt
//
// All quantities are in daily units.

namespace expou {

/// Parameters of the two-dimensional diffusion. Validated on construction,
/// so every operation taking a ModelParams may assume a consistent set.
class ModelParams {
public:
    /// m: normal volatility level (day^-1/2), alpha: reversion rate (day^-1),
    /// k: vol-of-vol (day^-1/2), rho: Wiener correlation in [-1, 1].
    ModelParams(double m, double alpha, double k, double rho);

    double m() const noexcept { return m_; }
    double alpha() const noexcept { return alpha_; }
    double k() const noexcept { return k_; }
    double rho() const noexcept { return rho_; }

    /// beta^2 = k^2 / (2 alpha), stationary variance of Y.
    double beta2() const noexcept { return k_ * k_ / (2.0 * alpha_); }

    /// m = 0.01, alpha = 8e-3, k = 0.11, rho = -0.4 (daily units).
    static ModelParams reference();

private:
    double m_;
    double alpha_;
    double k_;
    double rho_;
};

struct OUState {
    double y = 0.0;  // log-volatility
    double t = 0.0;  // days elapsed

    OUState() = default;
    OUState(double y_, double t_);
};

struct GaussianMoments {
    double mean;
    double variance;
};

/// Conditional mean and variance of Y(t) given Y(0) = y0.
GaussianMoments ou_conditional_moments(const ModelParams& p, double y0, double t);
GaussianMoments ou_conditional_moments(const ModelParams& p, const OUState& start, double t_end);

double stationary_log_vol_variance(const ModelParams& p);

/// Lognormal transition density of sigma(t) = m exp(Y(t)) given sigma(0) = sigma0.
double vol_conditional_pdf(const ModelParams& p, double sigma, double t, double sigma0);

/// Lognormal with log-location ln(m) and log-scale beta.
double vol_stationary_pdf(const ModelParams& p, double sigma);

/// Corr[dR(t)^2, dR(t+tau)^2] in the stationary regime.
double squared_return_autocorr(const ModelParams& p, double tau);
/// Exponential-series form of the same correlation, truncated once terms drop below 1e-16.
double squared_return_autocorr_series(const ModelParams& p, double tau);
/// Leading term of the series, valid for alpha*tau >> 1.
double squared_return_autocorr_long_range(const ModelParams& p, double tau);

/// Leverage correlation E[dR(t) dR(t+tau)^2] / E[dR(t)^2]^2; zero for tau < 0.
double leverage(const ModelParams& p, double tau);
/// Short-range asymptote (alpha*tau << 1): (2 rho k / m) exp(beta^2/2) exp(-k^2 tau).
double leverage_short_range(const ModelParams& p, double tau);
/// Long-range asymptote (alpha*tau >> 1): (2 rho k / m) exp(-3 beta^2/2) exp(-alpha tau).
double leverage_long_range(const ModelParams& p, double tau);

}  // namespace expou

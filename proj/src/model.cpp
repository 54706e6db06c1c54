#include "expou/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "expou/errors.hpp"

namespace expou {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ParameterError(std::string(name) + " must be positive and finite, got " + std::to_string(value));
    }
}

}  // namespace

ModelParams::ModelParams(double m, double alpha, double k, double rho)
    : m_(m), alpha_(alpha), k_(k), rho_(rho) {
    require_positive(m, "m");
    require_positive(alpha, "alpha");
    require_positive(k, "k");
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw ParameterError("rho must lie in [-1, 1], got " + std::to_string(rho));
    }
    const double b2 = beta2();
    if (!(b2 > 0.0) || !std::isfinite(b2)) {
        throw ParameterError("beta^2 = k^2/(2 alpha) must be finite and positive");
    }
}

ModelParams ModelParams::reference() { return ModelParams(1e-2, 8e-3, 0.11, -0.4); }

OUState::OUState(double y_, double t_) : y(y_), t(t_) {
    if (!(t_ >= 0.0)) throw DomainError("OUState: elapsed time must be non-negative");
}

GaussianMoments ou_conditional_moments(const ModelParams& p, double y0, double t) {
    if (!(t >= 0.0)) throw DomainError("ou_conditional_moments: t must be non-negative");
    const double decay = std::exp(-p.alpha() * t);
    // -expm1 keeps the variance accurate for alpha*t << 1.
    const double variance = p.beta2() * -std::expm1(-2.0 * p.alpha() * t);
    return {y0 * decay, variance};
}

GaussianMoments ou_conditional_moments(const ModelParams& p, const OUState& start, double t_end) {
    if (!(t_end >= start.t)) throw DomainError("ou_conditional_moments: t_end precedes the start state");
    return ou_conditional_moments(p, start.y, t_end - start.t);
}

double stationary_log_vol_variance(const ModelParams& p) { return p.beta2(); }

double vol_conditional_pdf(const ModelParams& p, double sigma, double t, double sigma0) {
    if (!(sigma > 0.0)) throw DomainError("vol_conditional_pdf: sigma must be positive");
    if (!(sigma0 > 0.0)) throw DomainError("vol_conditional_pdf: sigma0 must be positive");
    if (!(t > 0.0)) throw DomainError("vol_conditional_pdf: t must be positive");
    const double var = p.beta2() * -std::expm1(-2.0 * p.alpha() * t);
    const double dev = std::log(sigma / p.m()) - std::exp(-p.alpha() * t) * std::log(sigma0 / p.m());
    return std::exp(-dev * dev / (2.0 * var)) / (sigma * std::sqrt(2.0 * std::numbers::pi * var));
}

double vol_stationary_pdf(const ModelParams& p, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("vol_stationary_pdf: sigma must be positive");
    const double var = p.beta2();
    const double dev = std::log(sigma / p.m());
    return std::exp(-dev * dev / (2.0 * var)) / (sigma * std::sqrt(2.0 * std::numbers::pi * var));
}

double squared_return_autocorr(const ModelParams& p, double tau) {
    if (!(tau >= 0.0)) throw DomainError("squared_return_autocorr: tau must be non-negative");
    const double b4 = 4.0 * p.beta2();
    return std::expm1(b4 * std::exp(-p.alpha() * tau)) / (3.0 * std::exp(b4) - 1.0);
}

double squared_return_autocorr_series(const ModelParams& p, double tau) {
    if (!(tau >= 0.0)) throw DomainError("squared_return_autocorr_series: tau must be non-negative");
    const double x = 4.0 * p.beta2() * std::exp(-p.alpha() * tau);
    double term = 1.0;
    double sum = 0.0;
    for (int n = 1; n < 1000; ++n) {
        term *= x / n;
        sum += term;
        if (n > x && term < 1e-16) break;
    }
    return sum / (3.0 * std::exp(4.0 * p.beta2()) - 1.0);
}

double squared_return_autocorr_long_range(const ModelParams& p, double tau) {
    const double b4 = 4.0 * p.beta2();
    return b4 / (3.0 * std::exp(b4) - 1.0) * std::exp(-p.alpha() * tau);
}

double leverage(const ModelParams& p, double tau) {
    if (tau < 0.0) return 0.0;
    const double amplitude = 2.0 * p.rho() * p.k() / p.m();
    const double decay = std::exp(-p.alpha() * tau);
    return amplitude * std::exp(-p.alpha() * tau + 2.0 * p.beta2() * (decay - 0.75));
}

double leverage_short_range(const ModelParams& p, double tau) {
    if (tau < 0.0) return 0.0;
    return 2.0 * p.rho() * p.k() / p.m() * std::exp(0.5 * p.beta2()) * std::exp(-p.k() * p.k() * tau);
}

double leverage_long_range(const ModelParams& p, double tau) {
    if (tau < 0.0) return 0.0;
    return 2.0 * p.rho() * p.k() / p.m() * std::exp(-1.5 * p.beta2()) * std::exp(-p.alpha() * tau);
}

}  // namespace expou

#pragma once

// Seeded Monte Carlo simulation of the expOU system, used as the brute-force oracle
// for the analytic formulas.
//
// Scheme: the log-volatility is advanced with its exact Gaussian transition
// (factor e^{-a dt}, innovation variance k^2/(2a) (1 - e^{-2 a dt})); the log-price is
// advanced by Euler on the log dynamics with the same-step correlated Gaussian pair
// (xi2 = rho xi1 + sqrt(1 - rho^2) xi_perp).
//
// Reproducibility: path i draws from its own std::mt19937_64 seeded through
// std::seed_seq{seed_lo, seed_hi, i_lo, i_hi}; uniforms take the top 53 bits and
// normals come from the Box-Muller transform (both outputs used). Results depend only on
// (seed, config), never on the thread count.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "expou/model.hpp"
#include "expou/pricer.hpp"
#include "expou/risk_neutral.hpp"

namespace expou {

enum class Measure { Physical, Martingale };

struct SimConfig {
    std::size_t n_paths = 10000;
    std::size_t n_steps = 200;
    double dt = 0.1;  // days
    std::uint64_t seed = 20080502;
    Measure measure = Measure::Martingale;
    bool antithetic = false;
    /// Full path storage is only used while n_paths * (n_steps + 1) samples fit here;
    /// larger runs keep terminal values only.
    std::size_t memory_budget_bytes = std::size_t{512} << 20;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned threads = 0;

    double horizon() const noexcept { return static_cast<double>(n_steps) * dt; }
    void validate() const;
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
};

/// Simulated log-price X = ln(S(t)/S(0)) and log-volatility state per path.
class PathEnsemble {
public:
    PathEnsemble(std::size_t n_paths, std::size_t n_steps, double dt, bool full_paths);

    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    double dt() const noexcept { return dt_; }
    /// False when the memory budget forced terminal-only (streaming) storage.
    bool full_paths() const noexcept { return full_; }

    double x(std::size_t path, std::size_t step) const;
    double y(std::size_t path, std::size_t step) const;
    double terminal_x(std::size_t path) const;
    double terminal_y(std::size_t path) const;

private:
    friend class PathWriter;
    std::size_t stride() const noexcept { return full_ ? n_steps_ + 1 : 1; }

    std::size_t n_paths_;
    std::size_t n_steps_;
    double dt_;
    bool full_;
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Physical measure. `y0` empty draws Y(0) from the stationary N(0, beta^2) law per path.
/// `drift` is the physical expected rate of return per day.
PathEnsemble simulate_paths(const ModelParams& p, const SimConfig& cfg, std::optional<double> y0,
                            double drift = 0.0);

/// Martingale measure started from Z(0) = z0, with risk-free rate `rate` per day.
PathEnsemble simulate_paths(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate);

/// CSV export with header `path,step,t_days,x,y`. Requires full path storage.
void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble);

/// Discounted mean payoff of calls sharing one set of martingale paths.
std::vector<McEstimate> mc_call_prices(const MartingaleParams& mp, const SimConfig& cfg, double spot,
                                       std::span<const double> strikes, double maturity, double rate, double z0);

McEstimate mc_call_price(const MartingaleParams& mp, const SimConfig& cfg, const OptionSpec& spec, double z0);

/// e^{-rT} mean(e^{X(T)}); equals one for a martingale.
McEstimate mc_discounted_forward(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate);

struct Histogram {
    std::vector<double> edges;    // n_bins + 1
    std::vector<double> density;  // normalised so sum(density * width) == 1
    std::vector<std::size_t> counts;
    std::size_t n_in_range = 0;
    std::size_t n_outside = 0;

    std::size_t n_bins() const noexcept { return counts.size(); }
};

/// Histogram of X(T) over [lo, hi] with `n_bins` equal bins.
Histogram mc_return_density(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate, double lo,
                            double hi, std::size_t n_bins);

struct SampleMoments {
    double mean;
    double variance;
    double skewness;
    double excess_kurtosis;
};

/// Moments of the terminal log-return across paths.
SampleMoments terminal_moments(const PathEnsemble& ensemble);

struct ChiSquareResult {
    double statistic;
    std::size_t dof;
    double p_value;
};

/// Pearson chi-square of histogram counts against expected bin probabilities (bins with
/// expected count below 5 are pooled with their neighbour).
ChiSquareResult chi_square_test(const Histogram& hist, std::span<const double> expected_bin_probability);

struct ReturnStatsOptions {
    double obs_interval = 1.0;  // days; a multiple of cfg.dt
    std::size_t n_bootstrap = 200;
};

struct ReturnStatEstimate {
    double tau;
    McEstimate leverage;
    McEstimate sq_autocorr;
};

/// Empirical leverage E[dR(t) dR(t+tau)^2]/E[dR^2]^2 and squared-return correlation from
/// stationary physical-measure paths. Each observed return is the sum over `obs_interval` of
/// one-step simple returns minus their exact expectation; standard errors come from a
/// bootstrap over paths.
/// Every tau must be a multiple of obs_interval with |tau| + obs_interval within the horizon.
std::vector<ReturnStatEstimate> mc_return_statistics(const ModelParams& p, const SimConfig& cfg,
                                                     std::span<const double> tau_grid,
                                                     const ReturnStatsOptions& opts = {});

std::vector<McEstimate> mc_leverage(const ModelParams& p, const SimConfig& cfg, std::span<const double> tau_grid,
                                    const ReturnStatsOptions& opts = {});
std::vector<McEstimate> mc_sq_autocorr(const ModelParams& p, const SimConfig& cfg, std::span<const double> tau_grid,
                                       const ReturnStatsOptions& opts = {});

}  // namespace expou

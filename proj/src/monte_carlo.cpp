#include "expou/monte_carlo.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "expou/errors.hpp"

namespace expou {

namespace {

struct Diffusion {
    double level;      // m or m_bar
    double reversion;  // alpha or alpha_bar
    double volvol;     // k
    double rho;
    double drift;      // per day
};

// Box-Muller normals from a per-path mt19937_64.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    double uniform() {
        // (0, 1): top 53 bits, shifted off zero.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

unsigned resolve_threads(const SimConfig& cfg) {
    unsigned n = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
    return std::max(1u, n);
}

// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write into per-index slots,
// so the result is independent of the split.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Simulates one path, calling sink(step, x, y) for step = 0..n_steps.
template <class Sink>
void simulate_path(const Diffusion& d, const SimConfig& cfg, std::size_t path, std::optional<double> y_start,
                   Sink&& sink) {
    const std::uint64_t stream = cfg.antithetic ? path / 2 : path;
    const double sign = (cfg.antithetic && path % 2 == 1) ? -1.0 : 1.0;
    NormalStream rng(cfg.seed, stream);

    const double stationary_sd = d.volvol / std::sqrt(2.0 * d.reversion);
    double y = y_start ? *y_start : sign * stationary_sd * rng.normal();
    double x = 0.0;

    const double decay = std::exp(-d.reversion * cfg.dt);
    const double innovation_sd = stationary_sd * std::sqrt(-std::expm1(-2.0 * d.reversion * cfg.dt));
    const double sqrt_dt = std::sqrt(cfg.dt);
    const double perp = std::sqrt(std::max(0.0, 1.0 - d.rho * d.rho));

    sink(std::size_t{0}, x, y);
    for (std::size_t step = 1; step <= cfg.n_steps; ++step) {
        const double xi1 = sign * rng.normal();
        const double xi_perp = sign * rng.normal();
        const double xi2 = d.rho * xi1 + perp * xi_perp;
        const double vol = d.level * std::exp(y);
        x += (d.drift - 0.5 * vol * vol) * cfg.dt + vol * sqrt_dt * xi1;
        y = decay * y + innovation_sd * xi2;
        sink(step, x, y);
    }
}

Diffusion physical_diffusion(const ModelParams& p, double drift) {
    return {p.m(), p.alpha(), p.k(), p.rho(), drift};
}

Diffusion martingale_diffusion(const MartingaleParams& mp, double rate) {
    return {mp.m_bar, mp.alpha_bar, mp.k, mp.rho, rate};
}

PathEnsemble allocate_ensemble(const SimConfig& cfg) {
    cfg.validate();
    const std::size_t samples = cfg.n_paths * (cfg.n_steps + 1);
    const bool full = samples <= cfg.memory_budget_bytes / (2 * sizeof(double));
    return PathEnsemble(cfg.n_paths, cfg.n_steps, cfg.dt, full);
}

std::vector<double> terminal_log_returns(const Diffusion& d, const SimConfig& cfg, std::optional<double> y_start) {
    cfg.validate();
    std::vector<double> terminal(cfg.n_paths);
    parallel_for(cfg.n_paths, resolve_threads(cfg), [&](std::size_t path) {
        simulate_path(d, cfg, path, y_start, [&](std::size_t step, double x, double) {
            if (step == cfg.n_steps) terminal[path] = x;
        });
    });
    return terminal;
}

// Mean and standard error over independent units: single paths, or antithetic pairs.
McEstimate estimate_from_samples(const std::vector<double>& per_path, bool antithetic) {
    std::vector<double> units;
    if (antithetic) {
        units.reserve(per_path.size() / 2);
        for (std::size_t i = 0; i + 1 < per_path.size(); i += 2) units.push_back(0.5 * (per_path[i] + per_path[i + 1]));
    }
    const std::vector<double>& v = antithetic ? units : per_path;
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double s : v) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : v) ss += (s - mean) * (s - mean);
    const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n), v.size()};
}

void require_measure(const SimConfig& cfg, Measure expected, const char* who) {
    if (cfg.measure != expected) {
        throw ParameterError(std::string(who) + ": simulation configured for the wrong measure");
    }
}

}  // namespace

void SimConfig::validate() const {
    if (n_paths < 1) throw ParameterError("SimConfig: n_paths must be at least 1");
    if (n_steps < 1) throw ParameterError("SimConfig: n_steps must be at least 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("SimConfig: dt must be positive");
    if (antithetic && n_paths % 2 != 0) throw ParameterError("SimConfig: antithetic sampling needs an even n_paths");
}

PathEnsemble::PathEnsemble(std::size_t n_paths, std::size_t n_steps, double dt, bool full_paths)
    : n_paths_(n_paths), n_steps_(n_steps), dt_(dt), full_(full_paths) {
    x_.resize(n_paths_ * stride());
    y_.resize(n_paths_ * stride());
}

double PathEnsemble::x(std::size_t path, std::size_t step) const {
    if (!full_) {
        if (step != n_steps_) throw DomainError("PathEnsemble: only terminal values were kept");
        return x_.at(path);
    }
    return x_.at(path * stride() + step);
}

double PathEnsemble::y(std::size_t path, std::size_t step) const {
    if (!full_) {
        if (step != n_steps_) throw DomainError("PathEnsemble: only terminal values were kept");
        return y_.at(path);
    }
    return y_.at(path * stride() + step);
}

double PathEnsemble::terminal_x(std::size_t path) const { return x(path, n_steps_); }
double PathEnsemble::terminal_y(std::size_t path) const { return y(path, n_steps_); }

class PathWriter {
public:
    static void fill(PathEnsemble& e, const Diffusion& d, const SimConfig& cfg, std::optional<double> y_start) {
        const std::size_t stride = e.stride();
        const bool full = e.full_;
        parallel_for(cfg.n_paths, resolve_threads(cfg), [&](std::size_t path) {
            simulate_path(d, cfg, path, y_start, [&](std::size_t step, double x, double y) {
                if (full) {
                    e.x_[path * stride + step] = x;
                    e.y_[path * stride + step] = y;
                } else if (step == cfg.n_steps) {
                    e.x_[path] = x;
                    e.y_[path] = y;
                }
            });
        });
    }
};

PathEnsemble simulate_paths(const ModelParams& p, const SimConfig& cfg, std::optional<double> y0, double drift) {
    require_measure(cfg, Measure::Physical, "simulate_paths");
    const auto d = physical_diffusion(p, drift);
    auto ensemble = allocate_ensemble(cfg);
    PathWriter::fill(ensemble, d, cfg, y0);
    return ensemble;
}

PathEnsemble simulate_paths(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate) {
    require_measure(cfg, Measure::Martingale, "simulate_paths");
    const auto d = martingale_diffusion(mp, rate);
    auto ensemble = allocate_ensemble(cfg);
    PathWriter::fill(ensemble, d, cfg, z0);
    return ensemble;
}

void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble) {
    if (!ensemble.full_paths()) {
        throw DomainError("write_paths_csv: ensemble holds terminal values only (memory budget exceeded)");
    }
    os << "path,step,t_days,x,y\n";
    for (std::size_t path = 0; path < ensemble.n_paths(); ++path) {
        for (std::size_t step = 0; step <= ensemble.n_steps(); ++step) {
            fmt::print(os, "{},{},{:.12g},{:.12g},{:.12g}\n", path, step, static_cast<double>(step) * ensemble.dt(),
                       ensemble.x(path, step), ensemble.y(path, step));
        }
    }
}

std::vector<McEstimate> mc_call_prices(const MartingaleParams& mp, const SimConfig& cfg, double spot,
                                       std::span<const double> strikes, double maturity, double rate, double z0) {
    require_measure(cfg, Measure::Martingale, "mc_call_prices");
    if (std::abs(cfg.horizon() - maturity) > 1e-9 * maturity) {
        throw ParameterError("mc_call_prices: simulation horizon n_steps*dt must equal the maturity");
    }
    const auto terminal = terminal_log_returns(martingale_diffusion(mp, rate), cfg, z0);
    const double discount = std::exp(-rate * maturity);

    std::vector<McEstimate> out;
    out.reserve(strikes.size());
    std::vector<double> payoff(terminal.size());
    for (double strike : strikes) {
        for (std::size_t i = 0; i < terminal.size(); ++i) {
            payoff[i] = discount * std::max(spot * std::exp(terminal[i]) - strike, 0.0);
        }
        out.push_back(estimate_from_samples(payoff, cfg.antithetic));
    }
    return out;
}

McEstimate mc_call_price(const MartingaleParams& mp, const SimConfig& cfg, const OptionSpec& spec, double z0) {
    const double strike = spec.strike;
    return mc_call_prices(mp, cfg, spec.spot, std::span<const double>(&strike, 1), spec.maturity, spec.rate, z0)
        .front();
}

McEstimate mc_discounted_forward(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate) {
    require_measure(cfg, Measure::Martingale, "mc_discounted_forward");
    auto terminal = terminal_log_returns(martingale_diffusion(mp, rate), cfg, z0);
    const double discount = std::exp(-rate * cfg.horizon());
    for (double& x : terminal) x = discount * std::exp(x);
    return estimate_from_samples(terminal, cfg.antithetic);
}

Histogram mc_return_density(const MartingaleParams& mp, const SimConfig& cfg, double z0, double rate, double lo,
                            double hi, std::size_t n_bins) {
    require_measure(cfg, Measure::Martingale, "mc_return_density");
    if (!(hi > lo) || n_bins == 0) throw DomainError("mc_return_density: need hi > lo and at least one bin");
    const auto terminal = terminal_log_returns(martingale_diffusion(mp, rate), cfg, z0);

    Histogram h;
    h.edges.resize(n_bins + 1);
    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (std::size_t i = 0; i <= n_bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.counts.assign(n_bins, 0);
    for (double x : terminal) {
        if (x < lo || x >= hi) {
            ++h.n_outside;
            continue;
        }
        const auto bin = std::min(n_bins - 1, static_cast<std::size_t>((x - lo) / width));
        ++h.counts[bin];
        ++h.n_in_range;
    }
    h.density.assign(n_bins, 0.0);
    if (h.n_in_range > 0) {
        for (std::size_t i = 0; i < n_bins; ++i) {
            h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(h.n_in_range) * width);
        }
    }
    return h;
}

SampleMoments terminal_moments(const PathEnsemble& ensemble) {
    const std::size_t n = ensemble.n_paths();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ensemble.terminal_x(i);
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ensemble.terminal_x(i) - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

ChiSquareResult chi_square_test(const Histogram& hist, std::span<const double> expected_bin_probability) {
    if (expected_bin_probability.size() != hist.n_bins()) {
        throw DomainError("chi_square_test: one expected probability per bin required");
    }
    double total_prob = 0.0;
    for (double q : expected_bin_probability) total_prob += q;
    const double n = static_cast<double>(hist.n_in_range);

    std::vector<double> observed_cells, expected_cells;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (std::size_t i = 0; i < hist.n_bins(); ++i) {
        obs_acc += static_cast<double>(hist.counts[i]);
        exp_acc += n * expected_bin_probability[i] / total_prob;
        if (exp_acc >= 5.0) {
            observed_cells.push_back(obs_acc);
            expected_cells.push_back(exp_acc);
            obs_acc = exp_acc = 0.0;
        }
    }
    if (exp_acc > 0.0 || obs_acc > 0.0) {
        if (expected_cells.empty()) {
            observed_cells.push_back(obs_acc);
            expected_cells.push_back(exp_acc);
        } else {
            observed_cells.back() += obs_acc;
            expected_cells.back() += exp_acc;
        }
    }
    double statistic = 0.0;
    for (std::size_t c = 0; c < observed_cells.size(); ++c) {
        const double diff = observed_cells[c] - expected_cells[c];
        statistic += diff * diff / expected_cells[c];
    }
    const std::size_t cells = observed_cells.size();
    const std::size_t dof = cells > 1 ? cells - 1 : 1;
    return {statistic, dof, gsl_cdf_chisq_Q(statistic, static_cast<double>(dof))};
}

std::vector<ReturnStatEstimate> mc_return_statistics(const ModelParams& p, const SimConfig& cfg,
                                                     std::span<const double> tau_grid,
                                                     const ReturnStatsOptions& opts) {
    require_measure(cfg, Measure::Physical, "mc_return_statistics");
    cfg.validate();
    const double ratio = opts.obs_interval / cfg.dt;
    const auto steps_per_obs = static_cast<std::size_t>(std::llround(ratio));
    if (steps_per_obs == 0 || std::abs(ratio - static_cast<double>(steps_per_obs)) > 1e-9 * ratio) {
        throw DomainError("mc_return_statistics: obs_interval must be a positive multiple of dt");
    }
    const std::size_t n_returns = cfg.n_steps / steps_per_obs;

    std::vector<long> lags;
    for (double tau : tau_grid) {
        const double lag_f = tau / opts.obs_interval;
        const long lag = std::lround(lag_f);
        if (std::abs(lag_f - static_cast<double>(lag)) > 1e-9 * std::max(1.0, std::abs(lag_f))) {
            throw DomainError("mc_return_statistics: tau must be a multiple of obs_interval");
        }
        if (static_cast<std::size_t>(std::labs(lag)) + 1 > n_returns) {
            throw DomainError(fmt::format("mc_return_statistics: tau = {} lies beyond the simulated horizon", tau));
        }
        lags.push_back(lag);
    }

    // Per-path sums: [n, sum r^2, sum r^4, then per lag: sum r_t r_{t+L}^2, sum r_t^2 r_{t+L}^2, pair count].
    const std::size_t width = 3 + 3 * lags.size();
    std::vector<double> sums(cfg.n_paths * width, 0.0);
    const Diffusion d = physical_diffusion(p, 0.0);
    const double expected_step_return = std::expm1(d.drift * cfg.dt);

    parallel_for(cfg.n_paths, resolve_threads(cfg), [&](std::size_t path) {
        std::vector<double> r;
        r.reserve(n_returns);
        double last_x = 0.0;
        double window = 0.0;
        // Sum of demeaned one-step simple returns over each observation window. A single
        // expm1 over the whole window blows up the fourth moment on high-vol paths.
        simulate_path(d, cfg, path, std::nullopt, [&](std::size_t step, double x, double) {
            if (step > 0) {
                window += std::expm1(x - last_x) - expected_step_return;
                if (step % steps_per_obs == 0 && r.size() < n_returns) {
                    r.push_back(window);
                    window = 0.0;
                }
            }
            last_x = x;
        });
        double* acc = &sums[path * width];
        for (double v : r) {
            const double v2 = v * v;
            acc[0] += 1.0;
            acc[1] += v2;
            acc[2] += v2 * v2;
        }
        for (std::size_t li = 0; li < lags.size(); ++li) {
            const long lag = lags[li];
            double lev = 0.0, sq = 0.0, cnt = 0.0;
            for (std::size_t j = 0; j < r.size(); ++j) {
                const long other = static_cast<long>(j) + lag;
                if (other < 0 || other >= static_cast<long>(r.size())) continue;
                const double r2 = r[static_cast<std::size_t>(other)] * r[static_cast<std::size_t>(other)];
                lev += r[j] * r2;
                sq += r[j] * r[j] * r2;
                cnt += 1.0;
            }
            acc[3 + 3 * li] = lev;
            acc[4 + 3 * li] = sq;
            acc[5 + 3 * li] = cnt;
        }
    });

    // Independent resampling units: paths, or antithetic pairs.
    const std::size_t per_unit = cfg.antithetic ? 2 : 1;
    const std::size_t n_units = cfg.n_paths / per_unit;
    std::vector<double> units(n_units * width, 0.0);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        for (std::size_t c = 0; c < width; ++c) units[(path / per_unit) * width + c] += sums[path * width + c];
    }

    auto estimates = [&](const std::vector<double>& total, std::vector<double>& lev, std::vector<double>& ac) {
        const double m2 = total[1] / total[0];
        const double m4 = total[2] / total[0];
        for (std::size_t li = 0; li < lags.size(); ++li) {
            const double pairs = total[5 + 3 * li];
            lev[li] = (total[3 + 3 * li] / pairs) / (m2 * m2);
            ac[li] = (total[4 + 3 * li] / pairs - m2 * m2) / (m4 - m2 * m2);
        }
    };

    std::vector<double> total(width, 0.0);
    for (std::size_t u = 0; u < n_units; ++u) {
        for (std::size_t c = 0; c < width; ++c) total[c] += units[u * width + c];
    }
    std::vector<double> lev(lags.size()), ac(lags.size());
    estimates(total, lev, ac);

    std::vector<double> lev_sum(lags.size(), 0.0), lev_sq(lags.size(), 0.0);
    std::vector<double> ac_sum(lags.size(), 0.0), ac_sq(lags.size(), 0.0);
    std::mt19937_64 engine;
    {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 0xB007u,
                          0x5742u, 0xA9u};
        engine.seed(seq);
    }
    std::vector<double> rep_total(width);
    std::vector<double> rep_lev(lags.size()), rep_ac(lags.size());
    for (std::size_t b = 0; b < opts.n_bootstrap; ++b) {
        std::fill(rep_total.begin(), rep_total.end(), 0.0);
        for (std::size_t draw = 0; draw < n_units; ++draw) {
            const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
            const auto idx = std::min(n_units - 1, static_cast<std::size_t>(u * static_cast<double>(n_units)));
            const double* src = &units[idx * width];
            for (std::size_t c = 0; c < width; ++c) rep_total[c] += src[c];
        }
        estimates(rep_total, rep_lev, rep_ac);
        for (std::size_t li = 0; li < lags.size(); ++li) {
            lev_sum[li] += rep_lev[li];
            lev_sq[li] += rep_lev[li] * rep_lev[li];
            ac_sum[li] += rep_ac[li];
            ac_sq[li] += rep_ac[li] * rep_ac[li];
        }
    }
    auto boot_sd = [&](double s, double sq) {
        if (opts.n_bootstrap < 2) return 0.0;
        const double nb = static_cast<double>(opts.n_bootstrap);
        const double mean = s / nb;
        return std::sqrt(std::max(0.0, (sq - nb * mean * mean) / (nb - 1.0)));
    };

    std::vector<ReturnStatEstimate> out;
    out.reserve(lags.size());
    for (std::size_t li = 0; li < lags.size(); ++li) {
        out.push_back({tau_grid[li],
                       {lev[li], boot_sd(lev_sum[li], lev_sq[li]), n_units},
                       {ac[li], boot_sd(ac_sum[li], ac_sq[li]), n_units}});
    }
    return out;
}

std::vector<McEstimate> mc_leverage(const ModelParams& p, const SimConfig& cfg, std::span<const double> tau_grid,
                                    const ReturnStatsOptions& opts) {
    std::vector<McEstimate> out;
    for (const auto& e : mc_return_statistics(p, cfg, tau_grid, opts)) out.push_back(e.leverage);
    return out;
}

std::vector<McEstimate> mc_sq_autocorr(const ModelParams& p, const SimConfig& cfg, std::span<const double> tau_grid,
                                       const ReturnStatsOptions& opts) {
    std::vector<McEstimate> out;
    for (const auto& e : mc_return_statistics(p, cfg, tau_grid, opts)) out.push_back(e.sq_autocorr);
    return out;
}

}  // namespace expou

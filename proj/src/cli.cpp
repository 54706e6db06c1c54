#include "expou/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "expou/calibration.hpp"
#include "expou/errors.hpp"
#include "expou/implied_vol.hpp"
#include "expou/pricer.hpp"
#include "expou/units.hpp"

namespace expou::cli {

namespace {

// 12 significant digits everywhere.
std::string num(double v) { return fmt::format("{:.12g}", v); }

std::size_t steps_for(double horizon, double dt, const char* field, std::vector<std::string>& errors) {
    const double n = horizon / dt;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
        errors.push_back(fmt::format("{}: {} days is not a positive multiple of dt = {}", field, horizon, dt));
        return 1;
    }
    return static_cast<std::size_t>(rounded);
}

void note_regime(const RegimeWarning& w, bool negative_price, std::ostream& err) {
    if (w.small_lambda) err << "warning: lambda = k/m_bar below 5, expansion outside its trusted range\n";
    if (w.large_corrections) err << "warning: expansion corrections exceed 0.5 of the Gaussian term\n";
    if (negative_price) err << "warning: expansion produced a negative call price\n";
}

std::vector<double> strikes_for(const RunConfig& cfg) {
    std::vector<double> k;
    k.reserve(cfg.moneyness.size());
    for (double mny : cfg.moneyness) k.push_back(cfg.spot / mny);
    return k;
}

}  // namespace

MartingaleParams RunConfig::martingale() const { return to_martingale(model, risk, y0); }

ExpansionCoeffs RunConfig::coeffs() const {
    const auto mp = martingale();
    return averaged ? expansion_coeffs_averaged(mp, maturity, rate) : expansion_coeffs(mp, maturity, rate);
}

RunConfig resolve_config(const RawConfig& raw, std::vector<std::string>& warnings) {
    std::vector<std::string> errors;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    require(raw.m > 0.0, "m: must be positive");
    require(raw.alpha > 0.0, "alpha: must be positive");
    require(raw.k >= 0.0, "k: must be non-negative");
    require(raw.rho >= -1.0 && raw.rho <= 1.0, "rho: must lie in [-1, 1]");
    require(raw.alpha + raw.k * raw.lambda1 > 0.0, "lambda1: alpha + k*lambda1 must be positive");
    require(raw.spot > 0.0, "spot: must be positive");
    require(std::isfinite(raw.rate_annual), "rate_annual: must be finite");
    if (raw.sigma0_annual) require(*raw.sigma0_annual > 0.0, "sigma0_annual: must be positive");
    require(raw.moneyness_min > 0.0, "moneyness_min: must be positive");
    require(raw.moneyness_max >= raw.moneyness_min, "moneyness_max: must not be below moneyness_min");
    require(raw.moneyness_points >= 1, "moneyness_points: must be at least 1");
    require(raw.moneyness_points == 1 || raw.moneyness_max > raw.moneyness_min,
            "moneyness_max: must exceed moneyness_min when moneyness_points > 1");
    require(raw.maturity_days > 0.0, "maturity_days: must be positive");
    require(raw.n_paths >= 1, "n_paths: must be at least 1");
    require(raw.stats_paths >= 1, "stats_paths: must be at least 1");
    require(raw.dt > 0.0, "dt: must be positive");
    require(!raw.antithetic || raw.n_paths % 2 == 0, "n_paths: must be even with antithetic sampling");
    require(raw.density_points >= 2, "density_points: must be at least 2");
    require(raw.obs_interval_days > 0.0, "obs_interval_days: must be positive");
    require(raw.stats_horizon_days > 0.0, "stats_horizon_days: must be positive");
    if (!errors.empty()) throw ConfigError{errors};

    RunConfig cfg;
    cfg.model = ModelParams(raw.m, raw.alpha, raw.k, raw.rho);
    cfg.risk = {raw.lambda0, raw.lambda1};
    cfg.spot = raw.spot;
    cfg.rate = units::annual_rate_to_daily(raw.rate_annual);
    const double shift = raw.k * raw.lambda0 / (raw.alpha + raw.k * raw.lambda1);
    if (raw.z0) {
        if (raw.sigma0_annual) warnings.push_back("z0 and sigma0_annual both given; using z0");
        cfg.z0 = *raw.z0;
        cfg.y0 = cfg.z0 - shift;
    } else if (raw.sigma0_annual) {
        cfg.y0 = y0_from_vol_index(*raw.sigma0_annual, raw.m);
        cfg.z0 = cfg.y0 + shift;
    } else {
        cfg.z0 = 0.0;
        cfg.y0 = -shift;
    }

    const int n = raw.moneyness_points;
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        cfg.moneyness.push_back(raw.moneyness_min + f * (raw.moneyness_max - raw.moneyness_min));
    }
    cfg.maturity = raw.maturity_days;
    cfg.averaged = raw.averaged;

    cfg.sim.n_paths = static_cast<std::size_t>(raw.n_paths);
    cfg.sim.dt = raw.dt;
    cfg.sim.n_steps = steps_for(raw.maturity_days, raw.dt, "maturity_days", errors);
    cfg.sim.seed = raw.seed;
    cfg.sim.antithetic = raw.antithetic;
    cfg.sim.threads = raw.threads;
    cfg.sim.measure = Measure::Martingale;

    cfg.density_points = static_cast<std::size_t>(raw.density_points);
    cfg.tau_grid = raw.tau_grid;
    cfg.obs_interval = raw.obs_interval_days;
    cfg.stats_sim = cfg.sim;
    cfg.stats_sim.n_paths = static_cast<std::size_t>(raw.stats_paths);
    cfg.stats_sim.measure = Measure::Physical;
    cfg.stats_sim.antithetic = false;
    cfg.stats_sim.n_steps = steps_for(raw.stats_horizon_days, raw.dt, "stats_horizon_days", errors);
    steps_for(raw.obs_interval_days, raw.dt, "obs_interval_days", errors);
    for (double tau : raw.tau_grid) {
        const double lag = std::abs(tau) / raw.obs_interval_days;
        if (std::abs(lag - std::round(lag)) > 1e-9 * std::max(1.0, lag)) {
            errors.push_back(fmt::format("tau: {} is not a multiple of obs_interval_days", tau));
        } else if (std::abs(tau) + raw.obs_interval_days > raw.stats_horizon_days * (1.0 + 1e-12)) {
            errors.push_back(fmt::format("tau: |{}| + obs_interval_days exceeds stats_horizon_days", tau));
        }
    }
    cfg.output = raw.output;
    if (!errors.empty()) throw ConfigError{errors};
    return cfg;
}

int cmd_price(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto mp = cfg.martingale();
    const auto coeffs = cfg.coeffs();
    bool negative = false;
    out << "moneyness,call,bs,diff\n";
    for (double mny : cfg.moneyness) {
        const OptionSpec spec(cfg.spot, cfg.spot / mny, cfg.maturity, cfg.rate);
        const auto p = expou_call(spec, mp, coeffs);
        negative = negative || p.negative_price;
        out << num(mny) << ',' << num(p.total) << ',' << num(p.bs) << ',' << num(p.total - p.bs) << '\n';
    }
    note_regime(coeffs.regime, negative, err);
    return kOk;
}

int cmd_smile(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto mp = cfg.martingale();
    const auto coeffs = cfg.coeffs();
    const OptionSpec tmpl(cfg.spot, cfg.spot, cfg.maturity, cfg.rate);
    const auto smile = smile_curve(mp, coeffs, cfg.moneyness, tmpl);
    std::size_t failed = 0;
    out << "moneyness,implied_vol_annual\n";
    for (const auto& pt : smile) {
        out << num(pt.moneyness) << ',';
        if (pt.implied_vol_annual) {
            out << num(*pt.implied_vol_annual);
        } else {
            ++failed;
        }
        out << '\n';
    }
    if (failed) err << "warning: " << failed << " prices outside the no-arbitrage band, left blank\n";
    note_regime(coeffs.regime, false, err);
    return kOk;
}

int cmd_density(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto mp = cfg.martingale();
    const auto coeffs = cfg.coeffs();
    const double sd = mp.m_bar * std::sqrt(cfg.maturity);
    const double lo = coeffs.mu - 8.0 * sd;
    const double hi = coeffs.mu + 8.0 * sd;
    const std::size_t n = cfg.density_points;
    out << "x,p\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        out << num(x) << ',' << num(return_density(coeffs, mp, x)) << '\n';
    }
    if (return_density_negative_mass(coeffs, mp) > 0.0) err << "warning: density has negative regions\n";
    note_regime(coeffs.regime, false, err);
    return kOk;
}

int cmd_greeks(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto mp = cfg.martingale();
    const auto coeffs = cfg.coeffs();
    out << "moneyness,delta\n";
    for (double mny : cfg.moneyness) {
        const OptionSpec spec(cfg.spot, cfg.spot / mny, cfg.maturity, cfg.rate);
        out << num(mny) << ',' << num(delta(spec, mp, coeffs)) << '\n';
    }
    note_regime(coeffs.regime, false, err);
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto mp = cfg.martingale();
    const auto coeffs = cfg.coeffs();
    const auto strikes = strikes_for(cfg);
    const auto mc = mc_call_prices(mp, cfg.sim, cfg.spot, strikes, cfg.maturity, cfg.rate, mp.z0);
    out << "moneyness,mc_price,std_err,analytic,abs_diff\n";
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        const double analytic = expou_call(OptionSpec(cfg.spot, strikes[i], cfg.maturity, cfg.rate), mp, coeffs).total;
        out << num(cfg.moneyness[i]) << ',' << num(mc[i].value) << ',' << num(mc[i].std_error) << ','
            << num(analytic) << ',' << num(std::abs(analytic - mc[i].value)) << '\n';
    }
    note_regime(coeffs.regime, false, err);
    return kOk;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    ReturnStatsOptions opts;
    opts.obs_interval = cfg.obs_interval;
    const auto est = mc_return_statistics(cfg.model, cfg.stats_sim, cfg.tau_grid, opts);
    out << "tau,leverage_mc,leverage_se,leverage_fml,autocorr_mc,autocorr_se,autocorr_fml\n";
    for (const auto& e : est) {
        out << num(e.tau) << ',' << num(e.leverage.value) << ',' << num(e.leverage.std_error) << ','
            << num(leverage(cfg.model, e.tau)) << ',' << num(e.sq_autocorr.value) << ','
            << num(e.sq_autocorr.std_error) << ',' << num(squared_return_autocorr(cfg.model, std::abs(e.tau)))
            << '\n';
    }
    return kOk;
}

int cmd_paths(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto mp = cfg.martingale();
    const auto ens = simulate_paths(mp, cfg.sim, mp.z0, cfg.rate);
    if (!ens.full_paths()) throw std::runtime_error("paths: ensemble exceeds the memory budget, reduce n_paths");
    write_paths_csv(out, ens);
    return kOk;
}

int cmd_calibrate(const RunConfig& cfg, const std::string& quotes_file, const std::string& repricing_file,
                  std::ostream& out, std::ostream& err) {
    QuoteFile qf;
    try {
        qf = load_quotes(std::filesystem::path(quotes_file));
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    if (!qf.ok()) err << "warning: " << qf.summary() << '\n';

    CalibOptions opts;
    opts.use_averaged_coeffs = cfg.averaged;
    const auto res = calibrate_risk_aversion(qf.quotes, cfg.model, cfg.spot, cfg.rate, cfg.y0, opts);
    if (!res.converged) err << "warning: simplex did not converge in " << res.iterations << " iterations\n";
    out << "lambda0,lambda1,rmse,n_quotes,converged,iterations\n";
    out << num(res.lambda0) << ',' << num(res.lambda1) << ',' << num(res.rmse) << ',' << res.n_quotes << ','
        << (res.converged ? 1 : 0) << ',' << res.iterations << '\n';

    if (!repricing_file.empty()) {
        std::ofstream rep(repricing_file);
        if (!rep) {
            err << "error: cannot write repricing table: " << repricing_file << '\n';
            return kInputError;
        }
        rep << "strike,mid,model,residual\n";
        for (const auto& row : repricing_table(qf.quotes, cfg.model, res.risk_aversion(), cfg.spot, cfg.rate,
                                               cfg.y0, cfg.averaged)) {
            rep << num(row.strike) << ',' << num(row.mid) << ',' << num(row.model) << ',' << num(row.residual)
                << '\n';
        }
    }
    return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"expOU stochastic volatility option pricing"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value config file")->envname(kConfigEnvVar);

    RawConfig raw;
    double sigma0 = 0.0;
    double z0 = 0.0;
    app.add_option("--m", raw.m, "normal volatility level, day^-1/2")->capture_default_str();
    app.add_option("--alpha", raw.alpha, "log-vol reversion rate, day^-1")->capture_default_str();
    app.add_option("--k", raw.k, "vol-of-vol, day^-1/2")->capture_default_str();
    app.add_option("--rho", raw.rho, "price/vol correlation")->capture_default_str();
    app.add_option("--lambda0", raw.lambda0)->capture_default_str();
    app.add_option("--lambda1", raw.lambda1)->capture_default_str();
    app.add_option("--spot", raw.spot)->capture_default_str();
    app.add_option("--rate_annual", raw.rate_annual)->capture_default_str();
    auto* sigma0_opt = app.add_option("--sigma0_annual", sigma0, "annualised initial volatility");
    auto* z0_opt = app.add_option("--z0", z0, "initial shifted log-volatility");
    app.add_option("--moneyness_min", raw.moneyness_min)->capture_default_str();
    app.add_option("--moneyness_max", raw.moneyness_max)->capture_default_str();
    app.add_option("--moneyness_points", raw.moneyness_points)->capture_default_str();
    app.add_option("--maturity_days", raw.maturity_days)->capture_default_str();
    app.add_flag("--averaged", raw.averaged, "use stationary-averaged coefficients");
    app.add_option("--n_paths", raw.n_paths)->capture_default_str();
    app.add_option("--dt", raw.dt, "time step, days")->capture_default_str();
    app.add_option("--seed", raw.seed)->capture_default_str();
    app.add_flag("--antithetic", raw.antithetic);
    app.add_option("--threads", raw.threads, "0 = all cores")->capture_default_str();
    app.add_option("--density_points", raw.density_points)->capture_default_str();
    app.add_option("--tau", raw.tau_grid, "lags for stats, days")->delimiter(',')->capture_default_str();
    app.add_option("--stats_horizon_days", raw.stats_horizon_days)->capture_default_str();
    app.add_option("--obs_interval_days", raw.obs_interval_days)->capture_default_str();
    app.add_option("--stats_paths", raw.stats_paths)->capture_default_str();
    app.add_option("-o,--output", raw.output, "output file, - for stdout")->capture_default_str();

    std::string quotes_file;
    std::string repricing_file;
    auto* price = app.add_subcommand("price", "expansion vs Black-Scholes call prices");
    auto* smile = app.add_subcommand("smile", "implied volatility smile");
    auto* density = app.add_subcommand("density", "risk-neutral return density");
    auto* greeks = app.add_subcommand("greeks", "hedging delta");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo call prices against the expansion");
    auto* stats = app.add_subcommand("stats", "leverage and squared-return correlation");
    auto* paths = app.add_subcommand("paths", "raw simulated paths");
    auto* calibrate = app.add_subcommand("calibrate", "fit lambda0, lambda1 to a quote file");
    calibrate->add_option("quotes", quotes_file, "CSV quote file")->required();
    calibrate->add_option("--repricing", repricing_file, "write per-quote repricing table here");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }
    if (sigma0_opt->count() > 0) raw.sigma0_annual = sigma0;
    if (z0_opt->count() > 0) raw.z0 = z0;

    RunConfig cfg;
    try {
        std::vector<std::string> warnings;
        cfg = resolve_config(raw, warnings);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
    } catch (const ConfigError& e) {
        for (const auto& msg : e.messages) err << "config error: " << msg << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kInputError;
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (cfg.output != "-") {
        file.open(cfg.output);
        if (!file) {
            err << "error: cannot open output file: " << cfg.output << '\n';
            return kInputError;
        }
        sink = &file;
    }

    try {
        if (price->parsed()) return cmd_price(cfg, *sink, err);
        if (smile->parsed()) return cmd_smile(cfg, *sink, err);
        if (density->parsed()) return cmd_density(cfg, *sink, err);
        if (greeks->parsed()) return cmd_greeks(cfg, *sink, err);
        if (simulate->parsed()) return cmd_simulate(cfg, *sink, err);
        if (stats->parsed()) return cmd_stats(cfg, *sink, err);
        if (paths->parsed()) return cmd_paths(cfg, *sink, err);
        if (calibrate->parsed()) return cmd_calibrate(cfg, quotes_file, repricing_file, *sink, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kComputeError;
    }
    return kInputError;
}

}  // namespace expou::cli

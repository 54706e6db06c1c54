#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "expou/model.hpp"
#include "expou/monte_carlo.hpp"
#include "expou/risk_neutral.hpp"

namespace expou::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kComputeError = 3 };

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "EXPOU_CONFIG";

/// Values as they appear in the config file / on the command line (rates and the volatility
/// index annualised, everything else daily). Defaults are the reference parameter set.
struct RawConfig {
    double m = 1e-2;
    double alpha = 8e-3;
    double k = 0.11;
    double rho = -0.4;
    double lambda0 = 1e-3;
    double lambda1 = 1e-3;
    double spot = 100.0;
    double rate_annual = 0.0;
    std::optional<double> sigma0_annual;
    std::optional<double> z0;
    double moneyness_min = 0.8;
    double moneyness_max = 1.2;
    int moneyness_points = 101;
    double maturity_days = 20.0;
    bool averaged = false;
    long long n_paths = 20000;
    double dt = 0.1;
    std::uint64_t seed = 20080502;
    bool antithetic = false;
    unsigned threads = 0;
    int density_points = 401;
    std::vector<double> tau_grid{-5.0, 1.0, 5.0, 20.0};
    double stats_horizon_days = 100.0;
    double obs_interval_days = 1.0;
    long long stats_paths = 20000;
    std::string output = "-";
};

/// Validated configuration in internal daily units.
struct RunConfig {
    ModelParams model = ModelParams::reference();
    RiskAversion risk;
    double spot = 100.0;
    double rate = 0.0;  // per day
    double y0 = 0.0;
    double z0 = 0.0;
    std::vector<double> moneyness;
    double maturity = 20.0;
    bool averaged = false;
    SimConfig sim;
    std::size_t density_points = 401;
    std::vector<double> tau_grid;
    SimConfig stats_sim;
    double obs_interval = 1.0;
    std::string output = "-";

    MartingaleParams martingale() const;
    ExpansionCoeffs coeffs() const;
};

struct ConfigError {
    std::vector<std::string> messages;  // one "field: problem" line each
};

/// Converts and validates. `warnings` receives non-fatal notes (z0 overriding sigma0_annual).
RunConfig resolve_config(const RawConfig& raw, std::vector<std::string>& warnings);

// Commands write CSV to `out`; warnings go to `err`. Each returns an ExitCode.
int cmd_price(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_smile(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_density(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_greeks(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_paths(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_calibrate(const RunConfig& cfg, const std::string& quotes_file, const std::string& repricing_file,
                  std::ostream& out, std::ostream& err);

/// Full command-line entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace expou::cli

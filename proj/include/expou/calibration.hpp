#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "expou/model.hpp"
#include "expou/risk_neutral.hpp"

namespace expou {

struct OptionQuote {
    double strike;
    double maturity;  // days
    double bid;
    double ask;
    double mid;

    /// Quote from a mid price only; bid and ask collapse onto it.
    static OptionQuote from_mid(double strike, double maturity, double mid);
    /// Quote from a two-sided market; mid is the arithmetic mean.
    static OptionQuote from_bid_ask(double strike, double maturity, double bid, double ask);
};

struct QuoteRowError {
    std::size_t line;  // 1-based, counting the header
    std::string reason;
};

struct QuoteFile {
    std::vector<OptionQuote> quotes;
    std::vector<QuoteRowError> errors;

    bool ok() const noexcept { return errors.empty(); }
    std::string summary() const;
};

/// Reads `strike,maturity_days,bid,ask` or `strike,maturity_days,mid` CSV. Bad rows are
/// collected in `errors` (reasons include "crossed" and "non-positive price"); a missing
/// or unrecognised header throws std::runtime_error.
QuoteFile load_quotes(std::istream& in);
QuoteFile load_quotes(const std::filesystem::path& file);

/// Writes the two-sided format with shortest round-trip number formatting.
void write_quotes(std::ostream& out, std::span<const OptionQuote> quotes);

/// y0 = ln(sigma0_daily / m) from an annualised volatility index level.
double y0_from_vol_index(double sigma0_annual, double m);

enum class QuoteWeighting { Uniform, InverseSpread };

struct CalibOptions {
    QuoteWeighting weighting = QuoteWeighting::Uniform;
    double bound = 1.0;              // |lambda0|, |lambda1| <= bound
    double initial_step = 1e-2;      // initial simplex edge around (0, 0)
    double size_tolerance = 1e-9;    // simplex characteristic size at convergence
    std::size_t max_iterations = 500;
    bool use_averaged_coeffs = false;
};

struct CalibResult {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double rmse = 0.0;
    std::size_t n_quotes = 0;
    bool converged = false;
    std::size_t iterations = 0;
    double objective = 0.0;
    /// Best objective value after each accepted iteration.
    std::vector<double> objective_history;

    RiskAversion risk_aversion() const noexcept { return {lambda0, lambda1}; }
};

/// Model call price for one quote under the given risk aversion.
double model_price(const OptionQuote& q, const ModelParams& p, const RiskAversion& ra, double spot, double rate,
                   double y0, bool averaged = false);

/// Least-squares fit of (lambda0, lambda1) to quoted mids with a bounded Nelder-Mead simplex.
/// `rate` is per day.
CalibResult calibrate_risk_aversion(std::span<const OptionQuote> quotes, const ModelParams& p, double spot,
                                    double rate, double y0, const CalibOptions& opts = {});

struct RepricingRow {
    double strike;
    double mid;
    double model;
    double residual;  // model - mid
};

std::vector<RepricingRow> repricing_table(std::span<const OptionQuote> quotes, const ModelParams& p,
                                          const RiskAversion& ra, double spot, double rate, double y0,
                                          bool averaged = false);

}  // namespace expou

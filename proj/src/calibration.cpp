#include "expou/calibration.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "expou/errors.hpp"
#include "expou/pricer.hpp"
#include "expou/units.hpp"

namespace expou {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

enum class Layout { BidAsk, Mid };

}  // namespace

OptionQuote OptionQuote::from_mid(double strike, double maturity, double mid) {
    return {strike, maturity, mid, mid, mid};
}

OptionQuote OptionQuote::from_bid_ask(double strike, double maturity, double bid, double ask) {
    return {strike, maturity, bid, ask, 0.5 * (bid + ask)};
}

std::string QuoteFile::summary() const {
    std::string s = fmt::format("{} quotes accepted, {} rows rejected", quotes.size(), errors.size());
    for (const auto& e : errors) s += fmt::format("\n  line {}: {}", e.line, e.reason);
    return s;
}

QuoteFile load_quotes(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    // Skip leading blank lines before the header.
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    const auto header = split_csv(trim(line));
    Layout layout;
    if (header == std::vector<std::string>{"strike", "maturity_days", "bid", "ask"}) {
        layout = Layout::BidAsk;
    } else if (header == std::vector<std::string>{"strike", "maturity_days", "mid"}) {
        layout = Layout::Mid;
    } else {
        throw std::runtime_error("quote file: expected header 'strike,maturity_days,bid,ask' or "
                                 "'strike,maturity_days,mid', got '" + trim(line) + "'");
    }
    const std::size_t n_cols = layout == Layout::BidAsk ? 4 : 3;

    QuoteFile result;
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = trim(line);
        if (stripped.empty()) continue;
        const auto fields = split_csv(stripped);
        if (fields.size() != n_cols) {
            result.errors.push_back({line_no, fmt::format("expected {} columns, found {}", n_cols, fields.size())});
            continue;
        }
        std::vector<double> v(n_cols);
        bool numeric = true;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (!parse_double(fields[c], v[c])) {
                result.errors.push_back({line_no, fmt::format("column {} is not a number: '{}'", header[c], fields[c])});
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;
        if (!(v[0] > 0.0)) {
            result.errors.push_back({line_no, "non-positive strike"});
            continue;
        }
        if (!(v[1] > 0.0)) {
            result.errors.push_back({line_no, "non-positive maturity"});
            continue;
        }
        if (layout == Layout::BidAsk) {
            if (!(v[2] > 0.0) || !(v[3] > 0.0)) {
                result.errors.push_back({line_no, "non-positive price"});
                continue;
            }
            if (v[2] > v[3]) {
                result.errors.push_back({line_no, "crossed"});
                continue;
            }
            result.quotes.push_back(OptionQuote::from_bid_ask(v[0], v[1], v[2], v[3]));
        } else {
            if (!(v[2] > 0.0)) {
                result.errors.push_back({line_no, "non-positive price"});
                continue;
            }
            result.quotes.push_back(OptionQuote::from_mid(v[0], v[1], v[2]));
        }
    }
    return result;
}

QuoteFile load_quotes(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open quote file: " + file.string());
    return load_quotes(in);
}

void write_quotes(std::ostream& out, std::span<const OptionQuote> quotes) {
    out << "strike,maturity_days,bid,ask\n";
    for (const auto& q : quotes) fmt::print(out, "{},{},{},{}\n", q.strike, q.maturity, q.bid, q.ask);
}

double y0_from_vol_index(double sigma0_annual, double m) {
    if (!(sigma0_annual > 0.0)) throw DomainError("y0_from_vol_index: volatility index must be positive");
    if (!(m > 0.0)) throw DomainError("y0_from_vol_index: m must be positive");
    return std::log(units::annual_vol_to_daily(sigma0_annual) / m);
}

double model_price(const OptionQuote& q, const ModelParams& p, const RiskAversion& ra, double spot, double rate,
                   double y0, bool averaged) {
    const auto mp = to_martingale(p, ra, y0);
    const auto coeffs = averaged ? expansion_coeffs_averaged(mp, q.maturity, rate)
                                 : expansion_coeffs(mp, q.maturity, rate);
    return expou_call(OptionSpec(spot, q.strike, q.maturity, rate), mp, coeffs).total;
}

namespace {

struct Objective {
    std::span<const OptionQuote> quotes;
    std::vector<double> weights;
    const ModelParams* params;
    double spot;
    double rate;
    double y0;
    double bound;
    bool averaged;

    // Infeasible points get a large finite value growing with the violation, which keeps
    // the simplex arithmetic finite.
    double operator()(double l0, double l1) const {
        const double alpha_bar = params->alpha() + params->k() * l1;
        const double violation = std::max({0.0, std::abs(l0) - bound, std::abs(l1) - bound,
                                           alpha_bar > 0.0 ? 0.0 : 1e-12 - alpha_bar});
        if (violation > 0.0 || !(alpha_bar > 0.0)) return 1e30 * (1.0 + violation);
        const RiskAversion ra{l0, l1};
        const auto mp = to_martingale(*params, ra, y0);
        double sum = 0.0;
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            const auto& q = quotes[i];
            const auto coeffs = averaged ? expansion_coeffs_averaged(mp, q.maturity, rate)
                                         : expansion_coeffs(mp, q.maturity, rate);
            const double model = expou_call(OptionSpec(spot, q.strike, q.maturity, rate), mp, coeffs).total;
            const double r = model - q.mid;
            sum += weights[i] * r * r;
        }
        return sum;
    }
};

double gsl_objective(const gsl_vector* x, void* data) {
    const auto* obj = static_cast<const Objective*>(data);
    return (*obj)(gsl_vector_get(x, 0), gsl_vector_get(x, 1));
}

struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

CalibResult calibrate_risk_aversion(std::span<const OptionQuote> quotes, const ModelParams& p, double spot,
                                    double rate, double y0, const CalibOptions& opts) {
    if (quotes.size() < 2) {
        throw CalibrationError("underdetermined: at least 2 quotes are needed to fit lambda0 and lambda1");
    }
    // Lambda = (0, 0) keeps alpha_bar = alpha > 0, so any positive box is feasible.
    if (!(opts.bound > 0.0)) throw ParameterError("calibrate_risk_aversion: infeasible bounds, bound must be positive");

    Objective obj{quotes, std::vector<double>(quotes.size(), 1.0), &p, spot, rate, y0, opts.bound,
                  opts.use_averaged_coeffs};
    if (opts.weighting == QuoteWeighting::InverseSpread) {
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            const double spread = quotes[i].ask - quotes[i].bid;
            obj.weights[i] = spread > 0.0 ? 1.0 / (spread * spread) : 1.0;
        }
    }

    gsl_set_error_handler_off();
    gsl_multimin_function fn{&gsl_objective, 2, &obj};
    std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_calloc(2));
    std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(2));
    gsl_vector_set_all(step.get(), opts.initial_step);
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2));
    if (gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) {
        throw CalibrationError("calibrate_risk_aversion: optimizer initialisation failed");
    }

    CalibResult result;
    result.n_quotes = quotes.size();
    while (result.iterations < opts.max_iterations) {
        ++result.iterations;
        if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
        result.objective_history.push_back(minimizer->fval);
        const double size = gsl_multimin_fminimizer_size(minimizer.get());
        if (gsl_multimin_test_size(size, opts.size_tolerance) == GSL_SUCCESS) {
            result.converged = true;
            break;
        }
    }

    const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer.get());
    result.lambda0 = gsl_vector_get(best, 0);
    result.lambda1 = gsl_vector_get(best, 1);
    result.objective = gsl_multimin_fminimizer_minimum(minimizer.get());

    double sq = 0.0;
    for (const auto& row : repricing_table(quotes, p, result.risk_aversion(), spot, rate, y0,
                                           opts.use_averaged_coeffs)) {
        sq += row.residual * row.residual;
    }
    result.rmse = std::sqrt(sq / static_cast<double>(quotes.size()));
    return result;
}

std::vector<RepricingRow> repricing_table(std::span<const OptionQuote> quotes, const ModelParams& p,
                                          const RiskAversion& ra, double spot, double rate, double y0,
                                          bool averaged) {
    std::vector<RepricingRow> rows;
    rows.reserve(quotes.size());
    for (const auto& q : quotes) {
        const double model = model_price(q, p, ra, spot, rate, y0, averaged);
        rows.push_back({q.strike, q.mid, model, model - q.mid});
    }
    return rows;
}

}  // namespace expou

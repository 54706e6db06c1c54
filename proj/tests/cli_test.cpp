#include <doctest.h>

#include "approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "expou/calibration.hpp"
#include "expou/cli.hpp"

using namespace expou;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header = nullptr) {
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "expou_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 7-strike chain at T=10 priced by the model itself.
fs::path write_chain(const std::string& name, const RiskAversion& ra, double y0) {
    const ModelParams p = ModelParams::reference();
    std::vector<OptionQuote> q;
    for (double k : {91.0, 94.0, 97.0, 100.0, 103.0, 106.0, 109.0}) {
        const double mid = model_price(OptionQuote::from_mid(k, 10.0, 1.0), p, ra, 100.0, 0.02 / 252.0, y0);
        q.push_back(OptionQuote::from_mid(k, 10.0, mid));
    }
    const auto path = scratch(name);
    std::ofstream f(path);
    write_quotes(f, q);
    return path;
}

}  // namespace

TEST_CASE("smile matches the recorded curve") {
    const auto r = run({"smile", "--moneyness_min", "0.9", "--moneyness_max", "1.1", "--moneyness_points", "3"});
    REQUIRE(r.code == cli::kOk);
    const fs::path golden = fs::path(EXPOU_TEST_DATA) / "smile_golden.csv";
    std::string h1, h2;
    const auto got = parse_csv(r.out, &h1);
    const auto want = parse_csv(slurp(golden), &h2);
    CHECK(h1 == "moneyness,implied_vol_annual");
    CHECK(h1 == h2);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i][0] == want[i][0]);
        CHECK(got[i][1] == rel(want[i][1], 1e-10));
    }
}

TEST_CASE("flat smile without vol-of-vol") {
    auto max_gap = [](const std::string& rho, const std::string& k) {
        const auto r = run({"smile", "--rho", rho, "--k", k, "--lambda0", "0", "--lambda1", "0", "--z0", "0"});
        REQUIRE(r.code == cli::kOk);
        const auto rows = parse_csv(r.out);
        CHECK(rows.size() == 101);
        double gap = 0.0;
        for (const auto& row : rows) gap = std::max(gap, std::abs(row[1] - 0.01 * std::sqrt(252.0)));
        return gap;
    };
    CHECK(max_gap("0", "1e-6") < 1e-6);
    // The skew term is linear in k, so with leverage the smile only flattens proportionally.
    const double g6 = max_gap("-0.4", "1e-6");
    const double g7 = max_gap("-0.4", "1e-7");
    CHECK(g6 < 1e-5);
    CHECK(g6 / g7 == rel(10.0, 1e-2));
}

TEST_CASE("price table") {
    std::string header;
    const auto r = run({"price", "--moneyness_points", "41"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "moneyness,call,bs,diff");
    REQUIRE(rows.size() == 41);
    int sign_changes = 0;
    double where = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::abs(rows[i][3] - (rows[i][1] - rows[i][2])) < 1e-11 * std::max(1.0, rows[i][1]));
        // Ignore the far wings, where diff is below print noise.
        if (rows[i][0] < 0.93 || rows[i][0] > 1.07) continue;
        if ((rows[i][3] > 0) != (rows[i - 1][3] > 0)) {
            ++sign_changes;
            where = rows[i][0];
        }
    }
    CHECK(sign_changes >= 1);
    CHECK(std::abs(where - 1.0) < 0.06);
}

TEST_CASE("density integrates to one") {
    std::string header;
    const auto r = run({"density"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "x,p");
    REQUIRE(rows.size() == 401);
    double mass = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) mass += 0.5 * (rows[i][1] + rows[i - 1][1]) * (rows[i][0] - rows[i - 1][0]);
    CHECK(std::abs(mass - 1.0) < 1e-4);
}

TEST_CASE("greeks") {
    std::string header;
    const auto r = run({"greeks", "--moneyness_points", "21"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "moneyness,delta");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] > rows[i - 1][1]);
}

TEST_CASE("simulate is deterministic") {
    const std::vector<std::string> args{"simulate", "--n_paths", "2000", "--moneyness_points", "5", "--threads", "2"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == cli::kOk);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("moneyness,mc_price,std_err,analytic,abs_diff\n", 0) == 0);

    const auto file = scratch("sim.csv");
    auto with_file = args;
    with_file.insert(with_file.end(), {"-o", file.string()});
    REQUIRE(run(with_file).code == cli::kOk);
    CHECK(slurp(file) == a.out);
}

TEST_CASE("stats") {
    std::string header;
    const auto r = run({"stats", "--stats_paths", "200", "--stats_horizon_days", "10", "--tau", "0", "--tau", "-2"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "tau,leverage_mc,leverage_se,leverage_fml,autocorr_mc,autocorr_se,autocorr_fml");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][3] == rel(-12.84, 1e-3));
    CHECK(rows[1][3] == 0.0);
}

TEST_CASE("paths") {
    const auto r = run({"paths", "--n_paths", "2", "--maturity_days", "1", "--dt", "0.5"});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.rfind("path,step,t_days,x,y\n", 0) == 0);
    CHECK(parse_csv(r.out).size() == 6);
}

TEST_CASE("calibrate round trip") {
    const double sigma0 = 0.1655;
    const double y0 = y0_from_vol_index(sigma0, 0.01);
    const auto chain = write_chain("chain.csv", {1e-3, 1e-3}, y0);
    const auto rep = scratch("repricing.csv");
    std::string header;
    const auto r = run({"calibrate", chain.string(), "--sigma0_annual", "0.1655", "--rate_annual", "0.02", "--repricing",
                        rep.string()});
    REQUIRE(r.code == cli::kOk);
    const auto rows = parse_csv(r.out, &header);
    CHECK(header == "lambda0,lambda1,rmse,n_quotes,converged,iterations");
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0][0] - 1e-3) < 1e-5);
    CHECK(std::abs(rows[0][1] - 1e-3) < 1e-5);
    CHECK(rows[0][3] == 7);
    CHECK(rows[0][4] == 1);

    std::string rep_header;
    const auto table = parse_csv(slurp(rep), &rep_header);
    CHECK(rep_header == "strike,mid,model,residual");
    CHECK(table.size() == 7);

    // Mixed signs, well away from the starting simplex.
    const auto dear = write_chain("dear.csv", {-2e-3, 5e-3}, y0);
    const auto d = run({"calibrate", dear.string(), "--sigma0_annual", "0.1655", "--rate_annual", "0.02"});
    REQUIRE(d.code == cli::kOk);
    const auto drow = parse_csv(d.out);
    CHECK(std::abs(drow[0][0] + 2e-3) < 1e-5);
    CHECK(std::abs(drow[0][1] - 5e-3) < 1e-5);
}

TEST_CASE("calibrate rejects bad input") {
    const auto missing = run({"calibrate", "/nonexistent/quotes.csv"});
    CHECK(missing.code == cli::kInputError);
    CHECK(missing.err.find("/nonexistent/quotes.csv") != std::string::npos);

    const auto single = scratch("single.csv");
    {
        std::ofstream f(single);
        f << "strike,maturity_days,bid,ask\n100,10,1.5,1.6\n105,10,0.9,0.8\n";
    }
    const auto r = run({"calibrate", single.string()});
    CHECK(r.code == cli::kComputeError);
    CHECK(r.err.find("underdetermined") != std::string::npos);
    CHECK(r.err.find("crossed") != std::string::npos);
}

TEST_CASE("config file and environment") {
    const auto ini = scratch("flat.ini");
    {
        std::ofstream f(ini);
        f << "rho = 0\nk = 1e-6\nlambda0 = 0\nlambda1 = 0\nz0 = 0\nmoneyness_points = 3\n";
    }
    const auto from_file = run({"--config", ini.string(), "smile"});
    REQUIRE(from_file.code == cli::kOk);
    for (const auto& row : parse_csv(from_file.out)) CHECK(std::abs(row[1] - 0.01 * std::sqrt(252.0)) < 1e-6);

    // Flags beat the file.
    const auto overridden = run({"--config", ini.string(), "smile", "--moneyness_points", "5"});
    CHECK(parse_csv(overridden.out).size() == 5);

    ::setenv(cli::kConfigEnvVar, ini.string().c_str(), 1);
    const auto from_env = run({"smile"});
    ::unsetenv(cli::kConfigEnvVar);
    CHECK(from_env.out == from_file.out);

    CHECK(run({"--config", "/nonexistent/expou.ini", "smile"}).code == cli::kInputError);
}

TEST_CASE("argument validation") {
    CHECK(run({"price", "--m", "-1"}).code == cli::kInputError);
    CHECK(run({"price", "--rho", "2"}).code == cli::kInputError);
    CHECK(run({"price", "--moneyness_points", "0"}).code == cli::kInputError);
    CHECK(run({"price", "--bogus"}).code == cli::kInputError);
    CHECK(run({}).code == cli::kInputError);

    const auto clash = run({"price", "--z0", "0.1", "--sigma0_annual", "0.2", "--moneyness_points", "3"});
    CHECK(clash.code == cli::kOk);
    CHECK_FALSE(clash.err.empty());

    std::vector<std::string> warnings;
    cli::RawConfig raw;
    raw.m = -1.0;
    raw.dt = 0.0;
    try {
        cli::resolve_config(raw, warnings);
        FAIL("expected a config error");
    } catch (const cli::ConfigError& e) {
        CHECK(e.messages.size() >= 2);
    }
}

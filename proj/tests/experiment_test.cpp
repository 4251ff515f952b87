#include <gtest/gtest.h>

#include "klooster/experiment.hpp"

using namespace klooster;
using nlohmann::json;

namespace {

ExperimentConfig config(json j) {
    j["cache_dir"] = "";
    return parse_config(j);
}

RunResult run_quiet(const ExperimentConfig& c) { return run(c, RunOptions{nullptr, false}); }

std::vector<std::string> csv_lines(const std::string& body) {
    std::vector<std::string> out;
    std::istringstream in(body);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST(Rules, Parse) {
    EXPECT_EQ(Rule::parse("p").evaluate(101), 101.0);
    EXPECT_EQ(Rule::parse("p-1").evaluate_integer(101), 100U);
    EXPECT_NEAR(Rule::parse("p^0.5").evaluate(10000), 100.0, 1e-9);
    EXPECT_EQ(Rule::parse("p^0.5").evaluate_integer(10000), 100U);
    EXPECT_EQ(Rule::parse("N^0.5").evaluate(0, 49), 7.0);
    EXPECT_EQ(Rule::parse("fixed:12").evaluate(5), 12.0);
    EXPECT_NEAR(Rule::parse("log_power:2").evaluate(0, std::exp(3.0)), 9.0, 1e-12);
    EXPECT_TRUE(Rule::parse("N").uses_N());
    EXPECT_FALSE(Rule::parse("p^2").uses_N());
    EXPECT_THROW(Rule::parse("q^2"), Error);
    EXPECT_THROW(Rule::parse("p^x"), Error);
    EXPECT_THROW(Rule::parse("N").evaluate(5), Error);
}

TEST(Config, PrimeRangeAndDefaults) {
    const auto c = config({{"experiment", "Table"}, {"primes", {{"from", 100}, {"count", 3}}}});
    EXPECT_EQ(c.primes, (std::vector<std::uint64_t>{101, 103, 107}));
    EXPECT_FALSE(c.ell);
    EXPECT_EQ(c.C, 10.0);
}

TEST(Config, RejectsBadInput) {
    const auto bad = [](json j) {
        try {
            parse_config(j);
            return false;
        } catch (const Error& e) {
            return e.kind() == ErrorKind::ConfigError;
        }
    };
    EXPECT_TRUE(bad({{"experiment", "nope"}, {"primes", {101}}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}, {"primes", {100}}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}, {"primes", {2}}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}, {"primes", {101}}, {"ell", 3}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}, {"primes", {101}}, {"r", 0}}));
    EXPECT_TRUE(bad({{"experiment", "Q"}, {"primes", {101}}, {"format", "xml"}}));
    EXPECT_TRUE(bad(json::array()));
}

TEST(Config, RoundTrip) {
    const auto c = config({{"experiment", "VerifyT12"}, {"primes", {1009}}, {"N_rule", {"p", "p^0.9"}}, {"ell", 8}});
    const auto again = parse_config(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, InvalidCellAbortsBeforeAnyWork) {
    // the second N exceeds p, so nothing may run
    auto c = config({{"experiment", "VerifyT12"}, {"primes", {1009}}, {"N_rule", {"p", "p^2"}}, {"ell", 8}});
    try {
        run_quiet(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
}

TEST(Run, VerifyT12Schema) {
    const auto c = config({{"experiment", "VerifyT12"}, {"primes", {1009}}, {"ell", 8}});
    const auto r = run_quiet(c);
    const auto lines = csv_lines(r.body);
    ASSERT_EQ(lines.size(), 2U);
    EXPECT_EQ(lines[0], "p,s,N,ell,D0,lhs,rhs,ratio,pass,elapsed_s,status");
    EXPECT_TRUE(lines[1].starts_with("1009,2,1009,8,"));
    EXPECT_TRUE(lines[1].ends_with(",ok"));
    EXPECT_EQ(r.exit_code(), 0);
}

TEST(Run, JcountMatchesDirectCount) {
    const auto c = config({{"experiment", "Jcount"}, {"primes", {5}}, {"H_rule", "fixed:4"}, {"D_rule", "p-1"}, {"r", 1}});
    const auto r = run_quiet(c);
    const auto lines = csv_lines(r.body);
    ASSERT_EQ(lines.size(), 2U);
    std::uint64_t direct = 0;
    for (int x = 1; x <= 4; ++x)
        for (int y = 1; y <= 4; ++y)
            for (int k = 1; k <= 4; ++k)
                for (int m = 1; m <= 4; ++m) direct += (x * k) % 5 == (y * m) % 5;
    EXPECT_TRUE(lines[1].starts_with("5,4,4,1,4," + std::to_string(direct) + ",")) << lines[1];
}

TEST(Run, WorkerCountDoesNotChangeOutput) {
    auto c = config({{"experiment", "TypeI"},
                     {"primes", {1009, 1013, 1019}},
                     {"N_rule", {"p^0.8", "p"}},
                     {"D_rule", {"fixed:5", "p^0.3"}},
                     {"r", {1, -2}},
                     {"intervals", "random"},
                     {"seed", 11}});
    c.workers = 1;
    const auto one = run_quiet(c).body;
    c.workers = 4;
    EXPECT_EQ(run_quiet(c).body, one);
}

TEST(Run, JsonFormat) {
    const auto c = config({{"experiment", "Table"}, {"primes", {101, 103}}, {"s_values", {2, 3}}, {"format", "json"}});
    const auto r = run_quiet(c);
    const auto j = json::parse(r.body);
    ASSERT_EQ(j.at("rows").size(), 4U);
    EXPECT_EQ(j["rows"][0]["p"], 101);
    EXPECT_EQ(j["rows"][0]["deligne_pass"], true);
    EXPECT_EQ(j["rows"][3]["s"], 3);
    EXPECT_EQ(r.manifest.at("cells").size(), 4U);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

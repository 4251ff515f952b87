#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "klooster/bounds.hpp"
#include "klooster/cache.hpp"
#include "klooster/error.hpp"
#include "klooster/fft.hpp"
#include "klooster/integers.hpp"
#include "klooster/kloosterman.hpp"
#include "klooster/rng.hpp"
#include "klooster/rules.hpp"
#include "klooster/sums.hpp"

namespace klooster {

inline constexpr std::string_view kLibraryVersion = "1.0.0";
inline constexpr std::string_view kCsvSchemaVersion = "1";

enum class Experiment { Table, Q, R, PM, TypeI, Incomplete, Jcount, VerifyT12, VerifyT15, VerifyLemmas };
enum class OutputFormat { Csv, Json };

inline constexpr std::array<std::pair<Experiment, std::string_view>, 10> kExperimentNames{{
    {Experiment::Table, "Table"},
    {Experiment::Q, "Q"},
    {Experiment::R, "R"},
    {Experiment::PM, "PM"},
    {Experiment::TypeI, "TypeI"},
    {Experiment::Incomplete, "Incomplete"},
    {Experiment::Jcount, "Jcount"},
    {Experiment::VerifyT12, "VerifyT12"},
    {Experiment::VerifyT15, "VerifyT15"},
    {Experiment::VerifyLemmas, "VerifyLemmas"},
}};

inline std::string_view to_string(Experiment e) {
    for (const auto& [k, name] : kExperimentNames) {
        if (k == e) return name;
    }
    return "?";
}

inline Experiment parse_experiment(std::string_view name) {
    for (const auto& [k, n] : kExperimentNames) {
        if (n == name) return k;
    }
    throw Error(ErrorKind::ConfigError, "unknown experiment '" + std::string(name) + "'");
}

struct ExperimentConfig {
    Experiment experiment = Experiment::Table;
    std::vector<std::uint64_t> primes;
    std::vector<unsigned> s_values{2};
    std::vector<Rule> N_rules{Rule::parse("p")};
    std::vector<Rule> y_rules{Rule::parse("log_power:2")};
    std::vector<Rule> D_rules{Rule::parse("p^0.25")};
    std::vector<Rule> H_rules{Rule::parse("p^0.5")};
    std::vector<int> r_values{2};
    std::optional<int> ell;  // nullopt: chosen per cell
    int ell_max = 16;
    std::uint64_t seed = 0;
    double C = 10.0;
    std::string output = "results.csv";
    OutputFormat format = OutputFormat::Csv;
    std::string cache_dir = ".klooster-cache";
    unsigned workers = 1;
    WeightPreset weights = WeightPreset::Random;
    bool random_intervals = false;
    unsigned trials = 50;
    bool timings = false;
};

namespace detail {

inline std::vector<Rule> parse_rules(const nlohmann::json& j) {
    std::vector<Rule> out;
    if (j.is_string()) {
        out.push_back(Rule::parse(j.get<std::string>()));
    } else if (j.is_array()) {
        for (const auto& item : j) out.push_back(Rule::parse(item.get<std::string>()));
    } else {
        throw Error(ErrorKind::ConfigError, "rule must be a string or a list of strings");
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, "empty rule list");
    return out;
}

inline nlohmann::json rules_json(const std::vector<Rule>& rules) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rules) arr.push_back(r.text());
    return arr;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
        c.experiment = parse_experiment(j.at("experiment").get<std::string>());
        const auto& primes = j.at("primes");
        if (primes.is_array()) {
            c.primes = primes.get<std::vector<std::uint64_t>>();
        } else if (primes.is_object()) {
            std::uint64_t q = primes.at("from").get<std::uint64_t>();
            const auto count = primes.at("count").get<std::uint64_t>();
            for (std::uint64_t i = 0; i < count; ++i) {
                q = next_prime(q);
                c.primes.push_back(q);
                ++q;
            }
        } else {
            throw Error(ErrorKind::ConfigError, "primes must be a list or {from, count}");
        }
        if (c.primes.empty()) throw Error(ErrorKind::ConfigError, "no primes given");
        for (auto p : c.primes) {
            if (p < 3 || !is_prime(p)) throw Error(ErrorKind::ConfigError, std::to_string(p) + " is not an odd prime");
        }
        if (j.contains("s_values")) c.s_values = j.at("s_values").get<std::vector<unsigned>>();
        if (j.contains("N_rule")) c.N_rules = detail::parse_rules(j.at("N_rule"));
        if (j.contains("y_rule")) c.y_rules = detail::parse_rules(j.at("y_rule"));
        if (j.contains("D_rule")) c.D_rules = detail::parse_rules(j.at("D_rule"));
        if (j.contains("H_rule")) c.H_rules = detail::parse_rules(j.at("H_rule"));
        if (j.contains("r")) {
            const auto& r = j.at("r");
            c.r_values = r.is_array() ? r.get<std::vector<int>>() : std::vector<int>{r.get<int>()};
        }
        if (j.contains("ell")) {
            const auto& e = j.at("ell");
            if (e.is_string()) {
                if (e.get<std::string>() != "auto") throw Error(ErrorKind::ConfigError, "ell must be an even integer or \"auto\"");
            } else {
                c.ell = e.get<int>();
                if (*c.ell < 2 || *c.ell % 2 != 0) throw Error(ErrorKind::ConfigError, "ell must be even and >= 2");
            }
        }
        if (j.contains("ell_max")) c.ell_max = j.at("ell_max").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("C")) c.C = j.at("C").get<double>();
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        if (j.contains("format")) {
            const auto f = j.at("format").get<std::string>();
            if (f == "csv") {
                c.format = OutputFormat::Csv;
            } else if (f == "json") {
                c.format = OutputFormat::Json;
            } else {
                throw Error(ErrorKind::ConfigError, "format must be csv or json");
            }
        }
        if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
        if (c.workers == 0) throw Error(ErrorKind::ConfigError, "workers must be positive");
        if (j.contains("weights")) {
            const auto w = j.at("weights").get<std::string>();
            if (w == "ones") {
                c.weights = WeightPreset::Ones;
            } else if (w == "mobius") {
                c.weights = WeightPreset::Mobius;
            } else if (w == "random") {
                c.weights = WeightPreset::Random;
            } else {
                throw Error(ErrorKind::ConfigError, "weights must be ones, mobius or random");
            }
        }
        if (j.contains("intervals")) {
            const auto v = j.at("intervals").get<std::string>();
            if (v != "full" && v != "random") throw Error(ErrorKind::ConfigError, "intervals must be full or random");
            c.random_intervals = v == "random";
        }
        if (j.contains("trials")) c.trials = j.at("trials").get<unsigned>();
        if (j.contains("timings")) c.timings = j.at("timings").get<bool>();
        for (unsigned s : c.s_values) {
            if (s < 1) throw Error(ErrorKind::ConfigError, "s must be >= 1");
        }
        for (int r : c.r_values) {
            if (r == 0) throw Error(ErrorKind::ConfigError, "r must be nonzero");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = std::string(to_string(c.experiment));
    j["primes"] = c.primes;
    j["s_values"] = c.s_values;
    j["N_rule"] = detail::rules_json(c.N_rules);
    j["y_rule"] = detail::rules_json(c.y_rules);
    j["D_rule"] = detail::rules_json(c.D_rules);
    j["H_rule"] = detail::rules_json(c.H_rules);
    j["r"] = c.r_values;
    j["ell"] = c.ell ? nlohmann::json(*c.ell) : nlohmann::json("auto");
    j["ell_max"] = c.ell_max;
    j["seed"] = c.seed;
    j["C"] = c.C;
    j["output"] = c.output;
    j["format"] = c.format == OutputFormat::Csv ? "csv" : "json";
    j["cache_dir"] = c.cache_dir;
    j["workers"] = c.workers;
    j["weights"] = c.weights == WeightPreset::Ones ? "ones" : (c.weights == WeightPreset::Mobius ? "mobius" : "random");
    j["intervals"] = c.random_intervals ? "random" : "full";
    j["trials"] = c.trials;
    j["timings"] = c.timings;
    return j;
}

using Value = std::variant<std::monostate, std::int64_t, std::uint64_t, double, bool, std::string>;

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

inline std::string format_value(const Value& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(std::uint64_t x) const { return std::to_string(x); }
        std::string operator()(double x) const { return format_double(x); }
        std::string operator()(bool x) const { return x ? "true" : "false"; }
        std::string operator()(const std::string& x) const {
            if (x.find_first_of(",\"\n") == std::string::npos) return x;
            std::string quoted = "\"";
            for (char c : x) {
                if (c == '"') quoted += '"';
                quoted += c;
            }
            return quoted + "\"";
        }
    };
    return std::visit(Visitor{}, v);
}

inline nlohmann::json value_json(const Value& v) {
    struct Visitor {
        nlohmann::json operator()(std::monostate) const { return nullptr; }
        nlohmann::json operator()(std::int64_t x) const { return x; }
        nlohmann::json operator()(std::uint64_t x) const { return x; }
        nlohmann::json operator()(double x) const { return x; }
        nlohmann::json operator()(bool x) const { return x; }
        nlohmann::json operator()(const std::string& x) const { return x; }
    };
    return std::visit(Visitor{}, v);
}

/// Output columns for each experiment; "status" is always last.
inline std::vector<std::string> columns(Experiment e) {
    switch (e) {
        case Experiment::Table:
            return {"p", "s", "method", "max_abs_error", "max_abs", "deligne_pass", "complete_sum_dev", "conj_dev",
                    "elapsed_s", "status"};
        case Experiment::Q:
            return {"p", "s", "N", "n_terms", "Q_re", "Q_im", "Q_abs", "decomposed_re", "decomposed_im",
                    "identity_dev", "trivial_bound", "sqrtN_bound", "elapsed_s", "status"};
        case Experiment::R:
            return {"p", "s", "N", "y", "Psi", "alpha", "R_re", "R_im", "R_abs", "elapsed_s", "status"};
        case Experiment::PM:
            return {"p", "s", "N", "P_re", "P_im", "M_mu_re", "M_mu_im", "M_tau_re", "M_tau_im", "elapsed_s", "status"};
        case Experiment::TypeI:
            return {"p", "s", "N", "D", "r", "ell", "weights", "intervals", "n_terms", "re", "im", "lhs", "rhs",
                    "ratio", "pass", "elapsed_s", "status"};
        case Experiment::Incomplete:
            return {"p", "s", "trials", "max_ratio_single", "max_ratio_double", "bound", "pass", "elapsed_s", "status"};
        case Experiment::Jcount:
            return {"p", "H", "D", "r", "M_size", "count", "diagonal", "leading", "ratio", "elapsed_s", "status"};
        case Experiment::VerifyT12:
            return {"p", "s", "N", "ell", "D0", "lhs", "rhs", "ratio", "pass", "elapsed_s", "status"};
        case Experiment::VerifyT15:
            return {"p", "s", "N", "y", "alpha", "beta", "gamma", "Psi", "L0", "lhs", "rhs", "ratio", "pass",
                    "elapsed_s", "status"};
        case Experiment::VerifyLemmas:
            return {"p", "s", "N", "D", "ell", "complete_single", "complete_twisted", "incomplete", "typeI", "J",
                    "pass", "elapsed_s", "status"};
    }
    return {};
}

/// One point of the sweep.
struct Cell {
    std::size_t index = 0;
    std::uint64_t p = 0;
    unsigned s = 0;
    std::uint64_t N = 0;
    std::optional<double> y;
    std::optional<std::uint64_t> D;
    std::optional<std::uint64_t> H;
    std::optional<int> r;
    std::optional<int> ell;
};

namespace detail {

inline int typeI_auto_ell(double p, double D, double N, int ell_max) {
    int best = 0;
    double best_rhs = std::numeric_limits<double>::infinity();
    for (int ell = 2; ell <= ell_max; ell += 2) {
        if (!(N > 2.0 * std::pow(p, 1.0 / ell))) continue;
        const double v = bound_typeI(p, D, N, ell);
        if (v < best_rhs) {
            best_rhs = v;
            best = ell;
        }
    }
    if (best == 0) throw Error(ErrorKind::NoFeasibleEll, "no even ell with N > 2 p^(1/ell)");
    return best;
}

inline void check(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ConfigError, what);
}

}  // namespace detail

/// Expands the sweep in canonical order and validates every cell's
/// preconditions; throws ConfigError before any computation.
inline std::vector<Cell> expand_cells(const ExperimentConfig& c) {
    std::vector<Cell> cells;
    const Experiment e = c.experiment;
    auto push = [&](Cell cell) {
        cell.index = cells.size();
        cells.push_back(cell);
    };
    for (std::uint64_t p : c.primes) {
        const double pd = static_cast<double>(p);
        if (e == Experiment::Jcount) {
            for (const auto& h_rule : c.H_rules) {
                for (const auto& d_rule : c.D_rules) {
                    for (int r : c.r_values) {
                        Cell cell{0, p, 0, 0};
                        cell.H = h_rule.evaluate_integer(pd);
                        cell.D = d_rule.evaluate_integer(pd);
                        cell.r = r;
                        detail::check(*cell.H >= 1, "H must be >= 1");
                        detail::check(*cell.D >= 1 && *cell.D < p, "Jcount needs 1 <= D < p");
                        push(cell);
                    }
                }
            }
            continue;
        }
        for (unsigned s : c.s_values) {
            Cell base{0, p, s, 0};
            if (e == Experiment::Table || e == Experiment::Incomplete) {
                push(base);
                continue;
            }
            for (const auto& n_rule : c.N_rules) {
                Cell cell = base;
                cell.N = n_rule.evaluate_integer(pd);
                const double Nd = static_cast<double>(cell.N);
                detail::check(cell.N >= 1, "N must be >= 1 (rule " + n_rule.text() + ")");
                switch (e) {
                    case Experiment::Q:
                    case Experiment::PM:
                        push(cell);
                        break;
                    case Experiment::VerifyT12: {
                        cell.ell = c.ell ? *c.ell : optimal_ell(pd, Nd, c.ell_max);
                        detail::check(theorem12_window(pd, Nd, *cell.ell),
                                      "N=" + std::to_string(cell.N) + " outside [p^(1/2+2/ell), p] for p=" +
                                          std::to_string(p));
                        push(cell);
                        break;
                    }
                    case Experiment::R:
                    case Experiment::VerifyT15:
                        for (const auto& y_rule : c.y_rules) {
                            Cell yc = cell;
                            yc.y = y_rule.evaluate(pd, Nd);
                            detail::check(*yc.y >= 2.0, "y must be >= 2");
                            if (e == Experiment::VerifyT15) {
                                detail::check(Nd >= 16 && *yc.y <= Nd, "need N >= 16 and y <= N");
                                detail::check(2 * std::log(Nd) >= std::log(pd), "need N >= p^(1/2)");
                                detail::check(*yc.y >= std::log(Nd), "need y >= log N");
                            }
                            push(yc);
                        }
                        break;
                    case Experiment::TypeI:
                    case Experiment::VerifyLemmas:
                        for (const auto& d_rule : c.D_rules) {
                            for (int r : c.r_values) {
                                Cell dc = cell;
                                dc.D = d_rule.evaluate_integer(pd, Nd);
                                dc.r = r;
                                detail::check(*dc.D >= 1 && *dc.D < p && cell.N <= p, "type-I sums need 1 <= D < p, N <= p");
                                dc.ell = c.ell ? *c.ell
                                               : detail::typeI_auto_ell(pd, static_cast<double>(*dc.D), Nd, c.ell_max);
                                push(dc);
                                if (e == Experiment::VerifyLemmas) break;
                            }
                        }
                        break;
                    default:
                        break;
                }
            }
        }
    }
    return cells;
}

struct CellOutcome {
    std::map<std::string, Value> values;
    std::string status = "pending";
    double elapsed = 0.0;
    bool cache_hit = false;
    std::optional<ErrorKind> error;
};

namespace detail {

inline void put_complex(std::map<std::string, Value>& v, const std::string& prefix, Complex z) {
    v[prefix + "_re"] = z.real();
    v[prefix + "_im"] = z.imag();
}

// max_h |sum_x f(x) e_p(hx)| over all h via one transform of length p.
inline double max_additive_transform(const std::vector<Complex>& f) {
    const Dft dft(f.size());
    double worst = 0.0;
    for (const auto& z : dft.forward(f)) worst = std::max(worst, std::abs(z));
    return worst;
}

struct IncompleteScan {
    double single = 0.0;
    double twisted = 0.0;
};

inline IncompleteScan scan_incomplete(const KloostermanTable& table, unsigned trials, CounterRng& rng) {
    const std::uint64_t p = table.p;
    const double bound = bound_incomplete(static_cast<double>(p));
    IncompleteScan out;
    for (unsigned t = 0; t < trials; ++t) {
        const std::uint64_t d = rng.uniform_int(1, p - 1);
        std::uint64_t e = rng.uniform_int(1, p - 1);
        while (e == d) e = rng.uniform_int(1, p - 1);
        const std::uint64_t K = rng.uniform_int(1, p);
        out.single = std::max(out.single, std::abs(sum_incomplete(table, d, std::nullopt, K).value) / bound);
        out.twisted = std::max(out.twisted, std::abs(sum_incomplete(table, d, e, K).value) / bound);
    }
    return out;
}

}  // namespace detail

/// Evaluates one cell. Throws on failure; the caller records the status.
inline std::map<std::string, Value> evaluate_cell(const ExperimentConfig& c, const Cell& cell, TableCache& cache,
                                                  bool& cache_hit) {
    std::map<std::string, Value> v;
    v["p"] = cell.p;
    if (c.experiment != Experiment::Jcount) v["s"] = static_cast<std::uint64_t>(cell.s);
    const double pd = static_cast<double>(cell.p);
    const double Nd = static_cast<double>(cell.N);

    if (c.experiment == Experiment::Jcount) {
        const auto M = power_residue_set(cell.p, *cell.D, *cell.r);
        const auto J = count_J(cell.p, *cell.H, M);
        const double A = static_cast<double>(*cell.H) / 2.0;
        const double leading = bound_J_leading(pd, A, static_cast<double>(*cell.D));
        v["H"] = *cell.H;
        v["D"] = *cell.D;
        v["r"] = static_cast<std::int64_t>(*cell.r);
        v["M_size"] = static_cast<std::uint64_t>(M.size());
        v["count"] = J.count;
        v["diagonal"] = *cell.H * static_cast<std::uint64_t>(M.size());
        v["leading"] = leading;
        v["ratio"] = static_cast<double>(J.count) / leading;
        return v;
    }

    auto [table_ptr, hit] = cache.get(cell.s, cell.p);
    cache_hit = hit;
    const KloostermanTable& table = *table_ptr;

    switch (c.experiment) {
        case Experiment::Table: {
            const auto deligne = verify_deligne(table);
            v["method"] = std::string(table.method == Method::Bulk ? "bulk" : "direct");
            v["max_abs_error"] = table.max_abs_error;
            v["max_abs"] = deligne.lhs;
            v["deligne_pass"] = deligne.pass;
            v["complete_sum_dev"] = complete_sum_deviation(table);
            v["conj_dev"] = conjugation_deviation(table);
            break;
        }
        case Experiment::Q: {
            const auto sieves = build_sieves(cell.N);
            const auto q = sum_Q(table, sieves, cell.N);
            const auto qd = sum_Q_decomposed(table, sieves, cell.N);
            v["N"] = cell.N;
            v["n_terms"] = q.n_terms;
            detail::put_complex(v, "Q", q.value);
            v["Q_abs"] = std::abs(q.value);
            detail::put_complex(v, "decomposed", qd.value);
            v["identity_dev"] = std::abs(q.value - qd.value);
            v["trivial_bound"] = bound_trivial_Q(cell.N, cell.s);
            v["sqrtN_bound"] = bound_sqrtN(pd, Nd);
            break;
        }
        case Experiment::R: {
            const auto smooth = smooth_set(cell.N, *cell.y);
            const auto r = sum_R(table, smooth, cell.N, *cell.y);
            v["N"] = cell.N;
            v["y"] = *cell.y;
            v["Psi"] = static_cast<std::uint64_t>(smooth.size());
            if (Nd >= 16 && *cell.y <= Nd) v["alpha"] = saddle_point_alpha(Nd, *cell.y);
            detail::put_complex(v, "R", r.value);
            v["R_abs"] = std::abs(r.value);
            break;
        }
        case Experiment::PM: {
            const auto sieves = build_sieves(cell.N);
            v["N"] = cell.N;
            detail::put_complex(v, "P", sum_P(table, sieves, cell.N).value);
            detail::put_complex(v, "M_mu", sum_M(table, sieves, cell.N, Weight::Mobius).value);
            detail::put_complex(v, "M_tau", sum_M(table, sieves, cell.N, Weight::Tau).value);
            break;
        }
        case Experiment::TypeI: {
            const std::uint64_t D = *cell.D;
            const std::uint64_t cell_seed = CounterRng(c.seed, cell.index).next();
            const auto weights = typeI_weights(c.weights, D, cell_seed);
            const auto intervals = typeI_intervals(D, cell.N, c.random_intervals, cell_seed);
            const auto sum = sum_typeI(table, weights, intervals, *cell.r, D, cell.N);
            const auto rep = report(sum, bound_typeI(pd, static_cast<double>(D), Nd, *cell.ell), c.C);
            v["N"] = cell.N;
            v["D"] = D;
            v["r"] = static_cast<std::int64_t>(*cell.r);
            v["ell"] = static_cast<std::int64_t>(*cell.ell);
            v["weights"] = std::string(c.weights == WeightPreset::Ones     ? "ones"
                                       : c.weights == WeightPreset::Mobius ? "mobius"
                                                                           : "random");
            v["intervals"] = std::string(c.random_intervals ? "random" : "full");
            v["n_terms"] = sum.n_terms;
            v["re"] = sum.value.real();
            v["im"] = sum.value.imag();
            v["lhs"] = rep.lhs;
            v["rhs"] = rep.rhs;
            v["ratio"] = rep.ratio;
            v["pass"] = rep.pass;
            break;
        }
        case Experiment::Incomplete: {
            CounterRng rng(c.seed, cell.index);
            const auto scan = detail::scan_incomplete(table, c.trials, rng);
            v["trials"] = static_cast<std::uint64_t>(c.trials);
            v["max_ratio_single"] = scan.single;
            v["max_ratio_double"] = scan.twisted;
            v["bound"] = bound_incomplete(pd);
            v["pass"] = scan.single <= c.C && scan.twisted <= c.C;
            break;
        }
        case Experiment::VerifyT12: {
            const auto sieves = build_sieves(cell.N);
            const auto q = sum_Q(table, sieves, cell.N);
            const double rhs = bound_theorem12(pd, Nd, cell.s, *cell.ell);
            const auto rep = report(q, rhs, c.C);
            v["N"] = cell.N;
            v["ell"] = static_cast<std::int64_t>(*cell.ell);
            v["D0"] = balance_D0(pd, Nd, *cell.ell);
            v["lhs"] = rep.lhs;
            v["rhs"] = rep.rhs;
            v["ratio"] = rep.ratio;
            v["pass"] = rep.pass;
            break;
        }
        case Experiment::VerifyT15: {
            const auto smooth = smooth_set(cell.N, *cell.y);
            const double alpha = saddle_point_alpha(Nd, *cell.y);
            const auto b = bound_theorem15(pd, Nd, *cell.y, alpha, smooth.size());
            const auto rep = report(sum_R(table, smooth, cell.N, *cell.y), b.rhs, c.C);
            v["N"] = cell.N;
            v["y"] = *cell.y;
            v["alpha"] = alpha;
            v["beta"] = b.beta;
            v["gamma"] = b.gamma;
            v["Psi"] = static_cast<std::uint64_t>(smooth.size());
            v["L0"] = balance_L0(pd, Nd, alpha);
            v["lhs"] = rep.lhs;
            v["rhs"] = rep.rhs;
            v["ratio"] = rep.ratio;
            v["pass"] = rep.pass;
            break;
        }
        case Experiment::VerifyLemmas: {
            CounterRng rng(c.seed, cell.index);
            const double root_p = std::sqrt(pd);
            const double single = detail::max_additive_transform(table.values) / root_p;
            double twisted = 0.0;
            const unsigned twists = std::min(c.trials, 5U);
            for (unsigned t = 0; t < twists && cell.p > 3; ++t) {
                const std::uint64_t d = rng.uniform_int(2, cell.p - 1);
                std::vector<Complex> f(cell.p);
                for (std::uint64_t x = 0; x < cell.p; ++x) f[x] = table.values[x] * table.values[d * x % cell.p];
                twisted = std::max(twisted, detail::max_additive_transform(f) / root_p);
            }
            const auto scan = detail::scan_incomplete(table, c.trials, rng);
            const double incomplete = std::max(scan.single, scan.twisted);

            const std::uint64_t D = *cell.D;
            const int ell = *cell.ell;
            const auto weights = typeI_weights(WeightPreset::Random, D, rng.next());
            const auto intervals = typeI_intervals(D, cell.N, false);
            const auto typeI = sum_typeI(table, weights, intervals, *cell.r, D, cell.N);
            const double typeI_ratio = std::abs(typeI.value) / bound_typeI(pd, static_cast<double>(D), Nd, ell);

            const auto B = static_cast<std::uint64_t>(std::floor(std::pow(pd, 1.0 / ell)));
            const std::uint64_t A = std::max<std::uint64_t>(1, cell.N / (2 * std::max<std::uint64_t>(B, 1)));
            const auto M = power_residue_set(cell.p, D, *cell.r);
            const auto J = count_J(cell.p, 2 * A, M);
            const double Ad = static_cast<double>(A);
            const double Dd = static_cast<double>(D);
            const double j_ratio = static_cast<double>(J.count) / (bound_J_leading(pd, Ad, Dd) + Ad * Dd);

            v["N"] = cell.N;
            v["D"] = D;
            v["ell"] = static_cast<std::int64_t>(ell);
            v["complete_single"] = single;
            v["complete_twisted"] = twisted;
            v["incomplete"] = incomplete;
            v["typeI"] = typeI_ratio;
            v["J"] = j_ratio;
            v["pass"] = single <= c.C && twisted <= c.C && incomplete <= c.C && typeI_ratio <= c.C && j_ratio <= c.C;
            break;
        }
        case Experiment::Jcount:
            break;
    }
    return v;
}

struct RunOptions {
    const std::atomic<bool>* cancel = nullptr;
    bool write_files = true;
};

struct RunResult {
    std::string body;
    nlohmann::json manifest;
    std::size_t failed = 0;
    bool cancelled = false;
    int exit_code() const { return failed == 0 && !cancelled ? 0 : 1; }
};

inline std::string resolve_cache_dir(const ExperimentConfig& c) {
    if (const char* env = std::getenv("KLOOSTER_CACHE_DIR"); env != nullptr && *env != '\0') return env;
    return c.cache_dir;
}

/// Runs every cell on a pool of c.workers threads; rows are emitted in
/// canonical cell order so the output does not depend on scheduling.
inline RunResult run(const ExperimentConfig& c, const RunOptions& options = {}) {
    const auto start = std::chrono::steady_clock::now();
    const auto cells = expand_cells(c);
    const std::string cache_dir = resolve_cache_dir(c);
    TableCache cache(cache_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(cache_dir));

    std::vector<CellOutcome> outcomes(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            if (options.cancel != nullptr && options.cancel->load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            CellOutcome& out = outcomes[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                out.values = evaluate_cell(c, cells[i], cache, out.cache_hit);
                out.status = "ok";
            } catch (const Error& e) {
                out.status = std::string("error: ") + e.what();
                out.error = e.kind();
            } catch (const std::exception& e) {
                out.status = std::string("error: ") + e.what();
                out.error = ErrorKind::DomainError;
            }
            out.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    {
        std::vector<std::jthread> pool;
        const unsigned n = std::max(1U, std::min<unsigned>(c.workers, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1))));
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    }

    RunResult result;
    const auto cols = columns(c.experiment);
    nlohmann::json cell_log = nlohmann::json::array();
    nlohmann::json errors = nlohmann::json::array();
    std::ostringstream csv;
    nlohmann::json rows = nlohmann::json::array();
    if (c.format == OutputFormat::Csv) {
        for (std::size_t k = 0; k < cols.size(); ++k) csv << (k ? "," : "") << cols[k];
        csv << '\n';
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CellOutcome& out = outcomes[i];
        if (out.status == "pending") {
            out.status = "cancelled";
            result.cancelled = true;
        }
        if (out.values.empty()) {
            out.values["p"] = cells[i].p;
            if (c.experiment != Experiment::Jcount) out.values["s"] = static_cast<std::uint64_t>(cells[i].s);
        }
        out.values["status"] = out.status;
        if (c.timings) out.values["elapsed_s"] = out.elapsed;
        if (out.error) {
            ++result.failed;
            errors.push_back({{"cell", i}, {"kind", std::string(to_string(*out.error))}, {"message", out.status}});
        }
        cell_log.push_back(
            {{"cell", i}, {"p", cells[i].p}, {"s", cells[i].s}, {"elapsed_s", out.elapsed}, {"cache_hit", out.cache_hit},
             {"status", out.status}});
        if (c.format == OutputFormat::Csv) {
            for (std::size_t k = 0; k < cols.size(); ++k) {
                auto it = out.values.find(cols[k]);
                csv << (k ? "," : "") << (it == out.values.end() ? std::string() : format_value(it->second));
            }
            csv << '\n';
        } else {
            nlohmann::json row = nlohmann::json::object();
            for (const auto& col : cols) {
                auto it = out.values.find(col);
                row[col] = it == out.values.end() ? nlohmann::json(nullptr) : value_json(it->second);
            }
            rows.push_back(std::move(row));
        }
    }
    if (c.format == OutputFormat::Csv) {
        result.body = csv.str();
    } else {
        result.body = nlohmann::json{{"schema_version", kCsvSchemaVersion}, {"rows", rows}}.dump(2) + "\n";
    }
    result.manifest = {
        {"config", to_json(c)},
        {"library_version", kLibraryVersion},
        {"schema_version", kCsvSchemaVersion},
        {"cache_dir", cache_dir},
        {"cells", cell_log},
        {"errors", errors},
        {"cancelled", result.cancelled},
        {"total_elapsed_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
    };
    if (options.write_files) {
        const std::filesystem::path out_path(c.output);
        if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
        std::ofstream(out_path, std::ios::binary) << result.body;
        std::ofstream(out_path.string() + ".manifest.json", std::ios::binary) << result.manifest.dump(2) << '\n';
    }
    return result;
}

}  // namespace klooster

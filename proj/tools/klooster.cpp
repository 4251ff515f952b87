// Command-line front end: experiment sweeps, table generation, cache
// maintenance and the acceptance self-test.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "klooster/acceptance.hpp"
#include "klooster/cache.hpp"
#include "klooster/experiment.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

std::string default_cache_dir() {
    if (const char* env = std::getenv("KLOOSTER_CACHE_DIR"); env != nullptr && *env != '\0') return env;
    return ".klooster-cache";
}

void print_error_record(const klooster::Error& e) {
    nlohmann::json rec{{"error", std::string(klooster::to_string(e.kind()))}, {"message", e.what()}};
    std::cerr << rec.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyper-Kloosterman sums over square-free and smooth integers"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<unsigned> workers;
    std::optional<std::string> output;
    std::optional<std::string> format;
    std::optional<std::uint64_t> seed;
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--output", output, "output path");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed, "64-bit seed");

    auto* run_cmd = app.add_subcommand("run", "run an experiment sweep from a JSON config");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

    auto* selftest_cmd = app.add_subcommand("selftest", "run the acceptance suite");
    bool inject_fault = false;
    std::optional<std::string> selftest_cache;
    selftest_cmd->add_flag("--inject-deligne-fault", inject_fault, "corrupt one table entry (test hook)");
    selftest_cmd->add_option("--cache-dir", selftest_cache, "table cache directory");

    auto* table_cmd = app.add_subcommand("table", "build (or load) one table of K_{s,p}");
    std::uint64_t table_p = 0;
    unsigned table_s = 2;
    std::string table_method = "bulk";
    table_cmd->add_option("--p", table_p, "prime modulus")->required();
    table_cmd->add_option("--s", table_s, "dimension")->required();
    table_cmd->add_option("--method", table_method, "bulk or direct")->check(CLI::IsMember({"bulk", "direct"}));

    auto* cache_cmd = app.add_subcommand("cache", "manage the table cache");
    bool clear = false;
    cache_cmd->add_flag("--clear", clear, "delete cached tables");

    CLI11_PARSE(app, argc, argv);

    std::signal(SIGINT, on_interrupt);
    try {
        if (*run_cmd) {
            std::ifstream in(config_path);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw klooster::Error(klooster::ErrorKind::ConfigError, e.what());
            }
            auto config = klooster::parse_config(j);
            if (workers) config.workers = *workers;
            if (output) config.output = *output;
            if (format) config.format = *format == "json" ? klooster::OutputFormat::Json : klooster::OutputFormat::Csv;
            if (seed) config.seed = *seed;
            const auto result = klooster::run(config, klooster::RunOptions{&g_interrupted, true});
            for (const auto& err : result.manifest["errors"]) std::cerr << err.dump() << '\n';
            std::cerr << "wrote " << config.output << " (" << result.manifest["cells"].size() << " cells, "
                      << result.failed << " failed" << (result.cancelled ? ", cancelled" : "") << ")\n";
            return result.exit_code();
        }
        if (*selftest_cmd) {
            klooster::acceptance::Options options;
            options.cache_dir = selftest_cache.value_or(default_cache_dir());
            options.inject_deligne_fault = inject_fault;
            if (seed) options.seed = *seed;
            klooster::acceptance::Suite suite(options);
            bool all = true;
            for (int id = 1; id <= klooster::acceptance::Suite::kCount; ++id) {
                const auto r = suite.run(id);
                all = all && r.pass;
                std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << (r.id < 10 ? "0" : "") << r.id << "  " << r.name
                          << "\n         " << r.detail << std::endl;
                std::cerr << "criterion " << r.id << ": " << r.elapsed << " s\n";
            }
            std::cout << (all ? "selftest: all criteria passed" : "selftest: FAILED") << std::endl;
            return all ? 0 : 1;
        }
        if (*table_cmd) {
            const klooster::PrimeField ctx(table_p);
            klooster::KloostermanTable table;
            bool hit = false;
            const std::string dir = default_cache_dir();
            if (table_method == "bulk") {
                klooster::TableCache cache(std::filesystem::path{dir});
                auto [ptr, was_hit] = cache.get(table_s, table_p);
                table = *ptr;
                hit = was_hit;
            } else {
                table = klooster::kloosterman_direct_table(ctx, table_s);
            }
            const auto deligne = klooster::verify_deligne(table);
            std::cerr << "p=" << table.p << " s=" << table.s << " method=" << table_method
                      << " max|K|=" << deligne.lhs << " err=" << table.max_abs_error
                      << " cache_hit=" << (hit ? "true" : "false") << '\n';
            if (output) {
                std::ofstream out(*output);
                if (format && *format == "json") {
                    auto rows = nlohmann::json::array();
                    for (std::uint64_t n = 0; n < table.p; ++n) {
                        rows.push_back({{"n", n}, {"re", table.values[n].real()}, {"im", table.values[n].imag()}});
                    }
                    out << nlohmann::json{{"p", table.p}, {"s", table.s}, {"max_abs_error", table.max_abs_error},
                                          {"values", rows}}
                               .dump(2)
                        << '\n';
                } else {
                    out << "n,re,im\n";
                    for (std::uint64_t n = 0; n < table.p; ++n) {
                        out << n << ',' << klooster::format_double(table.values[n].real()) << ','
                            << klooster::format_double(table.values[n].imag()) << '\n';
                    }
                }
            }
            return 0;
        }
        if (*cache_cmd) {
            if (clear) {
                klooster::TableCache cache(std::filesystem::path{default_cache_dir()});
                std::cerr << "removed " << cache.clear() << " cached tables from " << default_cache_dir() << '\n';
            }
            return 0;
        }
    } catch (const klooster::Error& e) {
        print_error_record(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "Unexpected"}, {"message", e.what()}}.dump() << '\n';
        return 2;
    }
    return 0;
}

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "formkac/rng.hpp"
#include "formkac/runner.hpp"
#include "formkac/suite.hpp"

namespace {

int selftest(std::uint64_t seed)
{
    std::size_t total = 0, failed = 0;
    auto tally = [&](const char* suite, const std::vector<formkac::IdentityCheck>& checks) {
        std::size_t f = 0;
        for (const auto& c : checks) {
            if (!c.pass()) {
                ++f;
                std::cout << "FAIL " << suite << " " << c.name << " " << c.subject << " n=" << c.n << " q=" << c.q
                          << " error=" << formkac::format_number(c.error) << "\n";
            }
        }
        std::cout << suite << ": " << checks.size() - f << "/" << checks.size() << " passed\n";
        total += checks.size();
        failed += f;
    };
    tally("form_algebra", formkac::form_algebra_checks(formkac::kMaxDim, formkac::derive_seed(seed, "form_algebra")));
    tally("curvature", formkac::curvature_pinning_checks(formkac::derive_seed(seed, "curvature")));
    tally("spin", formkac::spinor_algebra_checks(formkac::derive_seed(seed, "spin")));
    std::cout << (failed == 0 ? "selftest passed" : "selftest FAILED") << " (" << total << " checks)\n";
    return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo and oracle experiments for Feynman-Kac formulas on forms and spinors"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    int threads = 0;
    std::optional<std::uint64_t> seed_override;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", config, "experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory for results.csv and summary.json");
    run->add_option("--threads", threads, "worker threads (default: FORMKAC_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);
    run->add_option("--seed-override", seed_override, "replace the config seed");

    bool json = false;
    auto* list = app.add_subcommand("list-models", "print the model catalog");
    list->add_flag("--json", json, "machine-readable output");

    std::uint64_t selftest_seed = 1;
    auto* self = app.add_subcommand("selftest", "run the algebraic identity suites");
    self->add_option("--seed", selftest_seed, "seed for the random identity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*run) {
        return formkac::run_command(config, out, {threads, seed_override}, std::cout, std::cerr);
    }
    if (*list) {
        std::cout << (json ? formkac::list_models_json() : formkac::list_models_text());
        return 0;
    }
    return selftest(selftest_seed);
}

#pragma once

// Config-driven experiment runner: one [experiment] table, one [model] table
// and an optional [field] table per file. Results go to results.csv and
// summary.json in the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "formkac/config.hpp"

namespace formkac {

inline constexpr int kSummarySchemaVersion = 1;

struct ResultTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// RFC-4180 text with a header row and CRLF-free "\n" line ends.
std::string encode_csv(const ResultTable& table);

/// %.12g with "." as decimal separator; "inf", "-inf", "nan" otherwise.
std::string format_number(double v);

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunOptions {
    int threads = 0;
    std::optional<std::uint64_t> seed_override;
};

struct RunReport {
    std::string kind;
    std::uint64_t seed = 0;
    std::string model;
    int dim = 0;
    ResultTable table;
    std::vector<Verdict> verdicts;
    double wall_time_s = 0.0;

    bool pass() const;
    std::size_t failures() const;
};

inline const std::vector<std::string>& experiment_kinds()
{
    static const std::vector<std::string> kinds = {"fk",  "bound",  "ssp", "theta",  "domination",
                                                   "occupation", "intfor", "dx", "spinor", "algebra-suite"};
    return kinds;
}

/// Validates and runs one experiment. Throws ConfigError for bad configs.
RunReport run_experiment(const Config& config, const RunOptions& opts = {});

/// summary.json contents.
std::string summary_json(const RunReport& report);

/// Writes results.csv and summary.json into `out_dir` (created if missing).
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

/// The `run` subcommand: 0 when every verdict passes, 2 on a verdict failure,
/// 1 on any error (reported on `err`).
int run_command(const std::string& config_path, const std::filesystem::path& out_dir, const RunOptions& opts,
                std::ostream& out, std::ostream& err);

/// Model catalog as text, or as a JSON array.
std::string list_models_text();
std::string list_models_json();

}  // namespace formkac

#pragma once

// Subcommand implementations behind the `crs` executable. Each one writes
// machine-readable output to `out` and diagnostics to `err`.
//
// Exit codes: 0 success, 1 other failure (including a FAILED reduction
// check), 2 invalid input, 3 size or budget limit, 4 indistinguishable items.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crs/data.hpp"
#include "crs/dtree.hpp"
#include "crs/strategy.hpp"

namespace crs::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalidInput = 2, kSizeLimit = 3, kAmbiguous = 4 };

struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    std::uint64_t seed = 0;
    std::string data_dir; // relative inputs are also looked up here
    std::string format = "tabular";
    std::string delimiter = "\t";
    // Catalog feature selection: explicit names, or the `keep` features
    // with the most (or fewest) distinct values.
    std::vector<std::string> keep_features;
    std::size_t keep = 0;
    std::string keep_order = "most";

    // gen-catalog
    std::size_t items = 500;
    std::size_t features = 10;
    std::vector<std::size_t> values{15};
    std::string distribution = "zipf";
    double zipf_exponent = 1.0;

    // build-dt
    bool heuristic = false;
    DtBudget dt_budget;

    // check-strategy
    std::optional<int> bound;
    bool minimize = false;
    std::string protocol = "p2";
    StrategyBudget budget;

    // simulate
    std::string itemset = "is2-mini";
    std::string ratings;
    std::string ratings_delimiter = "::";
    std::size_t users = 100;
    std::size_t per_user = 40;
    std::size_t max_dialogs = 300;
    unsigned threads = 0; // 0 = hardware concurrency
    double cap_factor = 10.0;
    std::string blacklist = "dialog";
    std::string transcripts;

    // reduce
    std::string table;
    bool generate = false;
    std::size_t objects = 8;
    std::size_t tests = 0;
    std::string rule = "exact3";

    // demo
    std::string fixtures_dir;
};

int cmd_gen_catalog(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_build_dt(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check_strategy(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_reduce(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_demo(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int exit_code_for(const std::exception& e);

// Dispatches on cfg.command and turns errors into exit codes.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// `path` as given when it exists or is absolute, else under data_dir.
std::string resolve_input(const std::string& path, const std::string& data_dir);

} // namespace crs::cli

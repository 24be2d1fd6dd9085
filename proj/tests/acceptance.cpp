// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "crs/cli.hpp"
#include "crs/data.hpp"
#include "crs/dtree.hpp"
#include "crs/fixtures.hpp"
#include "crs/reduction.hpp"
#include "crs/sim.hpp"
#include "crs/strategy.hpp"
#include "support.hpp"

using namespace crs;
using namespace crs::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::pair<SimMetrics, SimMetrics> simulate_both(const Catalog& c, std::uint64_t seed, std::size_t dialogs) {
    const auto ratings = generate_ratings(c, RatingsGenOptions{100, 40, 1, 5, seed});
    const auto profiles = build_profiles(ratings, c);
    ExperimentConfig ec;
    ec.seed = seed;
    ec.max_dialogs = dialogs;
    ec.threads = threads();
    const auto p1 = run_experiment(c, profiles.profiles, Protocol::P1, ec);
    const auto p2 = run_experiment(c, profiles.profiles, Protocol::P2, ec);
    return {p1.metrics, p2.metrics};
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

Verdict protocol_ratio() {
    const std::uint64_t seed = 1;
    const auto [a1, a2] = simulate_both(generate_catalog(CatalogShape::is1_mini(seed)), seed, 300);
    const auto [b1, b2] = simulate_both(generate_catalog(CatalogShape::is2_mini(seed)), seed, 300);
    const double r1 = a1.mean_nq / a2.mean_nq;
    const double r2 = b1.mean_nq / b2.mean_nq;
    const bool complete = a1.dialogs == 300 && a2.dialogs == 300 && b1.dialogs == 300 && b2.dialogs == 300 &&
                          a1.failures + a2.failures + b1.failures + b2.failures == 0;
    std::string d = "IS1-mini " + fmt(a1.mean_nq) + "/" + fmt(a2.mean_nq) + " = " + fmt(r1) + " (<= 1.5), IS2-mini " +
                    fmt(b1.mean_nq) + "/" + fmt(b2.mean_nq) + " = " + fmt(r2) + " (>= 3.0)";
    if (!complete)
        d += ", incomplete or failed dialogs";
    return {complete && r1 <= 1.5 && r2 >= 3.0, d};
}

Verdict max_ordering() {
    int ok = 0;
    std::string worst;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto [m1, m2] = simulate_both(generate_catalog(CatalogShape::is2_mini(seed)), seed, 300);
        if (m1.max_nq > m2.max_nq && m1.failures + m2.failures == 0)
            ++ok;
        else
            worst += " seed " + std::to_string(seed) + ": " + std::to_string(m1.max_nq) + " vs " +
                     std::to_string(m2.max_nq);
    }
    return {ok == 10, std::to_string(ok) + "/10 seeds with max NQ(P1) > max NQ(P2)" + worst};
}

Verdict dt_optimality() {
    TestRng rng(3);
    int agree = 0;
    for (int i = 0; i < 200; ++i) {
        const Catalog c = random_small_catalog(rng, 8, 5, 4);
        const ItemSet all = c.all_ids();
        const DecisionTree t = build_min_depth(all, c);
        const int oracle = min_depth_oracle(all, c);
        if (t.depth() == oracle && oracle == brute_depth(all, c) && validate_tree(t, all, c).empty())
            ++agree;
    }
    const Catalog movies = movie_catalog();
    const int fixture = build_min_depth(movies.all_ids(), movies).depth();
    return {agree == 200 && fixture == 2,
            std::to_string(agree) + "/200 instances agree with the oracle, movie fixture depth " + std::to_string(fixture)};
}

Verdict reduction() {
    int verified = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t objects = 6 + seed % 4;
        const DecisionTable t = generate_table(TableGenOptions{objects, 0, ColumnRule::ExactlyThree, seed, 10000});
        if (verify_reduction(t, ColumnRule::ExactlyThree))
            ++verified;
    }
    const ReductionReport rep = check_reduction(example_table_distinct(), ColumnRule::Unchecked);
    const int bundled = bdt_min_depth(example_table());
    return {verified == 50 && rep.verified && rep.bdt_depth == 3 && rep.catalog_depth == 3 && bundled == 3,
            std::to_string(verified) + "/50 tables verified, bundled table depth " + std::to_string(rep.bdt_depth) +
                " (table) / " + std::to_string(rep.catalog_depth) + " (catalog)"};
}

Verdict strategy_properties() {
    TestRng rng(5);
    int good = 0, below_trivial = 0;
    std::string why;
    for (int i = 0; i < 50; ++i) {
        const Catalog c = random_small_catalog(rng, 12, 5, 4);
        const UserModel u = cold_user(c);
        const int n = static_cast<int>(c.size());
        StrategyExplorer e1(c, Protocol::P1), e2(c, Protocol::P2);
        StrategyExplorer r1(c, Protocol::P1, ExploreOptions{{}, false}), r2(c, Protocol::P2, ExploreOptions{{}, false});
        bool ok = !e1.explore(u, 0) && !e2.explore(u, 0) && e1.explore(u, n) && e2.explore(u, n);
        bool prev1 = false, prev2 = false;
        for (int m = 0; m <= n + 1 && ok; ++m) {
            const bool a = e1.explore(u, m), b = e2.explore(u, m);
            ok = a == r1.explore(u, m) && b == r2.explore(u, m) && (!prev1 || a) && (!prev2 || b) && (!a || b);
            prev1 = a;
            prev2 = b;
        }
        const int m2 = e2.min_interactions(u);
        const GameOracle g2(c, Protocol::P2);
        ok = ok && m2 == g2.min_bound(g2.cold());
        below_trivial += m2 < n;
        if (ok)
            ++good;
        else if (why.empty())
            why = ", first failure on instance " + std::to_string(i);
    }
    return {good == 50, std::to_string(good) + "/50 catalogs satisfy every property (" + std::to_string(below_trivial) +
                            " with a bound below |C|)" + why};
}

Verdict compression() {
    TestRng rng(11);
    int good = 0;
    for (int i = 0; i < 200; ++i) {
        const Catalog c = random_small_catalog(rng, 10, 4, 4, 2);
        const auto target = static_cast<ItemId>(rng() % c.size());
        const InteractionSequence seq = random_conversation(rng, c, target, uniform(rng, 2, 14));
        try {
            const InteractionSequence out = compress_to_slot_filling(seq, c);
            const ConversationState end = replay(out, c);
            const auto* acc = std::get_if<AcceptItem>(&out.steps.back());
            if (is_fill_only(out) && acc && acc->item == target && end.accepted &&
                interaction_count(out) <= interaction_count(seq))
                ++good;
        } catch (const std::exception&) {
        }
    }
    return {good == 200, std::to_string(good) + "/200 sequences compressed and replayed"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / "crs_acceptance";
    fs::create_directories(dir);
    write_fixtures(dir.string());

    std::vector<std::pair<std::string, cli::RunConfig>> runs;
    auto add = [&](const std::string& label, const std::function<void(cli::RunConfig&)>& set) {
        cli::RunConfig cfg;
        cfg.seed = 42;
        set(cfg);
        runs.emplace_back(label, cfg);
    };
    add("gen-catalog", [&](cli::RunConfig& c) {
        c.command = "gen-catalog";
        c.output = (dir / "gen.tsv").string();
    });
    add("build-dt", [&](cli::RunConfig& c) {
        c.command = "build-dt";
        c.input = (dir / "movies.tsv").string();
    });
    add("build-dt --heuristic", [&](cli::RunConfig& c) {
        c.command = "build-dt";
        c.input = (dir / "gen.tsv").string();
        c.heuristic = true;
    });
    add("check-strategy", [&](cli::RunConfig& c) {
        c.command = "check-strategy";
        c.minimize = true;
    });
    add("simulate", [&](cli::RunConfig& c) {
        c.command = "simulate";
        c.protocol = "both";
        c.max_dialogs = 100;
        c.transcripts = (dir / "transcripts.jsonl").string();
    });
    add("reduce", [&](cli::RunConfig& c) {
        c.command = "reduce";
        c.generate = true;
        c.objects = 9;
    });
    add("demo", [&](cli::RunConfig& c) { c.command = "demo"; });

    int same = 0;
    std::string diff;
    for (const auto& [label, cfg] : runs) {
        std::string first;
        bool ok = true;
        for (int rep = 0; rep < 2 && ok; ++rep) {
            std::ostringstream out, err;
            cli::RunConfig c = cfg;
            if (c.command == "simulate")
                c.threads = rep == 0 ? 1 : threads() + 1;
            const int code = cli::run(c, out, err);
            std::string text = out.str();
            if (!cfg.output.empty())
                text += slurp(cfg.output);
            if (!cfg.transcripts.empty())
                text += slurp(cfg.transcripts);
            if (code != 0)
                ok = false;
            else if (rep == 0)
                first = text;
            else
                ok = text == first;
        }
        if (ok)
            ++same;
        else
            diff += " " + label;
    }
    return {same == static_cast<int>(runs.size()),
            std::to_string(same) + "/" + std::to_string(runs.size()) + " subcommand runs byte-identical" +
                (diff.empty() ? "" : ", differing:" + diff)};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {"1 protocol efficiency ratio", 300, protocol_ratio},
        {"2 max NQ ordering", 300, max_ordering},
        {"3 decision tree optimality", 60, dt_optimality},
        {"4 reduction verification", 120, reduction},
        {"5 strategy checker properties", 180, strategy_properties},
        {"6 slot-filling compression", 60, compression},
        {"7 determinism", 300, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v{false, ""};
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = v.pass && secs <= c.limit_s;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << c.name << ": " << v.detail << " [" << fmt(secs) << "s of "
                  << c.limit_s << "s]" << std::endl;
    }
    return failed ? 1 : 0;
}

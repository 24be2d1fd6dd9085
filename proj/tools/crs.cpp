#include <iostream>

#include <CLI11.hpp>

#include "crs/cli.hpp"

using crs::cli::RunConfig;

namespace {

void catalog_input(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("-i,--input", cfg.input, "Catalog file (default: built-in movie catalog)");
    sub->add_option("--format", cfg.format, "Catalog format")->check(CLI::IsMember({"tabular", "triples"}));
    sub->add_option("--delimiter", cfg.delimiter, "Catalog field delimiter");
    sub->add_option("--use-features", cfg.keep_features, "Use only these features (comma list)")->delimiter(',');
    sub->add_option("--keep", cfg.keep, "Keep this many features ranked by distinct values (0 = all)");
    sub->add_option("--keep-order", cfg.keep_order, "Rank kept features by most or fewest distinct values")
        ->check(CLI::IsMember({"most", "fewest"}));
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Conversational recommendation strategies: trees, strategy search, reduction and simulation"};
    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_option("-o,--output", cfg.output, "Write the main output here instead of stdout");
    app.add_option("--data-dir", cfg.data_dir, "Directory searched for relative input paths")->envname("CRS_DATA_DIR");

    auto* gen = app.add_subcommand("gen-catalog", "Generate a synthetic catalog");
    gen->add_option("--items", cfg.items, "Number of items");
    gen->add_option("--features", cfg.features, "Number of features");
    gen->add_option("--values", cfg.values, "Distinct values per feature (one count or a comma list)")
        ->delimiter(',');
    gen->add_option("--distribution", cfg.distribution, "Value distribution")
        ->check(CLI::IsMember({"zipf", "uniform"}));
    gen->add_option("--zipf-exponent", cfg.zipf_exponent, "Zipf exponent");

    auto* dt = app.add_subcommand("build-dt", "Build a slot-filling decision tree");
    catalog_input(dt, cfg);
    auto* opt = dt->add_flag("--optimal", "Minimum-depth tree (default)");
    dt->add_flag("--heuristic", cfg.heuristic, "Greedy max-entropy tree")->excludes(opt);
    dt->add_option("--max-items", cfg.dt_budget.max_items, "Item limit for the optimal search");
    dt->add_option("--max-states", cfg.dt_budget.max_states, "State limit for the optimal search");

    auto* cs = app.add_subcommand("check-strategy", "Bounded-interaction strategy check from a cold start");
    catalog_input(cs, cfg);
    auto* bound = cs->add_option("-M,--bound", cfg.bound, "Interaction bound");
    cs->add_flag("--minimize", cfg.minimize, "Print the least bound instead")->excludes(bound);
    cs->add_option("--protocol", cfg.protocol, "Rejection protocol")->check(CLI::IsMember({"p1", "p2"}));
    cs->add_option("--max-items", cfg.budget.max_items, "Item budget");
    cs->add_option("--max-features", cfg.budget.max_features, "Feature budget");
    cs->add_option("--max-domain", cfg.budget.max_domain, "Domain size budget");

    auto* sim = app.add_subcommand("simulate", "Simulated dialogs under P1 and P2");
    catalog_input(sim, cfg);
    sim->add_option("--itemset", cfg.itemset, "Synthetic itemset when no --input")
        ->check(CLI::IsMember({"is1-mini", "is2-mini"}));
    sim->add_option("--ratings", cfg.ratings, "Ratings file (user, item, rating)");
    sim->add_option("--ratings-delimiter", cfg.ratings_delimiter, "Ratings field delimiter");
    sim->add_option("--users", cfg.users, "Synthetic users when no --ratings");
    sim->add_option("--per-user", cfg.per_user, "Synthetic ratings per user");
    sim->add_option("--max-dialogs", cfg.max_dialogs, "Dialogs per protocol (0 = all)");
    sim->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
    sim->add_option("--cap-factor", cfg.cap_factor, "Question cap as a multiple of the dialog catalog size");
    sim->add_option("--blacklist", cfg.blacklist, "P1 blacklist scope")->check(CLI::IsMember({"dialog", "round"}));
    sim->add_option("--transcripts", cfg.transcripts, "JSON-lines transcript log");
    cfg.protocol = "both";
    sim->add_option("--protocol", cfg.protocol, "p1, p2 or both")->check(CLI::IsMember({"p1", "p2", "both"}));

    auto* red = app.add_subcommand("reduce", "Decision table to catalog reduction check");
    red->add_option("--table", cfg.table, "Decision table file (default: built-in example)");
    red->add_flag("--generate", cfg.generate, "Generate a random table instead");
    red->add_option("--objects", cfg.objects, "Rows of a generated table");
    red->add_option("--tests", cfg.tests, "Columns of a generated table (0 = objects)");
    red->add_option("--rule", cfg.rule, "Column rule")->check(CLI::IsMember({"exact3", "atleast3", "unchecked"}));

    auto* demo = app.add_subcommand("demo", "Built-in movie catalog and decision table");
    demo->add_option("--write-fixtures", cfg.fixtures_dir, "Also write the fixtures to this directory");

    CLI11_PARSE(app, argc, argv);
    cfg.command = app.get_subcommands().front()->get_name();
    if (cfg.command == "check-strategy" && cs->count("--protocol") == 0)
        cfg.protocol = "p2";
    return crs::cli::run(cfg, std::cout, std::cerr);
}

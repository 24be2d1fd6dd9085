#include "crs/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "crs/data.hpp"
#include "crs/dtree.hpp"
#include "crs/fixtures.hpp"
#include "crs/reduction.hpp"
#include "crs/sim.hpp"

namespace crs::cli {

namespace {

namespace fs = std::filesystem;

// Writes `text` to the output file when one is configured, else to `out`.
// Returns true when it went to a file.
bool emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    if (cfg.output.empty()) {
        out << text;
        return false;
    }
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f)
        throw IngestionError("cannot write '" + cfg.output + "'");
    f << text;
    return true;
}

LoadOptions load_options(const RunConfig& cfg) {
    LoadOptions o;
    if (cfg.format == "tabular")
        o.format = CatalogFormat::Tabular;
    else if (cfg.format == "triples")
        o.format = CatalogFormat::Triples;
    else
        throw IngestionError("unknown catalog format '" + cfg.format + "' (expected tabular or triples)");
    o.delimiter = cfg.delimiter;
    o.seed = cfg.seed;
    o.features = cfg.keep_features;
    o.keep = cfg.keep;
    if (cfg.keep_order == "most")
        o.order = FeatureOrder::MostDistinct;
    else if (cfg.keep_order == "fewest")
        o.order = FeatureOrder::FewestDistinct;
    else
        throw IngestionError("unknown feature order '" + cfg.keep_order + "' (expected most or fewest)");
    if (o.keep == 0)
        o.order = FeatureOrder::AsListed;
    return o;
}

Catalog input_catalog(const RunConfig& cfg, std::ostream& err) {
    if (cfg.input.empty()) {
        err << "no --input given; using the built-in movie catalog\n";
        return movie_catalog();
    }
    SanitizeReport report;
    Catalog c = load_catalog(resolve_input(cfg.input, cfg.data_dir), load_options(cfg), &report);
    if (!report.choices.empty())
        err << "sanitize: " << report.choices.size() << " null or multi-valued cells resolved\n";
    if (!report.dropped_duplicates.empty())
        err << "sanitize: " << report.dropped_duplicates.size() << " duplicate items dropped\n";
    return c;
}

ColumnRule parse_rule(const std::string& s) {
    if (s == "exact3")
        return ColumnRule::ExactlyThree;
    if (s == "atleast3")
        return ColumnRule::AtLeastThree;
    if (s == "unchecked")
        return ColumnRule::Unchecked;
    throw ReductionInputError("unknown column rule '" + s + "' (expected exact3, atleast3 or unchecked)");
}

UserModel cold_user(const Catalog& c) {
    return UserModel{Query::all_variables(c.feature_count()), Constraints::none(c.feature_count()), {}, {}};
}

std::string format_ratio(double a, double b) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << (b > 0 ? a / b : 0.0);
    return s.str();
}

} // namespace

std::string resolve_input(const std::string& path, const std::string& data_dir) {
    if (path.empty() || data_dir.empty())
        return path;
    const fs::path p(path);
    if (p.is_absolute() || fs::exists(p))
        return path;
    const fs::path alt = fs::path(data_dir) / p;
    return fs::exists(alt) ? alt.string() : path;
}

int cmd_gen_catalog(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    CatalogShape shape;
    shape.items = cfg.items;
    shape.features = cfg.features;
    if (cfg.values.size() == 1)
        shape.distinct.assign(cfg.features, cfg.values.front());
    else if (cfg.values.size() == cfg.features)
        shape.distinct = cfg.values;
    else
        throw ShapeError("--values needs one count or one per feature (" + std::to_string(cfg.features) + ")");
    if (cfg.distribution == "zipf")
        shape.distribution = ValueDistribution::Zipf;
    else if (cfg.distribution == "uniform")
        shape.distribution = ValueDistribution::Uniform;
    else
        throw ShapeError("unknown distribution '" + cfg.distribution + "' (expected zipf or uniform)");
    shape.zipf_exponent = cfg.zipf_exponent;
    shape.seed = cfg.seed;

    const Catalog c = generate_catalog(shape);
    std::ostringstream text;
    store_catalog(text, c);
    std::ostringstream summary;
    summary << "items " << c.size() << "\nfeatures " << c.feature_count() << '\n';
    for (Slot s = 0; s < c.feature_count(); ++s)
        summary << c.schema().feature_name(s) << ' ' << c.schema().domain_size(s) << '\n';
    if (emit(cfg, text.str(), out))
        out << summary.str();
    else
        err << summary.str();
    return kOk;
}

int cmd_build_dt(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Catalog c = input_catalog(cfg, err);
    const ItemSet all = c.all_ids();
    const DecisionTree t = cfg.heuristic ? build_heuristic(all, c) : build_min_depth(all, c, cfg.dt_budget);
    nlohmann::ordered_json j;
    j["method"] = cfg.heuristic ? "heuristic" : "optimal";
    j["depth"] = t.depth();
    j["nodes"] = t.node_count();
    j["tree"] = tree_to_json(t, c);
    emit(cfg, j.dump(2) + "\n", out);
    err << "depth " << t.depth() << ", " << t.node_count() << " nodes\n";
    return kOk;
}

int cmd_check_strategy(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Catalog c = input_catalog(cfg, err);
    const Protocol protocol = parse_protocol(cfg.protocol);
    StrategyExplorer ex(c, protocol, ExploreOptions{cfg.budget, true});
    const UserModel u = cold_user(c);
    std::string result;
    if (cfg.minimize) {
        result = std::to_string(ex.min_interactions(u));
    } else if (cfg.bound) {
        result = ex.explore(u, *cfg.bound) ? "true" : "false";
    } else {
        throw DomainError("check-strategy needs -M <bound> or --minimize");
    }
    emit(cfg, result + "\n", out);
    err << "explored " << ex.stats().calls << " states, " << ex.stats().memo_entries << " memo entries\n";
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Catalog c;
    std::string label = cfg.itemset;
    if (!cfg.input.empty()) {
        c = input_catalog(cfg, err);
        label = fs::path(cfg.input).stem().string();
    } else if (cfg.itemset == "is1-mini") {
        c = generate_catalog(CatalogShape::is1_mini(cfg.seed));
    } else if (cfg.itemset == "is2-mini") {
        c = generate_catalog(CatalogShape::is2_mini(cfg.seed));
    } else {
        throw ShapeError("unknown itemset '" + cfg.itemset + "' (expected is1-mini or is2-mini, or give --input)");
    }

    std::vector<RatingRecord> ratings;
    if (!cfg.ratings.empty()) {
        RatingsFormat fmt;
        fmt.delimiter = cfg.ratings_delimiter;
        auto loaded = load_ratings(resolve_input(cfg.ratings, cfg.data_dir), fmt);
        const auto sum = summarize(loaded);
        err << "ratings: " << sum.ratings << " records, " << sum.users << " users, " << sum.items << " items\n";
        auto filtered = filter_ratings_to_catalog(loaded, c);
        if (filtered.dropped)
            err << "ratings: " << filtered.dropped << " records for items outside the catalog dropped\n";
        ratings = std::move(filtered.kept);
    } else {
        ratings = generate_ratings(c, RatingsGenOptions{cfg.users, cfg.per_user, 1, 5, cfg.seed});
    }
    const ProfileSet profiles = build_profiles(ratings, c);
    if (profiles.dropped_users)
        err << "profiles: " << profiles.dropped_users << " users without positive ratings dropped\n";

    std::vector<Protocol> protocols;
    if (cfg.protocol == "both")
        protocols = {Protocol::P1, Protocol::P2};
    else
        protocols = {parse_protocol(cfg.protocol)};

    ExperimentConfig ec;
    ec.itemset = label;
    ec.seed = cfg.seed;
    ec.max_dialogs = cfg.max_dialogs;
    ec.threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    ec.keep_transcripts = !cfg.transcripts.empty();
    ec.dialog.cap_factor = cfg.cap_factor;
    if (cfg.blacklist == "dialog")
        ec.dialog.blacklist = BlacklistScope::Dialog;
    else if (cfg.blacklist == "round")
        ec.dialog.blacklist = BlacklistScope::PreviousRound;
    else
        throw DomainError("unknown blacklist scope '" + cfg.blacklist + "' (expected dialog or round)");

    std::vector<SimMetrics> rows;
    std::ofstream log;
    if (!cfg.transcripts.empty()) {
        log.open(cfg.transcripts, std::ios::binary);
        if (!log)
            throw IngestionError("cannot write '" + cfg.transcripts + "'");
    }
    for (Protocol p : protocols) {
        auto res = run_experiment(c, profiles.profiles, p, ec);
        for (const auto& f : res.failures)
            err << to_string(p) << " failure: " << f << '\n';
        for (const auto& t : res.transcripts)
            log << transcript_to_json(t, c).dump() << '\n';
        rows.push_back(res.metrics);
    }
    std::ostringstream table;
    write_metrics_tsv(table, rows);
    emit(cfg, table.str(), out);
    if (rows.size() == 2)
        err << "mean NQ ratio P1/P2: " << format_ratio(rows[0].mean_nq, rows[1].mean_nq) << '\n';
    return kOk;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    DecisionTable t;
    ColumnRule rule = parse_rule(cfg.rule);
    if (!cfg.table.empty()) {
        t = load_table(resolve_input(cfg.table, cfg.data_dir));
    } else if (cfg.generate) {
        t = generate_table(TableGenOptions{cfg.objects, cfg.tests, rule, cfg.seed, 10000});
    } else {
        err << "no --table given; using the built-in example table (one decision per row, column rule waived)\n";
        t = example_table_distinct();
        rule = ColumnRule::Unchecked;
    }
    const ReductionReport rep = check_reduction(t, rule);
    std::ostringstream text;
    text << "rows " << t.row_count() << "\ntests " << t.test_count() << "\nbdt_depth " << rep.bdt_depth
         << "\ncatalog_depth " << rep.catalog_depth << '\n'
         << (rep.verified ? "VERIFIED" : "FAILED") << '\n';
    emit(cfg, text.str(), out);
    return rep.verified ? kOk : kFailure;
}

int cmd_demo(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Catalog c = movie_catalog();
    std::ostringstream text;
    text << "# catalog\n";
    store_catalog(text, c);

    const DecisionTree tree = build_min_depth(c.all_ids(), c);
    text << "\n# optimal slot-filling tree (depth " << tree.depth() << ")\n" << tree_to_json(tree, c).dump(2) << '\n';
    text << "\n# questions per item\n";
    for (ItemId id = 0; id < c.size(); ++id)
        text << c.item(id).name << '\t' << walk(tree, answers_of(c, id)).questions << '\n';

    const DecisionTable table = example_table();
    text << "\n# decision table\n";
    write_table(text, table);
    text << "bdt_depth " << bdt_min_depth(table) << '\n';
    const ReductionReport rep = check_reduction(example_table_distinct(), ColumnRule::Unchecked);
    text << "\n# reduction with one decision per row\nbdt_depth " << rep.bdt_depth << "\ncatalog_depth "
         << rep.catalog_depth << '\n'
         << (rep.verified ? "VERIFIED" : "FAILED") << '\n';
    emit(cfg, text.str(), out);

    if (!cfg.fixtures_dir.empty()) {
        write_fixtures(cfg.fixtures_dir);
        err << "fixtures written to " << cfg.fixtures_dir << '\n';
    }
    return rep.verified ? kOk : kFailure;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const SizeError*>(&e))
        return kSizeLimit;
    if (dynamic_cast<const AmbiguityError*>(&e))
        return kAmbiguous;
    if (dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const IngestionError*>(&e) ||
        dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const ReductionInputError*>(&e) ||
        dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ProtocolError*>(&e))
        return kInvalidInput;
    return kFailure;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.command == "gen-catalog")
            return cmd_gen_catalog(cfg, out, err);
        if (cfg.command == "build-dt")
            return cmd_build_dt(cfg, out, err);
        if (cfg.command == "check-strategy")
            return cmd_check_strategy(cfg, out, err);
        if (cfg.command == "simulate")
            return cmd_simulate(cfg, out, err);
        if (cfg.command == "reduce")
            return cmd_reduce(cfg, out, err);
        if (cfg.command == "demo")
            return cmd_demo(cfg, out, err);
        err << "error: unknown command '" << cfg.command << "'\n";
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

} // namespace crs::cli

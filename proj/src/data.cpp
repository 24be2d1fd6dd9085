#include "crs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "crs/rng.hpp"

namespace crs {

namespace {

const char* const kFeatureNames[] = {"director", "starring",      "producer", "writer",  "distributor",
                                     "musicComposer", "language", "narrator", "basedOn", "country"};

std::string line_error(const std::string& what, std::size_t line, const std::string& msg) {
    return what + " line " + std::to_string(line) + ": " + msg;
}

bool skippable(const std::string& line) {
    const auto start = line.find_first_not_of(" \t\r");
    return start == std::string::npos || line[start] == '#';
}

void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

std::vector<std::string> split_multi(const std::string& cell) {
    std::vector<std::string> out;
    if (cell.empty())
        return out;
    for (auto& v : split_fields(cell, "|"))
        if (!v.empty() && std::find(out.begin(), out.end(), v) == out.end())
            out.push_back(v);
    return out;
}

// Inverse-CDF sampler over ranks 0..k-1 with weight 1/(r+1)^s.
class ValueSampler {
public:
    ValueSampler(std::size_t k, ValueDistribution dist, double exponent) : k_(k), uniform_(dist == ValueDistribution::Uniform) {
        if (!uniform_) {
            cdf_.reserve(k);
            double acc = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                acc += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
                cdf_.push_back(acc);
            }
            for (double& c : cdf_)
                c /= acc;
        }
    }

    ValueId draw(Rng& rng) const {
        if (uniform_)
            return static_cast<ValueId>(pick_index(rng, k_));
        const double u = unit_real(rng);
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end())
            --it;
        return static_cast<ValueId>(it - cdf_.begin());
    }

private:
    std::size_t k_;
    bool uniform_;
    std::vector<double> cdf_;
};

struct VectorHash {
    std::size_t operator()(const std::vector<ValueId>& v) const noexcept {
        std::uint64_t h = 0x84222325ULL;
        for (ValueId x : v)
            h = mix_seed(h, x);
        return static_cast<std::size_t>(h);
    }
};

} // namespace

std::vector<std::string> split_fields(const std::string& line, const std::string& delimiter) {
    std::vector<std::string> out;
    if (delimiter.empty()) {
        out.push_back(line);
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + delimiter.size();
    }
}

std::string default_feature_name(std::size_t index) {
    if (index < std::size(kFeatureNames))
        return kFeatureNames[index];
    return "feature_" + std::to_string(index + 1);
}

CatalogShape CatalogShape::is1_mini(std::uint64_t seed) {
    return CatalogShape{500, 4, {200, 200, 200, 200}, ValueDistribution::Zipf, 1.0, seed};
}

CatalogShape CatalogShape::is2_mini(std::uint64_t seed) {
    return CatalogShape{500, 10, std::vector<std::size_t>(10, 15), ValueDistribution::Zipf, 1.0, seed};
}

Catalog generate_catalog(const CatalogShape& shape) {
    const std::size_t n = shape.items;
    const std::size_t p = shape.features;
    if (n == 0 || p == 0)
        throw ShapeError("catalog shape needs at least one item and one feature");
    if (shape.distinct.size() != p)
        throw ShapeError("shape lists " + std::to_string(shape.distinct.size()) + " distinct-value targets for " +
                         std::to_string(p) + " features");
    if (shape.distribution == ValueDistribution::Zipf && !(shape.zipf_exponent >= 0.0))
        throw ShapeError("zipf exponent must be non-negative");
    double combos = 1.0;
    for (std::size_t f = 0; f < p; ++f) {
        const std::size_t k = shape.distinct[f];
        if (k == 0 || k > n)
            throw ShapeError("feature " + std::to_string(f) + " wants " + std::to_string(k) +
                             " distinct values; allowed range is 1.." + std::to_string(n));
        combos *= static_cast<double>(k);
    }
    if (combos < static_cast<double>(n))
        throw ShapeError("shape allows only " + std::to_string(static_cast<long long>(combos)) +
                         " distinct items, " + std::to_string(n) + " requested");

    Rng rng(shape.seed);
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> domains;
    std::vector<ValueSampler> samplers;
    std::vector<std::vector<ValueId>> rows(n, std::vector<ValueId>(p, 0));
    std::vector<std::vector<std::size_t>> counts(p);
    for (std::size_t f = 0; f < p; ++f) {
        const std::size_t k = shape.distinct[f];
        names.push_back(default_feature_name(f));
        std::vector<std::string> dom;
        for (std::size_t v = 0; v < k; ++v)
            dom.push_back(names.back() + "_" + std::to_string(v + 1));
        domains.push_back(std::move(dom));
        samplers.emplace_back(k, shape.distribution, shape.zipf_exponent);
        counts[f].assign(k, 0);

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i)
            order[i] = i;
        shuffle_portable(order, rng);
        for (std::size_t i = 0; i < n; ++i) {
            const ValueId v = i < k ? static_cast<ValueId>(i) : samplers[f].draw(rng);
            rows[order[i]][f] = v;
            ++counts[f][v];
        }
    }

    // Repair duplicates without losing any value.
    std::unordered_set<std::vector<ValueId>, VectorHash> seen;
    std::size_t budget = 1000 * n + 1000;
    for (std::size_t i = 0; i < n; ++i) {
        while (seen.contains(rows[i])) {
            if (budget-- == 0)
                throw ShapeError("could not produce " + std::to_string(n) + " distinct items for this shape");
            std::vector<std::size_t> movable;
            for (std::size_t f = 0; f < p; ++f)
                if (counts[f][rows[i][f]] > 1)
                    movable.push_back(f);
            const std::size_t f = movable[pick_index(rng, movable.size())];
            --counts[f][rows[i][f]];
            rows[i][f] = samplers[f].draw(rng);
            ++counts[f][rows[i][f]];
        }
        seen.insert(rows[i]);
    }

    std::vector<Item> items;
    items.reserve(n);
    const std::size_t width = std::to_string(n).size();
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = std::to_string(i + 1);
        items.push_back(Item{"item_" + std::string(width - id.size(), '0') + id, rows[i]});
    }
    return Catalog(CatalogSchema(std::move(names), std::move(domains)), std::move(items));
}

Catalog sanitize(const RawCatalog& raw, std::uint64_t seed, SanitizeReport* report) {
    const std::size_t p = raw.features.size();
    if (p == 0)
        throw SchemaError("catalog has no features");
    std::vector<std::vector<std::string>> observed(p);
    std::vector<std::unordered_set<std::string>> observed_set(p);
    std::unordered_set<std::string> names;
    for (const auto& it : raw.items) {
        if (it.cells.size() != p)
            throw SchemaError("item '" + it.name + "' has " + std::to_string(it.cells.size()) + " cells, expected " +
                              std::to_string(p));
        if (!names.insert(it.name).second)
            throw SchemaError("item '" + it.name + "' appears twice");
        for (std::size_t f = 0; f < p; ++f)
            for (const auto& v : it.cells[f])
                if (observed_set[f].insert(v).second)
                    observed[f].push_back(v);
    }
    for (std::size_t f = 0; f < p; ++f)
        if (observed[f].empty())
            throw SchemaError("feature '" + raw.features[f] + "' has no observed values");

    Rng rng(seed);
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    std::set<std::vector<std::string>> seen;
    for (const auto& it : raw.items) {
        std::vector<std::string> values(p);
        for (std::size_t f = 0; f < p; ++f) {
            const auto& cell = it.cells[f];
            if (cell.size() == 1) {
                values[f] = cell.front();
                continue;
            }
            const bool null = cell.empty();
            const auto& pool = null ? observed[f] : cell;
            values[f] = pool[pick_index(rng, pool.size())];
            if (report)
                report->choices.push_back(SanitizeChoice{it.name, raw.features[f], null, values[f]});
        }
        if (!seen.insert(values).second) {
            if (report)
                report->dropped_duplicates.push_back(it.name);
            continue;
        }
        rows.emplace_back(it.name, std::move(values));
    }
    if (rows.empty())
        throw IngestionError("catalog has no items");
    return Catalog::from_rows(raw.features, rows);
}

RawCatalog to_raw(const Catalog& catalog) {
    RawCatalog raw;
    for (Slot s = 0; s < catalog.feature_count(); ++s)
        raw.features.push_back(catalog.schema().feature_name(s));
    for (const auto& it : catalog.items()) {
        RawItem r{it.name, {}};
        for (Slot s = 0; s < catalog.feature_count(); ++s)
            r.cells.push_back({catalog.schema().value_name(s, it.values[s])});
        raw.items.push_back(std::move(r));
    }
    return raw;
}

RawCatalog parse_raw_catalog(std::istream& in, const LoadOptions& options) {
    RawCatalog raw;
    std::size_t lineno = 0;
    if (options.format == CatalogFormat::Tabular) {
        bool have_header = false;
        std::unordered_set<std::string> names;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            chomp(line);
            if (skippable(line))
                continue;
            auto fields = split_fields(line, options.delimiter);
            if (!have_header) {
                if (fields.front() != "item")
                    throw IngestionError(line_error("catalog", lineno, "header must start with column 'item'"));
                if (fields.size() < 2)
                    throw IngestionError(line_error("catalog", lineno, "header names no features"));
                raw.features.assign(fields.begin() + 1, fields.end());
                have_header = true;
                continue;
            }
            if (fields.size() != raw.features.size() + 1)
                throw IngestionError(line_error("catalog", lineno,
                                                std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(raw.features.size() + 1)));
            if (fields.front().empty())
                throw IngestionError(line_error("catalog", lineno, "empty item name"));
            if (!names.insert(fields.front()).second)
                throw IngestionError(line_error("catalog", lineno, "item '" + fields.front() + "' repeats"));
            RawItem it{fields.front(), {}};
            for (std::size_t f = 1; f < fields.size(); ++f)
                it.cells.push_back(split_multi(fields[f]));
            raw.items.push_back(std::move(it));
        }
    } else {
        std::unordered_map<std::string, std::size_t> feature_index;
        std::unordered_map<std::string, std::size_t> item_index;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            chomp(line);
            if (skippable(line))
                continue;
            auto fields = split_fields(line, options.delimiter);
            if (fields.size() != 3)
                throw IngestionError(line_error("catalog", lineno,
                                                std::to_string(fields.size()) + " fields, expected item, feature, value"));
            if (fields[0].empty() || fields[1].empty())
                throw IngestionError(line_error("catalog", lineno, "empty item or feature"));
            auto [fit, fnew] = feature_index.try_emplace(fields[1], raw.features.size());
            if (fnew) {
                raw.features.push_back(fields[1]);
                for (auto& it : raw.items)
                    it.cells.emplace_back();
            }
            auto [iit, inew] = item_index.try_emplace(fields[0], raw.items.size());
            if (inew)
                raw.items.push_back(RawItem{fields[0], std::vector<std::vector<std::string>>(raw.features.size())});
            auto& cell = raw.items[iit->second].cells[fit->second];
            if (!fields[2].empty() && std::find(cell.begin(), cell.end(), fields[2]) == cell.end())
                cell.push_back(fields[2]);
        }
    }
    if (raw.items.empty())
        throw IngestionError("catalog input is empty");
    return raw;
}

RawCatalog select_features(const RawCatalog& raw, const LoadOptions& options) {
    std::vector<std::size_t> keep;
    if (!options.features.empty()) {
        for (const auto& name : options.features) {
            auto it = std::find(raw.features.begin(), raw.features.end(), name);
            if (it == raw.features.end())
                throw IngestionError("unknown feature '" + name + "'");
            keep.push_back(static_cast<std::size_t>(it - raw.features.begin()));
        }
    } else if (options.order != FeatureOrder::AsListed || options.keep != 0) {
        std::vector<std::pair<std::size_t, std::size_t>> ranked; // (distinct, index)
        for (std::size_t f = 0; f < raw.features.size(); ++f) {
            std::set<std::string> vals;
            for (const auto& it : raw.items)
                vals.insert(it.cells[f].begin(), it.cells[f].end());
            // Features with fewer than two values cannot split anything.
            if (vals.size() >= 2 || options.order == FeatureOrder::AsListed)
                ranked.emplace_back(vals.size(), f);
        }
        if (options.order != FeatureOrder::AsListed)
            std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
                return options.order == FeatureOrder::MostDistinct ? a.first > b.first : a.first < b.first;
            });
        const std::size_t n = options.keep == 0 ? ranked.size() : std::min(options.keep, ranked.size());
        for (std::size_t i = 0; i < n; ++i)
            keep.push_back(ranked[i].second);
        std::sort(keep.begin(), keep.end());
    } else {
        return raw;
    }
    if (keep.empty())
        throw IngestionError("feature selection kept no features");
    RawCatalog out;
    for (std::size_t f : keep)
        out.features.push_back(raw.features[f]);
    for (const auto& it : raw.items) {
        RawItem r{it.name, {}};
        for (std::size_t f : keep)
            r.cells.push_back(it.cells[f]);
        out.items.push_back(std::move(r));
    }
    return out;
}

Catalog parse_catalog(std::istream& in, const LoadOptions& options, SanitizeReport* report) {
    return sanitize(select_features(parse_raw_catalog(in, options), options), options.seed, report);
}

Catalog load_catalog(const std::string& path, const LoadOptions& options, SanitizeReport* report) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open catalog '" + path + "'");
    return parse_catalog(in, options, report);
}

void store_catalog(std::ostream& out, const Catalog& catalog, const std::string& delimiter) {
    out << "item";
    for (Slot s = 0; s < catalog.feature_count(); ++s)
        out << delimiter << catalog.schema().feature_name(s);
    out << '\n';
    for (const auto& it : catalog.items()) {
        out << it.name;
        for (Slot s = 0; s < catalog.feature_count(); ++s)
            out << delimiter << catalog.schema().value_name(s, it.values[s]);
        out << '\n';
    }
}

std::vector<RatingRecord> parse_ratings(std::istream& in, const RatingsFormat& format) {
    std::vector<RatingRecord> out;
    const std::size_t need = std::max({format.user_column, format.item_column, format.rating_column}) + 1;
    std::size_t lineno = 0;
    bool header_pending = format.header;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        chomp(line);
        if (skippable(line))
            continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        auto fields = split_fields(line, format.delimiter);
        if (fields.size() < need)
            throw IngestionError(line_error("ratings", lineno,
                                            std::to_string(fields.size()) + " fields, expected at least " +
                                                std::to_string(need)));
        const std::string& r = fields[format.rating_column];
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), value);
        if (ec != std::errc{} || ptr != r.data() + r.size() || !std::isfinite(value))
            throw IngestionError(line_error("ratings", lineno, "rating '" + r + "' is not a number"));
        if (fields[format.user_column].empty() || fields[format.item_column].empty())
            throw IngestionError(line_error("ratings", lineno, "empty user or item"));
        out.push_back(RatingRecord{fields[format.user_column], fields[format.item_column], value});
    }
    return out;
}

std::vector<RatingRecord> load_ratings(const std::string& path, const RatingsFormat& format) {
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open ratings '" + path + "'");
    return parse_ratings(in, format);
}

void store_ratings(std::ostream& out, const std::vector<RatingRecord>& ratings, const std::string& delimiter) {
    for (const auto& r : ratings)
        out << r.user << delimiter << r.item << delimiter << r.rating << '\n';
}

RatingsSummary summarize(const std::vector<RatingRecord>& ratings) {
    std::unordered_set<std::string> users, items;
    for (const auto& r : ratings) {
        users.insert(r.user);
        items.insert(r.item);
    }
    return RatingsSummary{users.size(), items.size(), ratings.size()};
}

RatingsFilter filter_ratings_to_catalog(const std::vector<RatingRecord>& ratings, const Catalog& catalog) {
    RatingsFilter out;
    for (const auto& r : ratings) {
        if (catalog.find_item(r.item))
            out.kept.push_back(r);
        else
            ++out.dropped;
    }
    return out;
}

std::vector<RatingRecord> generate_ratings(const Catalog& catalog, const RatingsGenOptions& options) {
    if (catalog.empty())
        throw DomainError("cannot generate ratings for an empty catalog");
    if (options.min_rating > options.max_rating)
        throw DomainError("rating scale is empty");
    Rng rng(options.seed);
    const std::size_t per_user = std::min(options.per_user, catalog.size());
    const auto span = static_cast<std::size_t>(options.max_rating - options.min_rating + 1);
    std::vector<RatingRecord> out;
    out.reserve(options.users * per_user);
    std::vector<ItemId> ids(catalog.size());
    for (ItemId i = 0; i < ids.size(); ++i)
        ids[i] = i;
    for (std::size_t u = 0; u < options.users; ++u) {
        const std::string user = "u" + std::to_string(u + 1);
        for (std::size_t k = 0; k < per_user; ++k) {
            std::swap(ids[k], ids[k + pick_index(rng, ids.size() - k)]);
            const int rating = options.min_rating + static_cast<int>(pick_index(rng, span));
            out.push_back(RatingRecord{user, catalog.item(ids[k]).name, static_cast<double>(rating)});
        }
    }
    return out;
}

} // namespace crs

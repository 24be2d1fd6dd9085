#pragma once

// Catalog and ratings ingestion, cleanup of null and set-valued cells, and
// synthetic catalogs of a given shape.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crs/model.hpp"

namespace crs {

enum class ValueDistribution { Uniform, Zipf };

struct CatalogShape {
    std::size_t items = 0;
    std::size_t features = 0;
    // Distinct values per feature.
    std::vector<std::size_t> distinct;
    ValueDistribution distribution = ValueDistribution::Zipf;
    double zipf_exponent = 1.0;
    std::uint64_t seed = 1;

    // 500 items; 4 wide features (~200 values) or 10 narrow ones (~15).
    static CatalogShape is1_mini(std::uint64_t seed = 1);
    static CatalogShape is2_mini(std::uint64_t seed = 1);
};

std::string default_feature_name(std::size_t index);

// Every target value appears at least once; duplicate items are repaired by
// redrawing. Throws ShapeError for infeasible shapes.
Catalog generate_catalog(const CatalogShape& shape);

// Catalog before cleanup: a cell holds zero values (null), one, or several.
struct RawItem {
    std::string name;
    std::vector<std::vector<std::string>> cells;
};

struct RawCatalog {
    std::vector<std::string> features;
    std::vector<RawItem> items;
};

struct SanitizeChoice {
    std::string item;
    std::string feature;
    bool was_null = false;
    std::string chosen;
};

struct SanitizeReport {
    std::vector<SanitizeChoice> choices;
    std::vector<std::string> dropped_duplicates;
};

// Nulls get a seeded pick among the feature's observed values, set-valued
// cells a seeded pick among their own values. Later duplicates are dropped.
Catalog sanitize(const RawCatalog& raw, std::uint64_t seed, SanitizeReport* report = nullptr);
RawCatalog to_raw(const Catalog& catalog);

enum class CatalogFormat { Tabular, Triples };
enum class FeatureOrder { AsListed, MostDistinct, FewestDistinct };

struct LoadOptions {
    CatalogFormat format = CatalogFormat::Tabular;
    std::string delimiter = "\t";
    std::uint64_t seed = 1;
    // Explicit feature list; unknown names are an error.
    std::vector<std::string> features;
    // Otherwise keep `keep` features (0 = all) ranked by distinct values.
    FeatureOrder order = FeatureOrder::AsListed;
    std::size_t keep = 0;
};

RawCatalog parse_raw_catalog(std::istream& in, const LoadOptions& options);
RawCatalog select_features(const RawCatalog& raw, const LoadOptions& options);
Catalog parse_catalog(std::istream& in, const LoadOptions& options = {}, SanitizeReport* report = nullptr);
Catalog load_catalog(const std::string& path, const LoadOptions& options = {}, SanitizeReport* report = nullptr);
void store_catalog(std::ostream& out, const Catalog& catalog, const std::string& delimiter = "\t");

struct RatingRecord {
    std::string user;
    std::string item;
    double rating = 0.0;

    bool operator==(const RatingRecord&) const = default;
};

struct RatingsFormat {
    std::string delimiter = "::";
    std::size_t user_column = 0;
    std::size_t item_column = 1;
    std::size_t rating_column = 2;
    bool header = false;
};

std::vector<RatingRecord> parse_ratings(std::istream& in, const RatingsFormat& format = {});
std::vector<RatingRecord> load_ratings(const std::string& path, const RatingsFormat& format = {});
void store_ratings(std::ostream& out, const std::vector<RatingRecord>& ratings, const std::string& delimiter = "::");

struct RatingsSummary {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t ratings = 0;
};

RatingsSummary summarize(const std::vector<RatingRecord>& ratings);

struct RatingsFilter {
    std::vector<RatingRecord> kept;
    std::size_t dropped = 0;
};

RatingsFilter filter_ratings_to_catalog(const std::vector<RatingRecord>& ratings, const Catalog& catalog);

struct RatingsGenOptions {
    std::size_t users = 100;
    std::size_t per_user = 40;
    int min_rating = 1;
    int max_rating = 5;
    std::uint64_t seed = 1;
};

// Each user rates `per_user` distinct items with uniform integer ratings.
std::vector<RatingRecord> generate_ratings(const Catalog& catalog, const RatingsGenOptions& options);

// Splits on a (possibly multi-character) delimiter, keeping empty fields.
std::vector<std::string> split_fields(const std::string& line, const std::string& delimiter);

} // namespace crs

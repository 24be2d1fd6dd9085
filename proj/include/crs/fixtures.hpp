#pragma once

// Small built-in instances used by the demo command and the tests.

#include <string>

#include "crs/model.hpp"
#include "crs/reduction.hpp"

namespace crs {

// Three movies over director, starring and genre.
Catalog movie_catalog();

// Eight rows over three tests; several rows share a decision.
DecisionTable example_table();
// The same rows with one decision per row.
DecisionTable example_table_distinct();

// Writes movies.tsv, table.txt and table_distinct.txt into `dir`.
void write_fixtures(const std::string& dir);

} // namespace crs

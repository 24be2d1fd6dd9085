#include "crs/fixtures.hpp"

#include <filesystem>
#include <fstream>

#include "crs/data.hpp"

namespace crs {

Catalog movie_catalog() {
    return Catalog::from_rows({"director", "starring", "genre"},
                              {
                                  {"Forrest Gump", {"Spielberg", "Hanks", "historical"}},
                                  {"Jaws", {"Spielberg", "Dreyfuss", "action"}},
                                  {"Sully", {"Eastwood", "Hanks", "action"}},
                              });
}

namespace {

const std::vector<std::vector<bool>> kExampleRows = {
    {false, false, false}, {false, false, true}, {false, true, false}, {false, true, true},
    {true, false, false},  {true, true, false},  {true, false, true},  {true, true, true},
};

} // namespace

DecisionTable example_table() {
    return DecisionTable{kExampleRows, {"d1", "d1", "d2", "d3", "d4", "d4", "d5", "d5"}, {"x1", "x2", "x3"}};
}

DecisionTable example_table_distinct() {
    return DecisionTable{kExampleRows, {"d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8"}, {"x1", "x2", "x3"}};
}

void write_fixtures(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(fs::path(dir) / name);
        if (!f)
            throw IngestionError("cannot write '" + (fs::path(dir) / name).string() + "'");
        return f;
    };
    {
        auto f = open("movies.tsv");
        store_catalog(f, movie_catalog());
    }
    {
        auto f = open("table.txt");
        write_table(f, example_table());
    }
    {
        auto f = open("table_distinct.txt");
        write_table(f, example_table_distinct());
    }
}

} // namespace crs

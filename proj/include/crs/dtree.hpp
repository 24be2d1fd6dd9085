#pragma once

// Slot-filling strategies as general decision trees: an exact minimum-depth
// search, the max-entropy greedy heuristic and an unpruned reference oracle.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crs/model.hpp"

namespace crs {

/// Leaf (an item) or internal node asking one feature. `labels[i]` is the
/// value on the edge to `children[i]`; labels are sorted by handle.
struct DecisionTree {
    ItemId item = 0;
    Slot slot = 0;
    std::vector<ValueId> labels;
    std::vector<DecisionTree> children;

    static DecisionTree leaf(ItemId id) { return DecisionTree{id, 0, {}, {}}; }

    bool is_leaf() const noexcept { return children.empty(); }
    // Questions on the longest root-to-leaf path.
    int depth() const;
    std::size_t node_count() const;
    // Items at the leaves, left to right.
    ItemSet leaves() const;

    bool operator==(const DecisionTree&) const = default;
};

// Throws AmbiguityError naming the first pair of items of `s` that agree on
// every feature, or DomainError for an empty or invalid set.
void check_distinguishable(const ItemSet& s, const Catalog& catalog);

// Limits for the exact search; exceeding either throws SizeError.
struct DtBudget {
    std::size_t max_items = 5000;
    std::size_t max_states = 2'000'000;
};

DecisionTree build_min_depth(const ItemSet& s, const Catalog& catalog, const DtBudget& budget = {});
DecisionTree build_heuristic(const ItemSet& s, const Catalog& catalog);

struct OracleOptions {
    std::size_t max_items = 12;
    bool memoize = true;
};

int min_depth_oracle(const ItemSet& s, const Catalog& catalog, const OracleOptions& options = {});

struct WalkResult {
    ItemId item;
    int questions;
};

using AnswerFn = std::function<ValueId(Slot)>;

WalkResult walk(const DecisionTree& tree, const AnswerFn& answer);

// Answers drawn from the item's own values.
AnswerFn answers_of(const Catalog& catalog, ItemId item);

// Checks the structural invariants against the item set the tree was built
// for. Returns an empty string when the tree is valid, else the violation.
std::string validate_tree(const DecisionTree& tree, const ItemSet& s, const Catalog& catalog);

/// Serialization: {"item": name} for leaves,
/// {"feature": name, "edges": [{"value": token, "child": ...}, ...]} for nodes.
nlohmann::ordered_json tree_to_json(const DecisionTree& tree, const Catalog& catalog);
DecisionTree tree_from_json(const nlohmann::ordered_json& j, const Catalog& catalog);

} // namespace crs

#include "crs/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace crs {

namespace {

struct ItemSetHash {
    std::size_t operator()(const ItemSet& s) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (ItemId id : s) {
            h ^= id + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

using Partition = std::vector<std::pair<ValueId, ItemSet>>;

// Splits s by the value each item holds at `slot`, ordered by value handle.
Partition partition(const ItemSet& s, Slot slot, const Catalog& catalog) {
    std::map<ValueId, ItemSet> parts;
    for (ItemId id : s)
        parts[catalog.value(id, slot)].push_back(id);
    return Partition(parts.begin(), parts.end());
}

std::size_t active_count(const ItemSet& s, Slot slot, const Catalog& catalog) {
    std::vector<ValueId> vals;
    vals.reserve(s.size());
    for (ItemId id : s)
        vals.push_back(catalog.value(id, slot));
    std::sort(vals.begin(), vals.end());
    return static_cast<std::size_t>(std::unique(vals.begin(), vals.end()) - vals.begin());
}

// Smallest d with branching^d >= n.
int log_lower_bound(std::size_t n, std::size_t branching) {
    if (n <= 1)
        return 0;
    if (branching <= 1)
        return std::numeric_limits<int>::max() / 2;
    int d = 0;
    std::size_t reach = 1;
    while (reach < n) {
        reach *= branching;
        ++d;
    }
    return d;
}

void check_set(const ItemSet& s, const Catalog& catalog) {
    if (s.empty())
        throw DomainError("decision tree requested for an empty item set");
    for (std::size_t i = 0; i < s.size(); ++i) {
        catalog.check_item(s[i]);
        if (i && s[i - 1] >= s[i])
            throw DomainError("item set must be sorted and duplicate-free");
    }
}

constexpr int kUnbounded = std::numeric_limits<int>::max() / 4;

/// Memoized branch-and-bound over item subsets.
///
/// solve(S, limit) returns the exact minimum depth of S when it is <= limit;
/// otherwise it returns some value > limit that is a valid lower bound. Exact
/// results record the lowest-index feature achieving the optimum.
class MinDepthSearch {
public:
    MinDepthSearch(const Catalog& catalog, std::size_t max_states) : catalog_(catalog), max_states_(max_states) {}

    int solve(const ItemSet& s, int limit) {
        if (s.size() == 1)
            return 0;
        if (auto it = exact_.find(s); it != exact_.end())
            return it->second.depth;

        std::size_t branching = 0;
        std::vector<Slot> candidates;
        for (Slot f = 0; f < catalog_.feature_count(); ++f) {
            std::size_t k = active_count(s, f, catalog_);
            if (k > 1) {
                candidates.push_back(f);
                branching = std::max(branching, k);
            }
        }
        int lb = log_lower_bound(s.size(), branching);
        if (auto it = lower_.find(s); it != lower_.end())
            lb = std::max(lb, it->second);
        if (lb > limit)
            return lb;

        int best = kUnbounded;
        Slot best_slot = 0;
        for (Slot f : candidates) {
            // A child must come in at <= best - 2 to improve on the incumbent.
            const int child_limit = std::min(limit, best - 1) - 1;
            int worst = 0;
            bool feasible = true;
            Partition parts = partition(s, f, catalog_);
            // Largest children first: they fail fastest.
            std::stable_sort(parts.begin(), parts.end(),
                             [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
            for (const auto& [value, child] : parts) {
                int d = solve(child, child_limit);
                worst = std::max(worst, d);
                if (d > child_limit) {
                    feasible = false;
                    break;
                }
            }
            if (feasible && 1 + worst < best) {
                best = 1 + worst;
                best_slot = f;
                if (best == lb)
                    break;
            }
        }

        if (exact_.size() + lower_.size() >= max_states_)
            throw SizeError("minimum-depth search exceeded " + std::to_string(max_states_) + " states");
        if (best <= limit) {
            exact_[s] = Entry{best, best_slot};
            return best;
        }
        lower_[s] = std::max(lb, limit + 1);
        return limit + 1;
    }

    DecisionTree build(const ItemSet& s) {
        if (s.size() == 1)
            return DecisionTree::leaf(s.front());
        auto it = exact_.find(s);
        if (it == exact_.end()) {
            solve(s, kUnbounded);
            it = exact_.find(s);
        }
        DecisionTree node;
        node.slot = it->second.slot;
        for (auto& [value, child] : partition(s, node.slot, catalog_)) {
            node.labels.push_back(value);
            node.children.push_back(build(child));
        }
        return node;
    }

private:
    struct Entry {
        int depth;
        Slot slot;
    };

    const Catalog& catalog_;
    std::size_t max_states_;
    std::unordered_map<ItemSet, Entry, ItemSetHash> exact_;
    std::unordered_map<ItemSet, int, ItemSetHash> lower_;
};

double partition_entropy(const Partition& parts, std::size_t total) {
    std::vector<std::size_t> sizes;
    for (const auto& p : parts)
        sizes.push_back(p.second.size());
    // Fixed summation order so equal partitions shapes give equal entropies.
    std::sort(sizes.begin(), sizes.end());
    double h = 0.0;
    for (std::size_t n : sizes) {
        const double q = static_cast<double>(n) / static_cast<double>(total);
        h -= q * std::log2(q);
    }
    return h;
}

DecisionTree build_greedy(const ItemSet& s, const Catalog& catalog) {
    if (s.size() == 1)
        return DecisionTree::leaf(s.front());
    Slot best_slot = 0;
    double best_h = -1.0;
    std::size_t best_k = 0;
    Partition best_parts;
    for (Slot f = 0; f < catalog.feature_count(); ++f) {
        Partition parts = partition(s, f, catalog);
        if (parts.size() < 2)
            continue;
        const double h = partition_entropy(parts, s.size());
        const bool better = h > best_h + 1e-12 || (std::abs(h - best_h) <= 1e-12 && parts.size() > best_k);
        if (better) {
            best_slot = f;
            best_h = h;
            best_k = parts.size();
            best_parts = std::move(parts);
        }
    }
    DecisionTree node;
    node.slot = best_slot;
    for (auto& [value, child] : best_parts) {
        node.labels.push_back(value);
        node.children.push_back(build_greedy(child, catalog));
    }
    return node;
}

int oracle_rec(const ItemSet& s, const Catalog& catalog, std::unordered_map<ItemSet, int, ItemSetHash>* memo) {
    if (s.size() == 1)
        return 0;
    if (memo) {
        if (auto it = memo->find(s); it != memo->end())
            return it->second;
    }
    int best = kUnbounded;
    for (Slot f = 0; f < catalog.feature_count(); ++f) {
        Partition parts = partition(s, f, catalog);
        if (parts.size() < 2)
            continue;
        int worst = 0;
        for (const auto& [value, child] : parts)
            worst = std::max(worst, oracle_rec(child, catalog, memo));
        best = std::min(best, 1 + worst);
    }
    if (memo)
        (*memo)[s] = best;
    return best;
}

} // namespace

int DecisionTree::depth() const {
    int d = 0;
    for (const auto& c : children)
        d = std::max(d, 1 + c.depth());
    return d;
}

std::size_t DecisionTree::node_count() const {
    std::size_t n = 1;
    for (const auto& c : children)
        n += c.node_count();
    return n;
}

ItemSet DecisionTree::leaves() const {
    if (is_leaf())
        return {item};
    ItemSet out;
    for (const auto& c : children) {
        ItemSet sub = c.leaves();
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

void check_distinguishable(const ItemSet& s, const Catalog& catalog) {
    check_set(s, catalog);
    std::vector<ItemId> order(s);
    std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
        const auto& va = catalog.item(a).values;
        const auto& vb = catalog.item(b).values;
        return va != vb ? va < vb : a < b;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (catalog.item(order[i - 1]).values == catalog.item(order[i]).values) {
            ItemId a = std::min(order[i - 1], order[i]);
            ItemId b = std::max(order[i - 1], order[i]);
            throw AmbiguityError("items '" + catalog.item(a).name + "' and '" + catalog.item(b).name +
                                 "' agree on every feature");
        }
    }
}

DecisionTree build_min_depth(const ItemSet& s, const Catalog& catalog, const DtBudget& budget) {
    if (s.size() > budget.max_items)
        throw SizeError("minimum-depth search bound exceeded: " + std::to_string(s.size()) + " items > " +
                        std::to_string(budget.max_items));
    check_distinguishable(s, catalog);
    MinDepthSearch search(catalog, budget.max_states);
    return search.build(s);
}

DecisionTree build_heuristic(const ItemSet& s, const Catalog& catalog) {
    check_distinguishable(s, catalog);
    return build_greedy(s, catalog);
}

int min_depth_oracle(const ItemSet& s, const Catalog& catalog, const OracleOptions& options) {
    if (s.size() > options.max_items)
        throw SizeError("oracle bound exceeded: " + std::to_string(s.size()) + " items > " +
                        std::to_string(options.max_items));
    check_distinguishable(s, catalog);
    if (options.memoize) {
        std::unordered_map<ItemSet, int, ItemSetHash> memo;
        return oracle_rec(s, catalog, &memo);
    }
    return oracle_rec(s, catalog, nullptr);
}

WalkResult walk(const DecisionTree& tree, const AnswerFn& answer) {
    const DecisionTree* node = &tree;
    int questions = 0;
    while (!node->is_leaf()) {
        const ValueId v = answer(node->slot);
        ++questions;
        auto it = std::find(node->labels.begin(), node->labels.end(), v);
        if (it == node->labels.end())
            throw ProtocolError("answer " + std::to_string(v) + " for feature " + std::to_string(node->slot) +
                                " is not among the node's active values");
        node = &node->children[static_cast<std::size_t>(it - node->labels.begin())];
    }
    return WalkResult{node->item, questions};
}

AnswerFn answers_of(const Catalog& catalog, ItemId item) {
    catalog.check_item(item);
    return [&catalog, item](Slot slot) { return catalog.value(item, slot); };
}

namespace {

std::string validate_rec(const DecisionTree& t, const ItemSet& s, const Catalog& catalog, std::vector<char>& used) {
    if (t.is_leaf()) {
        if (s.size() != 1 || s.front() != t.item)
            return "leaf item does not match the item set reaching it";
        return {};
    }
    if (t.labels.size() != t.children.size())
        return "node label/child count mismatch";
    if (t.slot >= catalog.feature_count())
        return "node feature out of range";
    if (used[t.slot])
        return "feature repeats along a root-to-leaf path";
    if (t.children.size() < 2)
        return "internal node with fewer than two edges";
    Partition parts = partition(s, t.slot, catalog);
    if (parts.size() != t.labels.size())
        return "edge labels differ from the node's active values";
    used[t.slot] = 1;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].first != t.labels[i]) {
            used[t.slot] = 0;
            return "edge labels differ from the node's active values";
        }
        if (auto err = validate_rec(t.children[i], parts[i].second, catalog, used); !err.empty()) {
            used[t.slot] = 0;
            return err;
        }
    }
    used[t.slot] = 0;
    return {};
}

} // namespace

std::string validate_tree(const DecisionTree& tree, const ItemSet& s, const Catalog& catalog) {
    std::vector<char> used(catalog.feature_count(), 0);
    return validate_rec(tree, s, catalog, used);
}

nlohmann::ordered_json tree_to_json(const DecisionTree& tree, const Catalog& catalog) {
    nlohmann::ordered_json j;
    if (tree.is_leaf()) {
        j["item"] = catalog.item(tree.item).name;
        return j;
    }
    j["feature"] = catalog.schema().feature_name(tree.slot);
    j["edges"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < tree.children.size(); ++i) {
        nlohmann::ordered_json e;
        e["value"] = catalog.schema().value_name(tree.slot, tree.labels[i]);
        e["child"] = tree_to_json(tree.children[i], catalog);
        j["edges"].push_back(std::move(e));
    }
    return j;
}

DecisionTree tree_from_json(const nlohmann::ordered_json& j, const Catalog& catalog) {
    if (j.contains("item"))
        return DecisionTree::leaf(catalog.item_id(j.at("item").get<std::string>()));
    const auto name = j.at("feature").get<std::string>();
    auto slot = catalog.schema().find_feature(name);
    if (!slot)
        throw SchemaError("unknown feature '" + name + "' in serialized tree");
    DecisionTree node;
    node.slot = *slot;
    for (const auto& e : j.at("edges")) {
        node.labels.push_back(catalog.schema().value_id(*slot, e.at("value").get<std::string>()));
        node.children.push_back(tree_from_json(e.at("child"), catalog));
    }
    return node;
}

} // namespace crs

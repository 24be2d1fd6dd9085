#pragma once

// Test-side helpers: random instances and brute-force oracles written
// against the plain model types, independent of the library's searches.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "crs/model.hpp"
#include "crs/strategy.hpp"

namespace crs::testing {

using TestRng = std::mt19937_64;

inline std::size_t uniform(TestRng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

// Distinct items over features with domains of the given sizes. Values are
// tokens "a", "b", ... per feature.
inline Catalog random_catalog(TestRng& rng, std::size_t items, std::size_t features, std::size_t domain) {
    std::size_t combos = 1;
    for (std::size_t f = 0; f < features && combos < items; ++f)
        combos *= domain;
    if (combos < items)
        throw std::invalid_argument("too many items for the shape");
    std::vector<std::string> names;
    for (std::size_t f = 0; f < features; ++f)
        names.push_back("f" + std::to_string(f));
    std::set<std::vector<std::string>> seen;
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    while (rows.size() < items) {
        std::vector<std::string> vals;
        for (std::size_t f = 0; f < features; ++f)
            vals.push_back(std::string(1, static_cast<char>('a' + rng() % domain)));
        if (seen.insert(vals).second)
            rows.emplace_back("i" + std::to_string(rows.size()), vals);
    }
    return Catalog::from_rows(names, rows);
}

// Random shape within the caps, then a random catalog of that shape.
inline Catalog random_small_catalog(TestRng& rng, std::size_t max_items, std::size_t max_features,
                                    std::size_t max_domain, std::size_t min_items = 1) {
    for (;;) {
        const std::size_t p = uniform(rng, 1, max_features);
        const std::size_t d = uniform(rng, 2, max_domain);
        const std::size_t n = uniform(rng, min_items, max_items);
        std::size_t combos = 1;
        for (std::size_t f = 0; f < p && combos < n; ++f)
            combos *= d;
        if (combos >= n)
            return random_catalog(rng, n, p, d);
    }
}

// Minimum number of questions separating the items, by exhaustive search.
inline int brute_depth(const ItemSet& s, const Catalog& c) {
    if (s.size() <= 1)
        return 0;
    int best = std::numeric_limits<int>::max();
    for (Slot f = 0; f < c.feature_count(); ++f) {
        std::map<ValueId, ItemSet> parts;
        for (ItemId id : s)
            parts[c.value(id, f)].push_back(id);
        if (parts.size() < 2)
            continue;
        int worst = 0;
        for (const auto& [v, part] : parts)
            worst = std::max(worst, brute_depth(part, c));
        best = std::min(best, 1 + worst);
    }
    if (best == std::numeric_limits<int>::max())
        throw std::logic_error("indistinguishable items");
    return best;
}

/// Bounded game over explicit sets: does the system finish within `m`
/// interactions against every truthful user reaction? No memoization.
class GameOracle {
public:
    GameOracle(const Catalog& c, Protocol protocol) : c_(c), protocol_(protocol) {}

    struct State {
        std::vector<std::optional<ValueId>> q;
        std::vector<std::set<ValueId>> k;
        std::set<ItemId> n;
    };

    State cold() const {
        return State{std::vector<std::optional<ValueId>>(c_.feature_count()),
                     std::vector<std::set<ValueId>>(c_.feature_count()), {}};
    }

    std::vector<ItemId> selection(const State& st) const {
        std::vector<ItemId> s;
        for (ItemId id = 0; id < c_.size(); ++id) {
            if (st.n.contains(id))
                continue;
            bool ok = true;
            for (Slot f = 0; f < c_.feature_count() && ok; ++f) {
                const ValueId v = c_.value(id, f);
                ok = st.q[f] ? *st.q[f] == v : !st.k[f].contains(v);
            }
            if (ok)
                s.push_back(id);
        }
        return s;
    }

    bool wins(const State& st, int m) const {
        if (m <= 0)
            return false;
        if (static_cast<int>(c_.size() - st.n.size()) <= m)
            return true;
        const auto s = selection(st);
        if (s.empty())
            return relax(st, m);
        if (s.size() == 1) {
            for (const State& next : rejections(st, s.front()))
                if (!wins(next, m - 1))
                    return false;
            return true;
        }
        for (Slot f = 0; f < c_.feature_count(); ++f) {
            if (st.q[f])
                continue;
            std::set<ValueId> av;
            for (ItemId id : s)
                av.insert(c_.value(id, f));
            bool all = true;
            for (ValueId v : av) {
                State next = st;
                next.q[f] = v;
                if (!wins(next, m - 1)) {
                    all = false;
                    break;
                }
            }
            if (all)
                return true;
        }
        return false;
    }

    int min_bound(const State& st) const {
        for (int m = 1;; ++m)
            if (wins(st, m))
                return m;
    }

private:
    bool relax(const State& st, int m) const {
        for (Slot f = 0; f < c_.feature_count(); ++f) {
            if (!st.q[f])
                continue;
            State un = st;
            un.q[f].reset();
            if (wins(un, m))
                return true;
            bool any = false, all = true;
            for (ValueId v = 0; v < c_.schema().domain_size(f); ++v) {
                if (v == *st.q[f] || st.k[f].contains(v))
                    continue;
                State ch = st;
                ch.q[f] = v;
                if (selection(ch).empty())
                    continue;
                any = true;
                if (!wins(ch, m - 1)) {
                    all = false;
                    break;
                }
            }
            if (any && all)
                return true;
        }
        return false;
    }

public:
    // A rejection is truthful when some ideal set survives it: every filled
    // value is still held by an unrejected item free of disliked values.
    bool consistent(const State& st) const {
        std::vector<ItemId> ideal;
        for (ItemId id = 0; id < c_.size(); ++id) {
            bool ok = !st.n.contains(id);
            for (Slot f = 0; f < c_.feature_count() && ok; ++f)
                ok = !st.k[f].contains(c_.value(id, f));
            if (ok)
                ideal.push_back(id);
        }
        if (ideal.empty())
            return false;
        for (Slot f = 0; f < c_.feature_count(); ++f)
            if (st.q[f] && std::none_of(ideal.begin(), ideal.end(),
                                        [&](ItemId id) { return c_.value(id, f) == *st.q[f]; }))
                return false;
        return true;
    }

private:
    std::vector<State> rejections(const State& st, ItemId item) const {
        std::vector<State> out;
        if (protocol_ == Protocol::P2) {
            for (Slot f = 0; f < c_.feature_count(); ++f) {
                const ValueId v = c_.value(item, f);
                State next = st;
                next.k[f].insert(v);
                if (next.k[f].size() >= c_.schema().domain_size(f))
                    continue;
                next.n.insert(item);
                for (ItemId id = 0; id < c_.size(); ++id)
                    if (c_.value(id, f) == v)
                        next.n.insert(id);
                if (consistent(next))
                    out.push_back(std::move(next));
            }
        }
        if (out.empty()) {
            State next = st;
            next.n.insert(item);
            if (consistent(next))
                out.push_back(std::move(next));
        }
        return out;
    }

    const Catalog& c_;
    Protocol protocol_;
};

inline UserModel cold_user(const Catalog& c) {
    return UserModel{Query::all_variables(c.feature_count()), Constraints::none(c.feature_count()), {}, {}};
}

/// Random valid conversation ending in acceptance of `target`: random
/// fills, unfills, changes, dislikes and rejections that never rule the
/// target out, then repairs the query and accepts.
inline InteractionSequence random_conversation(TestRng& rng, const Catalog& c, ItemId target, std::size_t steps) {
    const std::size_t p = c.feature_count();
    InteractionSequence seq;
    seq.initial_query = Query::all_variables(p);
    seq.initial_query.next_variable = static_cast<VarId>(p);
    for (Slot f = 0; f < p; ++f) {
        if (rng() % 3 == 0)
            seq.initial_query.terms[f] =
                Term::value(static_cast<ValueId>(rng() % c.schema().domain_size(f)));
        else
            seq.initial_query.terms[f] = Term::variable(static_cast<VarId>(f));
    }
    ConversationState st = initial_state(seq, c);
    auto try_step = [&](const Transformation& t) {
        try {
            ConversationState next = apply(st, t, c);
            st = std::move(next);
            seq.steps.push_back(t);
            return true;
        } catch (const TransformationError&) {
            return false;
        }
    };

    for (std::size_t i = 0; i < steps; ++i) {
        const Slot f = static_cast<Slot>(rng() % p);
        const auto v = static_cast<ValueId>(rng() % c.schema().domain_size(f));
        const ValueId tv = c.value(target, f);
        switch (rng() % 5) {
        case 0:
            if (!st.user.constraints.forbids(f, v) || v == tv)
                try_step(SlotFill{f, v});
            break;
        case 1: try_step(SlotUnfill{f}); break;
        case 2: try_step(SlotChange{f, v}); break;
        case 3:
            if (v != tv)
                try_step(DislikeValue{f, v});
            break;
        default: {
            ItemSet rej;
            for (ItemId id : st.recommended)
                if (id != target && rng() % 2 == 0)
                    rej.push_back(id);
            if (!rej.empty())
                try_step(RejectItems{rej});
            break;
        }
        }
    }
    // Steer the query onto the target and accept it.
    for (Slot f = 0; f < p; ++f) {
        const ValueId tv = c.value(target, f);
        const Term& t = st.user.query[f];
        if (t.is_variable())
            try_step(SlotFill{f, tv});
        else if (t.value_id() != tv)
            try_step(SlotChange{f, tv});
    }
    if (!try_step(AcceptItem{target}))
        throw std::logic_error("generated conversation cannot accept its target");
    return seq;
}

} // namespace crs::testing

#include "crs/strategy.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>

namespace crs {

namespace {

using Mask = std::uint64_t;

constexpr std::size_t kMaxMaskItems = 64;
constexpr std::size_t kMaxMaskValues = 64;

Mask bit(std::size_t i) { return Mask{1} << i; }

// Compact search state. Slot terms are 0 for a variable, value + 1 otherwise.
struct SearchState {
    std::vector<std::uint8_t> query;
    std::vector<Mask> disliked;
    Mask rejected = 0;
};

} // namespace

std::string to_string(Protocol p) { return p == Protocol::P1 ? "P1" : "P2"; }

Protocol parse_protocol(const std::string& s) {
    if (s == "p1" || s == "P1")
        return Protocol::P1;
    if (s == "p2" || s == "P2")
        return Protocol::P2;
    throw DomainError("unknown protocol '" + s + "' (expected p1 or p2)");
}

void check_budget(const Catalog& catalog, const StrategyBudget& budget) {
    const std::size_t items_cap = std::min(budget.max_items, kMaxMaskItems);
    if (catalog.size() > items_cap)
        throw SizeError("strategy checker budget exceeded: " + std::to_string(catalog.size()) + " items > " +
                        std::to_string(items_cap));
    if (catalog.feature_count() > budget.max_features)
        throw SizeError("strategy checker budget exceeded: " + std::to_string(catalog.feature_count()) +
                        " features > " + std::to_string(budget.max_features));
    const std::size_t domain_cap = std::min(budget.max_domain, kMaxMaskValues);
    for (Slot s = 0; s < catalog.feature_count(); ++s)
        if (catalog.schema().domain_size(s) > domain_cap)
            throw SizeError("strategy checker budget exceeded: feature '" + catalog.schema().feature_name(s) +
                            "' has " + std::to_string(catalog.schema().domain_size(s)) + " values > " +
                            std::to_string(domain_cap));
}

struct StrategyExplorer::Impl {
    Impl(const Catalog& c, Protocol p, ExploreOptions o) : catalog(c), protocol(p), options(o) {
        check_budget(catalog, options.budget);
        features = catalog.feature_count();
        all = catalog.size() == 64 ? ~Mask{0} : bit(catalog.size()) - 1;
        with_value.resize(features);
        for (Slot s = 0; s < features; ++s) {
            with_value[s].assign(catalog.schema().domain_size(s), 0);
            for (ItemId id = 0; id < catalog.size(); ++id)
                with_value[s][catalog.value(id, s)] |= bit(id);
        }
    }

    SearchState from_user(const UserModel& u) const {
        if (u.query.size() != features || u.constraints.disliked.size() != features)
            throw SchemaError("user model does not match the catalog's feature count");
        SearchState st;
        st.query.resize(features);
        st.disliked.resize(features);
        for (Slot s = 0; s < features; ++s) {
            const Term& t = u.query[s];
            if (t.is_value()) {
                catalog.schema().check_value(s, t.value_id());
                st.query[s] = static_cast<std::uint8_t>(t.value_id() + 1);
            }
            for (ValueId v : u.constraints.disliked[s]) {
                catalog.schema().check_value(s, v);
                st.disliked[s] |= bit(v);
            }
        }
        for (ItemId id : u.disliked_items) {
            catalog.check_item(id);
            st.rejected |= bit(id);
        }
        return st;
    }

    Mask select(const SearchState& st) const {
        Mask m = all & ~st.rejected;
        for (Slot s = 0; s < features && m; ++s) {
            if (st.query[s]) {
                m &= with_value[s][st.query[s] - 1];
            } else if (st.disliked[s]) {
                for (Mask d = st.disliked[s]; d; d &= d - 1)
                    m &= ~with_value[s][static_cast<std::size_t>(std::countr_zero(d))];
            }
        }
        return m;
    }

    Mask active_values(Mask items, Slot s) const {
        Mask vals = 0;
        for (std::size_t v = 0; v < with_value[s].size(); ++v)
            if (with_value[s][v] & items)
                vals |= bit(v);
        return vals;
    }

    std::string key(const SearchState& st, int bound) const {
        std::string k;
        k.reserve(features * 9 + 12);
        k.append(reinterpret_cast<const char*>(st.query.data()), st.query.size());
        k.append(reinterpret_cast<const char*>(st.disliked.data()), st.disliked.size() * sizeof(Mask));
        k.append(reinterpret_cast<const char*>(&st.rejected), sizeof(Mask));
        k.append(reinterpret_cast<const char*>(&bound), sizeof(int));
        return k;
    }

    // Items that may still be ideal: not rejected, no disliked value.
    Mask candidates(const SearchState& st) const {
        Mask m = all & ~st.rejected;
        for (Slot s = 0; s < features; ++s)
            for (Mask d = st.disliked[s]; d; d &= d - 1)
                m &= ~with_value[s][static_cast<std::size_t>(std::countr_zero(d))];
        return m;
    }

    // Some ideal remains and every filled value is carried by one.
    bool truthful(const SearchState& st) const {
        const Mask c = candidates(st);
        if (c == 0)
            return false;
        for (Slot s = 0; s < features; ++s)
            if (st.query[s] && !(c & with_value[s][st.query[s] - 1]))
                return false;
        return true;
    }

    // Truthful outcomes of rejecting the proposed item, one per possible
    // stated dislike. Empty when the user can only accept.
    std::vector<SearchState> rejection_outcomes(const SearchState& st, ItemId item) const {
        std::vector<SearchState> out;
        if (protocol == Protocol::P2) {
            for (Slot s = 0; s < features; ++s) {
                const ValueId v = catalog.value(item, s);
                SearchState next = st;
                next.disliked[s] |= bit(v);
                // At least one value per feature stays permitted.
                if (std::popcount(next.disliked[s]) >= static_cast<int>(with_value[s].size()))
                    continue;
                next.rejected |= bit(item) | with_value[s][v];
                if (truthful(next))
                    out.push_back(std::move(next));
            }
        }
        if (out.empty()) {
            SearchState next = st;
            next.rejected |= bit(item);
            if (truthful(next))
                out.push_back(std::move(next));
        }
        return out;
    }

    bool explore(const SearchState& st, int bound) {
        ++stats.calls;
        if (bound <= 0)
            return false;
        const Mask remaining = all & ~st.rejected;
        if (std::popcount(remaining) <= bound)
            return true;

        std::string k;
        if (options.memoize) {
            k = key(st, bound);
            if (auto it = memo.find(k); it != memo.end()) {
                ++stats.memo_hits;
                return it->second;
            }
        }

        const Mask selected = select(st);
        bool result = false;
        if (selected == 0) {
            result = relax(st, bound);
        } else if (std::popcount(selected) == 1) {
            // Propose the only match. Acceptance ends the dialog within the
            // bound; every rejection outcome must still be winnable.
            const ItemId item = static_cast<ItemId>(std::countr_zero(selected));
            result = true;
            for (const SearchState& next : rejection_outcomes(st, item)) {
                if (!explore(next, bound - 1)) {
                    result = false;
                    break;
                }
            }
        } else {
            for (Slot s = 0; s < features && !result; ++s) {
                if (st.query[s])
                    continue;
                bool all_answers = true;
                for (Mask vals = active_values(selected, s); vals; vals &= vals - 1) {
                    SearchState next = st;
                    next.query[s] = static_cast<std::uint8_t>(std::countr_zero(vals) + 1);
                    if (!explore(next, bound - 1)) {
                        all_answers = false;
                        break;
                    }
                }
                result = all_answers;
            }
        }

        if (options.memoize) {
            memo.emplace(std::move(k), result);
            stats.memo_entries = memo.size();
        }
        return result;
    }

    // The query selects nothing after a rejection: unfill or change a slot.
    bool relax(const SearchState& st, int bound) {
        for (Slot s = 0; s < features; ++s) {
            if (!st.query[s])
                continue;
            SearchState unfilled = st;
            unfilled.query[s] = 0;
            if (explore(unfilled, bound))
                return true;

            const std::size_t current = st.query[s] - 1u;
            bool any_change = false;
            bool all_changes = true;
            for (std::size_t v = 0; v < with_value[s].size() && all_changes; ++v) {
                if (v == current || (st.disliked[s] & bit(v)))
                    continue;
                SearchState changed = st;
                changed.query[s] = static_cast<std::uint8_t>(v + 1);
                if (select(changed) == 0)
                    continue;
                any_change = true;
                all_changes = explore(changed, bound - 1);
            }
            if (any_change && all_changes)
                return true;
        }
        return false;
    }

    const Catalog& catalog;
    Protocol protocol;
    ExploreOptions options;
    std::size_t features = 0;
    Mask all = 0;
    std::vector<std::vector<Mask>> with_value;
    std::unordered_map<std::string, bool> memo;
    ExploreStats stats;
};

StrategyExplorer::StrategyExplorer(const Catalog& catalog, Protocol protocol, ExploreOptions options)
    : impl_(std::make_unique<Impl>(catalog, protocol, options)) {}

StrategyExplorer::~StrategyExplorer() = default;

bool StrategyExplorer::explore(const UserModel& user, int bound) { return impl_->explore(impl_->from_user(user), bound); }

int StrategyExplorer::min_interactions(const UserModel& user) {
    const SearchState st = impl_->from_user(user);
    const int remaining = std::popcount(impl_->all & ~st.rejected);
    if (remaining == 0)
        throw DomainError("no recommendable items left (C - N is empty)");
    int lo = 1;
    int hi = remaining;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (impl_->explore(st, mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

const ExploreStats& StrategyExplorer::stats() const noexcept { return impl_->stats; }

bool explore_strategies(const Catalog& catalog, const UserModel& user, int bound, Protocol protocol,
                        const ExploreOptions& options) {
    StrategyExplorer ex(catalog, protocol, options);
    return ex.explore(user, bound);
}

int min_interactions(const Catalog& catalog, const UserModel& user, Protocol protocol, const ExploreOptions& options) {
    StrategyExplorer ex(catalog, protocol, options);
    return ex.min_interactions(user);
}

// ---------------------------------------------------------------------------
// Interaction sequences

ConversationState initial_state(const InteractionSequence& seq, const Catalog& catalog) {
    const std::size_t p = catalog.feature_count();
    if (seq.initial_query.size() != p)
        throw ReplayError(0, "initial query has " + std::to_string(seq.initial_query.size()) + " slots, catalog has " +
                                 std::to_string(p) + " features");
    return make_state(UserModel{seq.initial_query, Constraints::none(p), {}, {}}, catalog);
}

ConversationState replay(const InteractionSequence& seq, const Catalog& catalog) {
    ConversationState st = initial_state(seq, catalog);
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        try {
            st = apply(st, seq.steps[i], catalog);
        } catch (const Error& e) {
            throw ReplayError(i, e.what());
        }
    }
    return st;
}

std::size_t interaction_count(const InteractionSequence& seq) { return seq.steps.size(); }

bool is_fill_only(const InteractionSequence& seq) {
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        const bool last = i + 1 == seq.steps.size();
        if (last ? !std::holds_alternative<AcceptItem>(seq.steps[i]) : !is_slot_fill(seq.steps[i]))
            return false;
    }
    return !seq.steps.empty();
}

InteractionSequence compress_to_slot_filling(const InteractionSequence& seq, const Catalog& catalog) {
    const ConversationState final_state = replay(seq, catalog);
    if (seq.steps.empty() || !std::holds_alternative<AcceptItem>(seq.steps.back()) || !final_state.accepted)
        throw ContractError("sequence does not end with an accepted item");
    const ItemId accepted = std::get<AcceptItem>(seq.steps.back()).item;

    const std::size_t p = catalog.feature_count();
    constexpr std::ptrdiff_t kNone = -1;
    // For each slot: index of the step whose value is still in place at the end.
    std::vector<std::ptrdiff_t> surviving(p, kNone);
    // Initial values that were later unfilled or changed.
    std::vector<bool> initial_dropped(p, false);

    for (std::size_t i = 0; i + 1 < seq.steps.size(); ++i) {
        const Transformation& t = seq.steps[i];
        if (const auto* f = std::get_if<SlotFill>(&t)) {
            surviving[f->slot] = static_cast<std::ptrdiff_t>(i);
        } else if (const auto* c = std::get_if<SlotChange>(&t)) {
            surviving[c->slot] = static_cast<std::ptrdiff_t>(i);
            initial_dropped[c->slot] = true;
        } else if (const auto* u = std::get_if<SlotUnfill>(&t)) {
            surviving[u->slot] = kNone;
            initial_dropped[u->slot] = true;
        }
    }

    InteractionSequence out;
    out.initial_query = seq.initial_query;
    for (Slot s = 0; s < p; ++s)
        if (out.initial_query.terms[s].is_value() && initial_dropped[s])
            out.initial_query.terms[s] = Term::variable(out.initial_query.fresh_variable());

    for (std::size_t i = 0; i + 1 < seq.steps.size(); ++i) {
        const Transformation& t = seq.steps[i];
        if (const auto* f = std::get_if<SlotFill>(&t)) {
            if (surviving[f->slot] == static_cast<std::ptrdiff_t>(i))
                out.steps.push_back(SlotFill{f->slot, f->value});
        } else if (const auto* c = std::get_if<SlotChange>(&t)) {
            if (surviving[c->slot] == static_cast<std::ptrdiff_t>(i))
                out.steps.push_back(SlotFill{c->slot, c->value});
        }
    }
    out.steps.push_back(AcceptItem{accepted});

    const ConversationState check = replay(out, catalog);
    if (!check.accepted || check.recommended != ItemSet{accepted})
        throw ContractError("compressed sequence does not reach the accepted item");
    return out;
}

} // namespace crs

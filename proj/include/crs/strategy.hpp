#pragma once

// Bounded-interaction strategy search over the full conversation model
// (slot filling, proposal, rejection, slot unfilling and slot change), and
// the rewrite of successful conversations into slot-filling-only ones.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crs/model.hpp"

namespace crs {

enum class Protocol { P1, P2 };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

struct StrategyBudget {
    std::size_t max_items = 12;
    std::size_t max_features = 5;
    std::size_t max_domain = 4;
};

struct ExploreOptions {
    StrategyBudget budget;
    bool memoize = true;
};

struct ExploreStats {
    std::uint64_t calls = 0;
    std::uint64_t memo_hits = 0;
    std::size_t memo_entries = 0;
};

/// Decides whether a well-founded strategy finishes within a given number of
/// user interactions, against every truthful user behaviour.
///
/// System moves are existential: which unfilled feature to ask while the
/// query selects several items, and, once the selection is empty after a
/// rejection, which filled slot to unfill or change. User moves are
/// universal: every active value on a fill, accept or reject on a proposal
/// (reject only while unrejected items free of disliked values still carry
/// every filled value),
/// every feature value of the rejected item as the stated dislike (P2 only),
/// every admissible replacement value on a change.
///
/// Interaction accounting: a fill costs 1, a proposal costs 1 (accepted or
/// rejected), an unfill after a rejection costs nothing further, a change
/// costs 1. Results are memoized on (query values, constraints, rejected
/// items, bound); liked items never influence the search.
class StrategyExplorer {
public:
    StrategyExplorer(const Catalog& catalog, Protocol protocol, ExploreOptions options = {});
    ~StrategyExplorer();
    StrategyExplorer(const StrategyExplorer&) = delete;
    StrategyExplorer& operator=(const StrategyExplorer&) = delete;

    bool explore(const UserModel& user, int bound);
    // Least bound for which explore() holds; never above |C - N|.
    int min_interactions(const UserModel& user);

    const ExploreStats& stats() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Throws SizeError when the catalog exceeds the budget.
void check_budget(const Catalog& catalog, const StrategyBudget& budget);

bool explore_strategies(const Catalog& catalog, const UserModel& user, int bound, Protocol protocol,
                        const ExploreOptions& options = {});
int min_interactions(const Catalog& catalog, const UserModel& user, Protocol protocol,
                     const ExploreOptions& options = {});

/// A conversation: the initial query (constraints and item sets start
/// empty) followed by transformations, the last one accepting an item.
struct InteractionSequence {
    Query initial_query;
    std::vector<Transformation> steps;
};

ConversationState initial_state(const InteractionSequence& seq, const Catalog& catalog);
// Replays every step through model::apply; throws ReplayError with the index
// of the first step that does not apply.
ConversationState replay(const InteractionSequence& seq, const Catalog& catalog);

// Interactions counted by the sequence (every step).
std::size_t interaction_count(const InteractionSequence& seq);
bool is_fill_only(const InteractionSequence& seq);

InteractionSequence compress_to_slot_filling(const InteractionSequence& seq, const Catalog& catalog);

} // namespace crs

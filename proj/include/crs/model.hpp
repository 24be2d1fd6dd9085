#pragma once

// Core conversation model: catalogs of single-valued categorical items,
// queries over them, user models and the transformations a system-driven
// conversation applies to them.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "crs/errors.hpp"

namespace crs {

using ItemId = std::uint32_t;
using ValueId = std::uint32_t;
using VarId = std::uint32_t;
using Slot = std::size_t;

// Sorted, duplicate-free list of item ids.
using ItemSet = std::vector<ItemId>;

/// Feature names plus one interned value domain per feature.
///
/// Values are opaque tokens; each domain hands out dense integer handles in
/// insertion order and all comparisons downstream are handle comparisons.
class CatalogSchema {
public:
    CatalogSchema() = default;
    CatalogSchema(std::vector<std::string> feature_names, std::vector<std::vector<std::string>> domains);

    std::size_t feature_count() const noexcept { return names_.size(); }
    const std::string& feature_name(Slot slot) const;
    std::optional<Slot> find_feature(std::string_view name) const;

    std::size_t domain_size(Slot slot) const;
    const std::vector<std::string>& domain(Slot slot) const;
    const std::string& value_name(Slot slot, ValueId value) const;
    std::optional<ValueId> find_value(Slot slot, std::string_view token) const;
    // Throws SchemaError when the token is not in the domain.
    ValueId value_id(Slot slot, std::string_view token) const;

    void check_slot(Slot slot) const;
    void check_value(Slot slot, ValueId value) const;

    bool operator==(const CatalogSchema& other) const {
        return names_ == other.names_ && domains_ == other.domains_;
    }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> domains_;
    std::vector<std::unordered_map<std::string, ValueId>> lookup_;
};

struct Item {
    std::string name;
    std::vector<ValueId> values;

    bool operator==(const Item&) const = default;
};

/// A fixed item universe. Item ids are positions, so iteration by id is
/// iteration in insertion order.
class Catalog {
public:
    Catalog() = default;
    Catalog(CatalogSchema schema, std::vector<Item> items);

    // Builds domains from the tokens in first-appearance order.
    static Catalog from_rows(std::vector<std::string> feature_names,
                             const std::vector<std::pair<std::string, std::vector<std::string>>>& rows);

    const CatalogSchema& schema() const noexcept { return schema_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    std::size_t feature_count() const noexcept { return schema_.feature_count(); }

    const Item& item(ItemId id) const;
    const std::vector<Item>& items() const noexcept { return items_; }
    ValueId value(ItemId id, Slot slot) const { return item(id).values[slot]; }
    const std::string& value_name(ItemId id, Slot slot) const { return schema_.value_name(slot, value(id, slot)); }
    std::optional<ItemId> find_item(std::string_view name) const;
    // Throws DomainError on unknown names.
    ItemId item_id(std::string_view name) const;
    ItemSet all_ids() const;

    void check_item(ItemId id) const;

    bool operator==(const Catalog& other) const { return schema_ == other.schema_ && items_ == other.items_; }

private:
    CatalogSchema schema_;
    std::vector<Item> items_;
    std::unordered_map<std::string, ItemId> by_name_;
};

class Term {
public:
    static Term variable(VarId id) { return Term(true, id); }
    static Term value(ValueId id) { return Term(false, id); }

    bool is_variable() const noexcept { return variable_; }
    bool is_value() const noexcept { return !variable_; }
    VarId variable_id() const;
    ValueId value_id() const;

    bool operator==(const Term&) const = default;

private:
    Term(bool variable, std::uint32_t id) : variable_(variable), id_(id) {}

    bool variable_;
    std::uint32_t id_;
};

struct Query {
    std::vector<Term> terms;
    // Next fresh variable id; slot unfilling draws from here.
    VarId next_variable = 0;

    static Query all_variables(std::size_t feature_count);

    std::size_t size() const noexcept { return terms.size(); }
    const Term& operator[](Slot slot) const { return terms.at(slot); }
    std::size_t filled_count() const;
    VarId fresh_variable() { return next_variable++; }

    bool operator==(const Query&) const = default;
};

// Equality up to renaming of variables.
bool equivalent(const Query& a, const Query& b);

struct Constraints {
    std::vector<std::set<ValueId>> disliked;

    static Constraints none(std::size_t feature_count);
    bool forbids(Slot slot, ValueId value) const { return disliked.at(slot).contains(value); }
    bool empty() const;

    bool operator==(const Constraints&) const = default;
};

struct UserModel {
    Query query;
    Constraints constraints;
    std::set<ItemId> liked;
    std::set<ItemId> disliked_items;

    bool operator==(const UserModel&) const = default;
};

struct ConversationState {
    UserModel user;
    ItemSet recommended;
    bool accepted = false;

    bool operator==(const ConversationState&) const = default;
};

struct Binding {
    VarId variable;
    Slot slot;
    ValueId value;
};

struct Substitution {
    std::vector<Binding> bindings;
};

// Transformations. Each interaction of a conversation is one of these.
struct SlotFill {
    Slot slot;
    ValueId value;
};
struct SlotUnfill {
    Slot slot;
};
struct SlotChange {
    Slot slot;
    ValueId value;
};
struct DislikeValue {
    Slot slot;
    ValueId value;
};
struct RejectItems {
    ItemSet items;
};
struct AcceptItem {
    ItemId item;
};

using Transformation = std::variant<SlotFill, SlotUnfill, SlotChange, DislikeValue, RejectItems, AcceptItem>;

std::string describe(const Transformation& t, const Catalog& catalog);
bool is_slot_fill(const Transformation& t);

/// Ranking hook for Rec(U): receives the matching items in id order and
/// returns the proposal list. The default keeps every match.
using Recommender = std::function<ItemSet(const ItemSet& matches, const UserModel& user)>;
ItemSet identity_recommender(const ItemSet& matches, const UserModel& user);

bool is_coherent(const Substitution& sub, const Constraints& k, const CatalogSchema& schema);
Query apply_substitution(const Substitution& sub, const Query& q);

bool matches(const Item& item, const Query& q, const Constraints& k);
ItemSet select(const Query& q, const Catalog& catalog, const Constraints& k, const std::set<ItemId>& excluded);
std::vector<ValueId> active_values(const ItemSet& s, Slot slot, const Catalog& catalog);

ConversationState cold_start(const Catalog& catalog);
// State for an arbitrary user model, with Rec(U) computed by `rec`.
ConversationState make_state(UserModel user, const Catalog& catalog, const Recommender& rec = identity_recommender);

ConversationState apply(const ConversationState& state, const Transformation& t, const Catalog& catalog,
                        const Recommender& rec = identity_recommender);

} // namespace crs

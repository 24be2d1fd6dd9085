#include "crs/model.hpp"

#include <algorithm>
#include <sstream>

namespace crs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool contains_sorted(const ItemSet& s, ItemId id) { return std::binary_search(s.begin(), s.end(), id); }

} // namespace

// ---------------------------------------------------------------------------
// CatalogSchema

CatalogSchema::CatalogSchema(std::vector<std::string> feature_names, std::vector<std::vector<std::string>> domains)
    : names_(std::move(feature_names)), domains_(std::move(domains)) {
    if (names_.empty())
        throw SchemaError("schema needs at least one feature");
    if (names_.size() != domains_.size())
        throw SchemaError("schema has " + std::to_string(names_.size()) + " feature names but " +
                          std::to_string(domains_.size()) + " domains");
    std::unordered_map<std::string, int> seen_names;
    lookup_.resize(domains_.size());
    for (Slot i = 0; i < names_.size(); ++i) {
        if (++seen_names[names_[i]] > 1)
            throw SchemaError("duplicate feature name '" + names_[i] + "'");
        if (domains_[i].empty())
            throw SchemaError("feature '" + names_[i] + "' has an empty domain");
        for (ValueId v = 0; v < domains_[i].size(); ++v) {
            if (!lookup_[i].emplace(domains_[i][v], v).second)
                throw SchemaError("feature '" + names_[i] + "' repeats value '" + domains_[i][v] + "'");
        }
    }
}

const std::string& CatalogSchema::feature_name(Slot slot) const {
    check_slot(slot);
    return names_[slot];
}

std::optional<Slot> CatalogSchema::find_feature(std::string_view name) const {
    for (Slot i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return i;
    return std::nullopt;
}

std::size_t CatalogSchema::domain_size(Slot slot) const {
    check_slot(slot);
    return domains_[slot].size();
}

const std::vector<std::string>& CatalogSchema::domain(Slot slot) const {
    check_slot(slot);
    return domains_[slot];
}

const std::string& CatalogSchema::value_name(Slot slot, ValueId value) const {
    check_value(slot, value);
    return domains_[slot][value];
}

std::optional<ValueId> CatalogSchema::find_value(Slot slot, std::string_view token) const {
    check_slot(slot);
    auto it = lookup_[slot].find(std::string(token));
    if (it == lookup_[slot].end())
        return std::nullopt;
    return it->second;
}

ValueId CatalogSchema::value_id(Slot slot, std::string_view token) const {
    if (auto v = find_value(slot, token))
        return *v;
    throw SchemaError("value '" + std::string(token) + "' is not in the domain of feature '" + names_[slot] + "'");
}

void CatalogSchema::check_slot(Slot slot) const {
    if (slot >= names_.size())
        throw SchemaError("feature index " + std::to_string(slot) + " out of range (p = " +
                          std::to_string(names_.size()) + ")");
}

void CatalogSchema::check_value(Slot slot, ValueId value) const {
    check_slot(slot);
    if (value >= domains_[slot].size())
        throw SchemaError("value handle " + std::to_string(value) + " outside the domain of feature '" +
                          names_[slot] + "'");
}

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(CatalogSchema schema, std::vector<Item> items) : schema_(std::move(schema)), items_(std::move(items)) {
    by_name_.reserve(items_.size());
    for (ItemId id = 0; id < items_.size(); ++id) {
        const Item& it = items_[id];
        if (it.values.size() != schema_.feature_count())
            throw SchemaError("item '" + it.name + "' has " + std::to_string(it.values.size()) +
                              " values, schema has " + std::to_string(schema_.feature_count()) + " features");
        for (Slot s = 0; s < it.values.size(); ++s)
            schema_.check_value(s, it.values[s]);
        if (!by_name_.emplace(it.name, id).second)
            throw SchemaError("duplicate item identifier '" + it.name + "'");
    }
}

Catalog Catalog::from_rows(std::vector<std::string> feature_names,
                           const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
    const std::size_t p = feature_names.size();
    std::vector<std::vector<std::string>> domains(p);
    std::vector<std::unordered_map<std::string, ValueId>> index(p);
    std::vector<Item> items;
    items.reserve(rows.size());
    for (const auto& [name, tokens] : rows) {
        if (tokens.size() != p)
            throw SchemaError("row '" + name + "' has " + std::to_string(tokens.size()) + " values, expected " +
                              std::to_string(p));
        Item item{name, std::vector<ValueId>(p)};
        for (Slot s = 0; s < p; ++s) {
            auto [it, inserted] = index[s].emplace(tokens[s], static_cast<ValueId>(domains[s].size()));
            if (inserted)
                domains[s].push_back(tokens[s]);
            item.values[s] = it->second;
        }
        items.push_back(std::move(item));
    }
    return Catalog(CatalogSchema(std::move(feature_names), std::move(domains)), std::move(items));
}

const Item& Catalog::item(ItemId id) const {
    check_item(id);
    return items_[id];
}

std::optional<ItemId> Catalog::find_item(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end())
        return std::nullopt;
    return it->second;
}

ItemId Catalog::item_id(std::string_view name) const {
    if (auto id = find_item(name))
        return *id;
    throw DomainError("unknown item '" + std::string(name) + "'");
}

ItemSet Catalog::all_ids() const {
    ItemSet ids(items_.size());
    for (ItemId i = 0; i < ids.size(); ++i)
        ids[i] = i;
    return ids;
}

void Catalog::check_item(ItemId id) const {
    if (id >= items_.size())
        throw DomainError("item id " + std::to_string(id) + " out of range (catalog has " +
                          std::to_string(items_.size()) + " items)");
}

// ---------------------------------------------------------------------------
// Terms, queries, constraints

VarId Term::variable_id() const {
    if (!variable_)
        throw SchemaError("term holds a value, not a variable");
    return id_;
}

ValueId Term::value_id() const {
    if (variable_)
        throw SchemaError("term holds a variable, not a value");
    return id_;
}

Query Query::all_variables(std::size_t feature_count) {
    Query q;
    q.terms.reserve(feature_count);
    for (std::size_t i = 0; i < feature_count; ++i)
        q.terms.push_back(Term::variable(static_cast<VarId>(i)));
    q.next_variable = static_cast<VarId>(feature_count);
    return q;
}

std::size_t Query::filled_count() const {
    return static_cast<std::size_t>(std::count_if(terms.begin(), terms.end(), [](const Term& t) { return t.is_value(); }));
}

bool equivalent(const Query& a, const Query& b) {
    if (a.size() != b.size())
        return false;
    for (Slot i = 0; i < a.size(); ++i) {
        if (a[i].is_variable() != b[i].is_variable())
            return false;
        if (a[i].is_value() && a[i].value_id() != b[i].value_id())
            return false;
    }
    return true;
}

Constraints Constraints::none(std::size_t feature_count) { return Constraints{std::vector<std::set<ValueId>>(feature_count)}; }

bool Constraints::empty() const {
    return std::all_of(disliked.begin(), disliked.end(), [](const auto& c) { return c.empty(); });
}

// ---------------------------------------------------------------------------
// Matching

ItemSet identity_recommender(const ItemSet& matches, const UserModel&) { return matches; }

bool is_coherent(const Substitution& sub, const Constraints& k, const CatalogSchema& schema) {
    for (const Binding& b : sub.bindings) {
        schema.check_value(b.slot, b.value);
        if (b.slot >= k.disliked.size())
            throw SchemaError("constraints vector shorter than the schema");
    }
    return std::none_of(sub.bindings.begin(), sub.bindings.end(),
                        [&](const Binding& b) { return k.forbids(b.slot, b.value); });
}

Query apply_substitution(const Substitution& sub, const Query& q) {
    Query out = q;
    std::set<VarId> bound;
    for (const Binding& b : sub.bindings) {
        if (!bound.insert(b.variable).second)
            throw SchemaError("variable x" + std::to_string(b.variable) + " bound twice");
        if (b.slot >= out.size())
            throw SchemaError("binding slot " + std::to_string(b.slot) + " out of range");
        const Term& t = out.terms[b.slot];
        if (t.is_variable() && t.variable_id() == b.variable)
            out.terms[b.slot] = Term::value(b.value);
    }
    return out;
}

bool matches(const Item& item, const Query& q, const Constraints& k) {
    if (item.values.size() != q.size() || k.disliked.size() != q.size())
        throw SchemaError("item '" + item.name + "' and query disagree on the number of features");
    for (Slot i = 0; i < q.size(); ++i) {
        const Term& t = q.terms[i];
        const ValueId v = item.values[i];
        if (t.is_value() ? t.value_id() != v : k.forbids(i, v))
            return false;
    }
    return true;
}

ItemSet select(const Query& q, const Catalog& catalog, const Constraints& k, const std::set<ItemId>& excluded) {
    ItemSet out;
    for (ItemId id = 0; id < catalog.size(); ++id) {
        if (excluded.contains(id))
            continue;
        if (matches(catalog.item(id), q, k))
            out.push_back(id);
    }
    return out;
}

std::vector<ValueId> active_values(const ItemSet& s, Slot slot, const Catalog& catalog) {
    catalog.schema().check_slot(slot);
    std::vector<char> seen(catalog.schema().domain_size(slot), 0);
    for (ItemId id : s)
        seen[catalog.value(id, slot)] = 1;
    std::vector<ValueId> out;
    for (ValueId v = 0; v < seen.size(); ++v)
        if (seen[v])
            out.push_back(v);
    return out;
}

// ---------------------------------------------------------------------------
// States and transformations

ConversationState make_state(UserModel user, const Catalog& catalog, const Recommender& rec) {
    ConversationState st;
    st.user = std::move(user);
    st.recommended = rec(select(st.user.query, catalog, st.user.constraints, st.user.disliked_items), st.user);
    return st;
}

ConversationState cold_start(const Catalog& catalog) {
    if (catalog.empty())
        throw DomainError("cold start on an empty catalog");
    const std::size_t p = catalog.feature_count();
    return make_state(UserModel{Query::all_variables(p), Constraints::none(p), {}, {}}, catalog);
}

std::string describe(const Transformation& t, const Catalog& catalog) {
    const CatalogSchema& sc = catalog.schema();
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const SlotFill& f) { os << "fill " << sc.feature_name(f.slot) << "=" << sc.value_name(f.slot, f.value); },
                   [&](const SlotUnfill& u) { os << "unfill " << sc.feature_name(u.slot); },
                   [&](const SlotChange& c) { os << "change " << sc.feature_name(c.slot) << "->" << sc.value_name(c.slot, c.value); },
                   [&](const DislikeValue& d) { os << "dislike " << sc.feature_name(d.slot) << "=" << sc.value_name(d.slot, d.value); },
                   [&](const RejectItems& r) {
                       os << "reject {";
                       for (std::size_t i = 0; i < r.items.size(); ++i)
                           os << (i ? ", " : "") << catalog.item(r.items[i]).name;
                       os << "}";
                   },
                   [&](const AcceptItem& a) { os << "accept " << catalog.item(a.item).name; },
               },
               t);
    return os.str();
}

bool is_slot_fill(const Transformation& t) { return std::holds_alternative<SlotFill>(t); }

ConversationState apply(const ConversationState& state, const Transformation& t, const Catalog& catalog,
                        const Recommender& rec) {
    const CatalogSchema& sc = catalog.schema();
    if (state.accepted)
        throw TransformationError("conversation already ended with an accepted item");

    UserModel u = state.user;
    auto slot_name = [&](Slot s) { return "slot " + std::to_string(s) + " (" + sc.feature_name(s) + ")"; };

    bool accepted = false;
    ItemId accepted_item = 0;

    std::visit(overloaded{
                   [&](const SlotFill& f) {
                       sc.check_value(f.slot, f.value);
                       if (!u.query[f.slot].is_variable())
                           throw TransformationError("slot fill on " + slot_name(f.slot) + ": slot already holds a value");
                       if (u.constraints.forbids(f.slot, f.value))
                           throw TransformationError("slot fill on " + slot_name(f.slot) + ": value '" +
                                                     sc.value_name(f.slot, f.value) + "' is disliked");
                       u.query.terms[f.slot] = Term::value(f.value);
                   },
                   [&](const SlotUnfill& un) {
                       sc.check_slot(un.slot);
                       if (!u.query[un.slot].is_value())
                           throw TransformationError("slot unfill on " + slot_name(un.slot) + ": slot holds a variable");
                       u.query.terms[un.slot] = Term::variable(u.query.fresh_variable());
                   },
                   [&](const SlotChange& c) {
                       sc.check_value(c.slot, c.value);
                       if (!u.query[c.slot].is_value())
                           throw TransformationError("slot change on " + slot_name(c.slot) + ": slot holds a variable");
                       if (u.query[c.slot].value_id() == c.value)
                           throw TransformationError("slot change on " + slot_name(c.slot) + ": value unchanged");
                       if (u.constraints.forbids(c.slot, c.value))
                           throw TransformationError("slot change on " + slot_name(c.slot) + ": value '" +
                                                     sc.value_name(c.slot, c.value) + "' is disliked");
                       u.query.terms[c.slot] = Term::value(c.value);
                   },
                   [&](const DislikeValue& d) {
                       sc.check_value(d.slot, d.value);
                       if (u.query[d.slot].is_value() && u.query[d.slot].value_id() == d.value)
                           throw TransformationError("dislike on " + slot_name(d.slot) +
                                                     ": the query currently holds that value");
                       if (u.constraints.disliked[d.slot].size() + 1 >= sc.domain_size(d.slot) &&
                           !u.constraints.forbids(d.slot, d.value))
                           throw TransformationError("dislike on " + slot_name(d.slot) +
                                                     ": at least one value must stay permitted");
                       u.constraints.disliked[d.slot].insert(d.value);
                       for (ItemId id = 0; id < catalog.size(); ++id)
                           if (catalog.value(id, d.slot) == d.value && !u.liked.contains(id))
                               u.disliked_items.insert(id);
                   },
                   [&](const RejectItems& r) {
                       if (r.items.empty())
                           throw TransformationError("reject with no items");
                       for (ItemId id : r.items) {
                           catalog.check_item(id);
                           if (!contains_sorted(state.recommended, id))
                               throw TransformationError("reject of item '" + catalog.item(id).name +
                                                         "' which is not currently recommended");
                           u.disliked_items.insert(id);
                       }
                   },
                   [&](const AcceptItem& a) {
                       catalog.check_item(a.item);
                       if (!contains_sorted(state.recommended, a.item))
                           throw TransformationError("accept of item '" + catalog.item(a.item).name +
                                                     "' which is not currently recommended");
                       accepted = true;
                       accepted_item = a.item;
                       u.liked.insert(a.item);
                   },
               },
               t);

    if (accepted) {
        ConversationState out;
        out.user = std::move(u);
        out.recommended = {accepted_item};
        out.accepted = true;
        return out;
    }
    return make_state(std::move(u), catalog, rec);
}

} // namespace crs

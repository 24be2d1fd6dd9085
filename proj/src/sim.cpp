#include "crs/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "crs/rng.hpp"

namespace crs {

ProfileSet build_profiles(const std::vector<RatingRecord>& ratings, const Catalog& catalog) {
    struct Acc {
        std::string user;
        std::vector<std::pair<ItemId, double>> rated;
        double sum = 0.0;
    };
    std::vector<Acc> users;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const auto& r = ratings[i];
        auto id = catalog.find_item(r.item);
        if (!id)
            throw IngestionError("rating " + std::to_string(i + 1) + " of user '" + r.user + "' names unknown item '" +
                                 r.item + "'");
        auto [it, fresh] = index.try_emplace(r.user, users.size());
        if (fresh)
            users.push_back(Acc{r.user, {}, 0.0});
        Acc& a = users[it->second];
        a.rated.emplace_back(*id, r.rating);
        a.sum += r.rating;
    }

    ProfileSet out;
    const std::size_t p = catalog.feature_count();
    for (const auto& a : users) {
        const double n = static_cast<double>(a.rated.size());
        UserProfile prof{a.user, {}, std::vector<std::set<ValueId>>(p)};
        for (const auto& [id, rating] : a.rated)
            if (rating * n >= a.sum)
                prof.pri.push_back(id);
        std::sort(prof.pri.begin(), prof.pri.end());
        prof.pri.erase(std::unique(prof.pri.begin(), prof.pri.end()), prof.pri.end());
        if (prof.pri.empty()) {
            ++out.dropped_users;
            continue;
        }
        for (ItemId id : prof.pri)
            for (Slot s = 0; s < p; ++s)
                prof.up[s].insert(catalog.value(id, s));
        out.profiles.push_back(std::move(prof));
    }
    return out;
}

std::string to_string(EventKind k) {
    switch (k) {
    case EventKind::Question: return "question";
    case EventKind::Answer: return "answer";
    case EventKind::NoAnswer: return "no_answer";
    case EventKind::Recommend: return "recommend";
    case EventKind::Reject: return "reject";
    case EventKind::Dislike: return "dislike";
    case EventKind::Accept: return "accept";
    }
    return "?";
}

std::uint64_t dialog_seed(std::uint64_t master, const std::string& user, const std::string& ideal) {
    return mix_seed(mix_seed(master, fnv1a(user)), fnv1a(ideal));
}

namespace {

class Dialog {
public:
    Dialog(const Catalog& catalog, const UserProfile& profile, ItemId ideal, Protocol protocol, std::uint64_t seed,
           const DialogOptions& options)
        : c_(catalog), prof_(profile), ideal_(ideal), rng_(seed), opts_(options), p_(catalog.feature_count()) {
        catalog.check_item(ideal);
        if (!std::binary_search(profile.pri.begin(), profile.pri.end(), ideal))
            throw DomainError("ideal item '" + catalog.item(ideal).name + "' is not in the profile of user '" +
                              profile.user + "'");
        if (profile.up.size() != p_)
            throw SchemaError("profile of user '" + profile.user + "' does not match the catalog's features");
        alive_.assign(catalog.size(), 1);
        std::size_t size = 0;
        for (ItemId id = 0; id < catalog.size(); ++id) {
            if (id != ideal && std::binary_search(profile.pri.begin(), profile.pri.end(), id))
                alive_[id] = 0;
            size += alive_[id];
        }
        cap_ = options.max_questions ? *options.max_questions
                                     : static_cast<int>(std::ceil(options.cap_factor * static_cast<double>(size)));
        blacklist_.resize(p_);
        t_.user = profile.user;
        t_.ideal = ideal;
        t_.protocol = protocol;
    }

    DialogTranscript run() {
        for (;;) {
            std::vector<Slot> order(p_);
            for (Slot s = 0; s < p_; ++s)
                order[s] = s;
            shuffle_portable(order, rng_);
            std::vector<std::optional<ValueId>> answers(p_);
            std::vector<std::set<ValueId>> chosen(p_);
            std::size_t pos = 0;

            for (;;) {
                ItemSet s = selection(answers);
                while (s.size() > 1 && pos < p_) {
                    const Slot f = order[pos++];
                    ask(f);
                    auto v = answer(s, f);
                    if (!v) {
                        t_.events.push_back(Event{EventKind::NoAnswer, f, 0, {}, {}});
                        continue;
                    }
                    t_.events.push_back(Event{EventKind::Answer, f, *v, {}, {}});
                    answers[f] = v;
                    chosen[f].insert(*v);
                    std::erase_if(s, [&](ItemId id) { return c_.value(id, f) != *v; });
                }

                t_.events.push_back(Event{EventKind::Recommend, 0, 0, s, {}});
                if (std::binary_search(s.begin(), s.end(), ideal_)) {
                    t_.events.push_back(Event{EventKind::Accept, 0, 0, {ideal_}, {}});
                    return t_;
                }
                t_.events.push_back(Event{EventKind::Reject, 0, 0, s, {}});
                ++t_.rejections;
                for (ItemId id : s)
                    alive_[id] = 0;

                if (t_.protocol == Protocol::P1) {
                    for (Slot f = 0; f < p_; ++f) {
                        if (opts_.blacklist == BlacklistScope::PreviousRound)
                            blacklist_[f].clear();
                        blacklist_[f].insert(chosen[f].begin(), chosen[f].end());
                    }
                    break; // restart with a new order
                }
                pos = dislike_and_resume(s, order, answers);
            }
        }
    }

private:
    void ask(Slot f) {
        if (t_.nq >= cap_)
            throw DeadlockError("dialog for user '" + prof_.user + "' and item '" + c_.item(ideal_).name +
                                    "' exceeded " + std::to_string(cap_) + " questions",
                                t_);
        ++t_.nq;
        t_.events.push_back(Event{EventKind::Question, f, 0, {}, {}});
    }

    ItemSet selection(const std::vector<std::optional<ValueId>>& answers) const {
        ItemSet s;
        for (ItemId id = 0; id < c_.size(); ++id) {
            if (!alive_[id])
                continue;
            bool ok = true;
            for (Slot f = 0; f < p_ && ok; ++f)
                ok = !answers[f] || c_.value(id, f) == *answers[f];
            if (ok)
                s.push_back(id);
        }
        return s;
    }

    // Uniform over UP_f ∩ AV(S, f), skipping blacklisted values while others remain.
    std::optional<ValueId> answer(const ItemSet& s, Slot f) {
        std::set<ValueId> active;
        for (ItemId id : s)
            active.insert(c_.value(id, f));
        std::vector<ValueId> pool, fresh;
        for (ValueId v : active) {
            if (!prof_.up[f].contains(v))
                continue;
            pool.push_back(v);
            if (!blacklist_[f].contains(v))
                fresh.push_back(v);
        }
        const auto& use = fresh.empty() ? pool : fresh;
        if (use.empty())
            return std::nullopt;
        return use[pick_index(rng_, use.size())];
    }

    std::size_t dislike_and_resume(const ItemSet& rejected, const std::vector<Slot>& order,
                                   std::vector<std::optional<ValueId>>& answers) {
        std::set<std::pair<Slot, ValueId>> candidates;
        for (ItemId id : rejected)
            for (Slot f = 0; f < p_; ++f)
                if (c_.value(id, f) != c_.value(ideal_, f))
                    candidates.emplace(f, c_.value(id, f));
        // Rejected items differ from the ideal one somewhere, so this is non-empty.
        auto it = candidates.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(pick_index(rng_, candidates.size())));
        const auto [slot, value] = *it;
        for (ItemId id = 0; id < c_.size(); ++id)
            if (alive_[id] && c_.value(id, slot) == value)
                alive_[id] = 0;

        std::size_t pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), slot) - order.begin());
        for (std::size_t i = pos; i < p_; ++i)
            answers[order[i]].reset();
        // Drop kept answers from the back while they select nothing.
        while (selection(answers).empty()) {
            std::size_t last = pos;
            while (last > 0 && !answers[order[last - 1]])
                --last;
            // The ideal item is alive, so the empty query always selects it.
            answers[order[last - 1]].reset();
            pos = last - 1;
        }
        std::vector<Slot> kept;
        for (std::size_t i = 0; i < pos; ++i)
            if (answers[order[i]])
                kept.push_back(order[i]);
        t_.events.push_back(Event{EventKind::Dislike, slot, value, {}, std::move(kept)});
        return pos;
    }

    const Catalog& c_;
    const UserProfile& prof_;
    ItemId ideal_;
    Rng rng_;
    DialogOptions opts_;
    std::size_t p_;
    int cap_ = 0;
    std::vector<char> alive_;
    std::vector<std::set<ValueId>> blacklist_;
    DialogTranscript t_;
};

} // namespace

DialogTranscript run_dialog(const Catalog& catalog, const UserProfile& profile, ItemId ideal, Protocol protocol,
                            std::uint64_t seed, const DialogOptions& options) {
    return Dialog(catalog, profile, ideal, protocol, seed, options).run();
}

SimMetrics summarize_nq(const std::vector<int>& nqs, std::size_t failures) {
    SimMetrics m;
    m.dialogs = nqs.size();
    m.failures = failures;
    if (nqs.empty())
        return m;
    std::vector<int> v = nqs;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (int x : v)
        sum += x;
    m.mean_nq = sum / static_cast<double>(v.size());
    m.min_nq = v.front();
    m.max_nq = v.back();
    const std::size_t n = v.size();
    m.median_nq = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    m.p95_nq = v[std::max<std::size_t>(rank, 1) - 1];
    return m;
}

std::vector<DialogTask> experiment_tasks(const std::vector<UserProfile>& profiles, const ExperimentConfig& config) {
    std::vector<DialogTask> all;
    for (std::size_t u = 0; u < profiles.size(); ++u)
        for (ItemId id : profiles[u].pri)
            all.push_back(DialogTask{u, id});
    if (config.max_dialogs == 0 || config.max_dialogs >= all.size())
        return all;
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    Rng rng(mix_seed(config.seed, 0x73756273616d70ULL));
    shuffle_portable(idx, rng);
    idx.resize(config.max_dialogs);
    std::sort(idx.begin(), idx.end());
    std::vector<DialogTask> out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(all[i]);
    return out;
}

ExperimentResult run_experiment(const Catalog& catalog, const std::vector<UserProfile>& profiles, Protocol protocol,
                                const ExperimentConfig& config) {
    const auto tasks = experiment_tasks(profiles, config);
    std::vector<std::optional<DialogTranscript>> done(tasks.size());
    std::vector<std::string> errors(tasks.size());

    auto work = [&](std::size_t i) {
        const auto& prof = profiles[tasks[i].profile];
        const auto seed = dialog_seed(config.seed, prof.user, catalog.item(tasks[i].ideal).name);
        try {
            done[i] = run_dialog(catalog, prof, tasks[i].ideal, protocol, seed, config.dialog);
        } catch (const DeadlockError& e) {
            errors[i] = e.what();
        }
    };

    const unsigned threads = std::max(1u, config.threads);
    if (threads == 1 || tasks.size() < 2) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();)
                    work(i);
            });
        for (auto& th : pool)
            th.join();
    }

    ExperimentResult res;
    std::vector<int> nqs;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (done[i]) {
            nqs.push_back(done[i]->nq);
            if (config.keep_transcripts)
                res.transcripts.push_back(std::move(*done[i]));
        } else {
            res.failures.push_back(errors[i]);
        }
    }
    res.metrics = summarize_nq(nqs, res.failures.size());
    res.metrics.itemset = config.itemset;
    res.metrics.protocol = protocol;
    return res;
}

void write_metrics_tsv(std::ostream& out, const std::vector<SimMetrics>& rows) {
    out << "itemset\tprotocol\tdialogs\tmean_nq\tmax_nq\tp95_nq\tfailures\n";
    for (const auto& m : rows) {
        std::ostringstream mean;
        mean << std::fixed << std::setprecision(2) << m.mean_nq;
        out << m.itemset << '\t' << to_string(m.protocol) << '\t' << m.dialogs << '\t' << mean.str() << '\t'
            << m.max_nq << '\t' << m.p95_nq << '\t' << m.failures << '\n';
    }
}

nlohmann::ordered_json transcript_to_json(const DialogTranscript& t, const Catalog& catalog) {
    nlohmann::ordered_json j;
    j["user"] = t.user;
    j["ideal"] = catalog.item(t.ideal).name;
    j["protocol"] = to_string(t.protocol);
    j["nq"] = t.nq;
    j["rejections"] = t.rejections;
    auto& events = j["events"] = nlohmann::ordered_json::array();
    const auto& schema = catalog.schema();
    for (const auto& e : t.events) {
        nlohmann::ordered_json ev;
        ev["type"] = to_string(e.kind);
        switch (e.kind) {
        case EventKind::Question:
        case EventKind::NoAnswer: ev["feature"] = schema.feature_name(e.slot); break;
        case EventKind::Answer:
            ev["feature"] = schema.feature_name(e.slot);
            ev["value"] = schema.value_name(e.slot, e.value);
            break;
        case EventKind::Dislike: {
            ev["feature"] = schema.feature_name(e.slot);
            ev["value"] = schema.value_name(e.slot, e.value);
            auto& kept = ev["kept"] = nlohmann::ordered_json::array();
            for (Slot s : e.kept)
                kept.push_back(schema.feature_name(s));
            break;
        }
        case EventKind::Recommend:
        case EventKind::Reject:
        case EventKind::Accept: {
            auto& items = ev["items"] = nlohmann::ordered_json::array();
            for (ItemId id : e.items)
                items.push_back(catalog.item(id).name);
            break;
        }
        }
        events.push_back(std::move(ev));
    }
    return j;
}

std::string check_transcript(const DialogTranscript& t, const Catalog& catalog, const UserProfile& profile) {
    const std::size_t p = catalog.feature_count();
    std::vector<char> alive(catalog.size(), 1);
    for (ItemId id : profile.pri)
        if (id != t.ideal)
            alive[id] = 0;
    std::vector<std::optional<ValueId>> answers(p);
    auto selection = [&] {
        ItemSet s;
        for (ItemId id = 0; id < catalog.size(); ++id) {
            bool ok = alive[id] != 0;
            for (Slot f = 0; f < p && ok; ++f)
                ok = !answers[f] || catalog.value(id, f) == *answers[f];
            if (ok)
                s.push_back(id);
        }
        return s;
    };

    int questions = 0;
    constexpr Slot kNotAsked = static_cast<Slot>(-1);
    Slot asked = kNotAsked;
    ItemSet recommended;
    const auto at = [](std::size_t i) { return "event " + std::to_string(i) + ": "; };
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const Event& e = t.events[i];
        if (e.kind != EventKind::Answer && e.kind != EventKind::NoAnswer && asked != kNotAsked)
            return at(i) + "question left unanswered";
        switch (e.kind) {
        case EventKind::Question:
            ++questions;
            asked = e.slot;
            break;
        case EventKind::Answer:
        case EventKind::NoAnswer: {
            if (asked != e.slot)
                return at(i) + "answer without a matching question";
            asked = kNotAsked;
            const ItemSet s = selection();
            bool pool_empty = true;
            bool active = false;
            for (ItemId id : s) {
                const ValueId v = catalog.value(id, e.slot);
                if (profile.up[e.slot].contains(v))
                    pool_empty = false;
                if (v == e.value)
                    active = true;
            }
            if (e.kind == EventKind::NoAnswer) {
                if (!pool_empty)
                    return at(i) + "no answer although the answer pool is not empty";
                break;
            }
            if (!profile.up[e.slot].contains(e.value))
                return at(i) + "answer outside the user's preferred values";
            if (!active)
                return at(i) + "answer selects no item";
            answers[e.slot] = e.value;
            break;
        }
        case EventKind::Recommend:
            if (e.items != selection())
                return at(i) + "recommendation differs from the current selection";
            recommended = e.items;
            break;
        case EventKind::Accept:
            if (i + 1 != t.events.size())
                return at(i) + "accept is not the last event";
            if (e.items != ItemSet{t.ideal} || !std::binary_search(recommended.begin(), recommended.end(), t.ideal))
                return at(i) + "accepted item is not the recommended ideal item";
            break;
        case EventKind::Reject:
            if (e.items != recommended || std::binary_search(recommended.begin(), recommended.end(), t.ideal))
                return at(i) + "rejection of a recommendation holding the ideal item";
            for (ItemId id : recommended)
                alive[id] = 0;
            if (t.protocol == Protocol::P1)
                std::fill(answers.begin(), answers.end(), std::nullopt);
            break;
        case EventKind::Dislike: {
            if (t.protocol != Protocol::P2)
                return at(i) + "dislike under P1";
            if (catalog.value(t.ideal, e.slot) == e.value)
                return at(i) + "dislike of a value of the ideal item";
            bool from_rejected = false;
            for (ItemId id : recommended)
                from_rejected = from_rejected || catalog.value(id, e.slot) == e.value;
            if (!from_rejected)
                return at(i) + "disliked value does not occur in the rejected items";
            for (ItemId id = 0; id < catalog.size(); ++id)
                if (catalog.value(id, e.slot) == e.value)
                    alive[id] = 0;
            for (Slot f = 0; f < p; ++f)
                if (std::find(e.kept.begin(), e.kept.end(), f) == e.kept.end())
                    answers[f].reset();
            break;
        }
        }
        if (!alive[t.ideal])
            return at(i) + "ideal item removed";
    }
    if (t.events.empty() || t.events.back().kind != EventKind::Accept)
        return "transcript does not end with acceptance";
    if (questions != t.nq)
        return "nq " + std::to_string(t.nq) + " differs from " + std::to_string(questions) + " question events";
    return {};
}

} // namespace crs

#pragma once

// Simulated truthful users talking to a random-order questioning system,
// under the restart (P1) and dislike-and-resume (P2) rejection protocols.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "crs/data.hpp"
#include "crs/model.hpp"
#include "crs/strategy.hpp"

namespace crs {

struct UserProfile {
    std::string user;
    // Positively rated items, sorted.
    ItemSet pri;
    // Per feature, the values of the positively rated items.
    std::vector<std::set<ValueId>> up;
};

struct ProfileSet {
    std::vector<UserProfile> profiles;
    std::size_t dropped_users = 0;
};

// PRI = items rated at or above the user's own mean rating. Ratings must
// name catalog items (IngestionError otherwise).
ProfileSet build_profiles(const std::vector<RatingRecord>& ratings, const Catalog& catalog);

enum class EventKind { Question, Answer, NoAnswer, Recommend, Reject, Dislike, Accept };

std::string to_string(EventKind k);

struct Event {
    EventKind kind;
    Slot slot = 0;
    ValueId value = 0;
    ItemSet items;
    // Dislike only: slots whose answers are kept for the resumed round.
    std::vector<Slot> kept;

    bool operator==(const Event&) const = default;
};

struct DialogTranscript {
    std::string user;
    ItemId ideal = 0;
    Protocol protocol = Protocol::P1;
    std::vector<Event> events;
    int nq = 0;
    int rejections = 0;

    bool operator==(const DialogTranscript&) const = default;
};

class DeadlockError : public Error {
public:
    DeadlockError(const std::string& what, DialogTranscript prefix) : Error(what), prefix_(std::move(prefix)) {}
    const DialogTranscript& prefix() const noexcept { return prefix_; }

private:
    DialogTranscript prefix_;
};

// Which earlier answers P1 refuses to repeat after a restart.
enum class BlacklistScope { Dialog, PreviousRound };

struct DialogOptions {
    BlacklistScope blacklist = BlacklistScope::Dialog;
    // Question cap as a multiple of |C'|; `max_questions` overrides it.
    double cap_factor = 10.0;
    std::optional<int> max_questions;
};

DialogTranscript run_dialog(const Catalog& catalog, const UserProfile& profile, ItemId ideal, Protocol protocol,
                            std::uint64_t seed, const DialogOptions& options = {});

// Per-dialog seed from the master seed, the user and the ideal item.
std::uint64_t dialog_seed(std::uint64_t master, const std::string& user, const std::string& ideal);

struct SimMetrics {
    std::string itemset;
    Protocol protocol = Protocol::P1;
    std::size_t dialogs = 0;
    double mean_nq = 0.0;
    int max_nq = 0;
    int min_nq = 0;
    double median_nq = 0.0;
    int p95_nq = 0;
    std::size_t failures = 0;
};

SimMetrics summarize_nq(const std::vector<int>& nqs, std::size_t failures);

struct ExperimentConfig {
    std::string itemset = "catalog";
    std::uint64_t seed = 1;
    // 0 runs every (user, ideal) pair.
    std::size_t max_dialogs = 0;
    unsigned threads = 1;
    bool keep_transcripts = false;
    DialogOptions dialog;
};

struct ExperimentResult {
    SimMetrics metrics;
    std::vector<DialogTranscript> transcripts;
    std::vector<std::string> failures;
};

struct DialogTask {
    std::size_t profile;
    ItemId ideal;
};

// The (user, ideal) pairs an experiment runs, in canonical order.
std::vector<DialogTask> experiment_tasks(const std::vector<UserProfile>& profiles, const ExperimentConfig& config);

ExperimentResult run_experiment(const Catalog& catalog, const std::vector<UserProfile>& profiles, Protocol protocol,
                                const ExperimentConfig& config);

void write_metrics_tsv(std::ostream& out, const std::vector<SimMetrics>& rows);
nlohmann::ordered_json transcript_to_json(const DialogTranscript& t, const Catalog& catalog);

// Re-checks a transcript against the dialog rules; returns an empty string
// when it conforms.
std::string check_transcript(const DialogTranscript& t, const Catalog& catalog, const UserProfile& profile);

} // namespace crs

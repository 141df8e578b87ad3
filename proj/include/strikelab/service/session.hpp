#pragma once

// Feedback session: one refinement round at a time. Each round's batch of
// episodes is regenerated deterministically from (seed, round, params), so a
// restarted service resumes with the identical queue. Every mutation is
// written to <out_dir>/session.json before it is acknowledged.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strikelab/promp.hpp"
#include "strikelab/sim/experiment.hpp"
#include "strikelab/sim/scenario.hpp"

namespace strikelab::service {

using nlohmann::json;

enum class SessionState { collecting, refining, done };

std::string_view to_string(SessionState s);

struct SessionConfig {
    int batch = 20;
    int rounds = 3;
    double temperature = 1.0;
    std::uint64_t seed = 42;
    int eval_balls = 10;
    refine::EmOptions em;
    int threads = 0;

    void validate() const;
};

/// Persisted session state.
struct Session {
    std::string id;
    SessionConfig config;
    /// Completed refinement rounds; the open batch belongs to round + 1.
    int round = 0;
    SessionState state = SessionState::collecting;
    /// Episode ids of the open batch, in generation order.
    std::vector<std::string> episodes;
    /// Ids still awaiting a rating, in queue order.
    std::vector<std::string> pending;
    std::map<std::string, double> ratings;
    std::vector<sim::RoundReport> metrics;
    promp::PrimitiveParams params;
};

json session_to_json(const Session& s, const sim::Scenario& scenario);
Session session_from_json(const json& j);

/// 50 Hz replay of one episode: 3-D paths, top (x, y) and side (x, z)
/// projections, and the outcome geometry.
json replay_payload(const std::string& episode_id, const sim::EpisodeOutcome& outcome, double rate = 50.0);

enum class RateStatus { ok, conflict, invalid, not_found };

struct RateResult {
    RateStatus status = RateStatus::ok;
    std::string message;
};

class FeedbackService {
public:
    /// Resumes <out_dir>/session.json when present (its scenario and
    /// parameters win); otherwise starts a new session from `base`.
    FeedbackService(std::filesystem::path out_dir, const sim::Scenario& scenario, const promp::PrimitiveParams& base,
                    const SessionConfig& config);

    json summary() const;
    /// Oldest pending episode, or nullopt when nothing awaits a rating.
    std::optional<json> next_episode() const;
    RateResult rate(const std::string& episode_id, const json& reward);
    /// Closes the open round with whatever ratings have arrived.
    json advance();
    json metrics() const;

    Session snapshot() const;
    const sim::Scenario& scenario() const { return scenario_; }
    std::filesystem::path session_path() const { return out_dir_ / "session.json"; }
    std::filesystem::path primitive_path() const { return out_dir_ / "primitive.json"; }

private:
    void persist(const Session& s) const;
    void generate_batch();
    void close_round();
    json summary_locked() const;

    std::filesystem::path out_dir_;
    sim::Scenario scenario_;
    mutable std::mutex mutex_;
    Session session_;
    std::vector<sim::EpisodeOutcome> outcomes_;
    std::map<std::string, json> payloads_;
};

}  // namespace strikelab::service

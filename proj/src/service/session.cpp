#include "strikelab/service/session.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "strikelab/io.hpp"

namespace strikelab::service {

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::collecting: return "collecting";
        case SessionState::refining: return "refining";
        case SessionState::done: return "done";
    }
    return "unknown";
}

namespace {

SessionState state_from(const std::string& s) {
    if (s == "collecting") return SessionState::collecting;
    if (s == "refining") return SessionState::refining;
    if (s == "done") return SessionState::done;
    throw io::FormatError("session: unknown state '" + s + "'");
}

json config_json(const SessionConfig& c) {
    return {{"batch", c.batch},
            {"rounds", c.rounds},
            {"temperature", c.temperature},
            {"seed", c.seed},
            {"eval_balls", c.eval_balls},
            {"threads", c.threads},
            {"em",
             {{"max_iters", c.em.max_iters},
              {"rel_tol", c.em.rel_tol},
              {"cov_floor", c.em.m_step.cov_floor},
              {"sigma_y_floor", c.em.m_step.sigma_y_floor},
              {"freeze_noise", c.em.m_step.freeze_noise}}}};
}

SessionConfig config_from(const json& j) {
    SessionConfig c;
    c.batch = j.at("batch").get<int>();
    c.rounds = j.at("rounds").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.eval_balls = j.at("eval_balls").get<int>();
    c.threads = j.at("threads").get<int>();
    const json& em = j.at("em");
    c.em.max_iters = em.at("max_iters").get<int>();
    c.em.rel_tol = em.at("rel_tol").get<double>();
    c.em.m_step.cov_floor = em.at("cov_floor").get<double>();
    c.em.m_step.sigma_y_floor = em.at("sigma_y_floor").get<double>();
    c.em.m_step.freeze_noise = em.at("freeze_noise").get<bool>();
    return c;
}

json round_json(const sim::RoundReport& r) {
    return {{"round", r.round},
            {"trajectories", r.trajectories},
            {"evaluation", io::metrics_to_json(r.evaluation)},
            {"batch", r.batch ? io::metrics_to_json(*r.batch) : json(nullptr)},
            {"used", r.used},
            {"em_iterations", r.em_iterations}};
}

sim::ExperimentMetrics metrics_from(const json& j) {
    sim::ExperimentMetrics m;
    m.balls = j.at("balls").get<int>();
    m.hit_rate = j.at("hit_rate").get<double>();
    m.success_rate = j.at("success_rate").get<double>();
    m.avg_reward = j.at("avg_reward").get<double>();
    return m;
}

sim::RoundReport round_from(const json& j) {
    sim::RoundReport r;
    r.round = j.at("round").get<int>();
    r.trajectories = j.at("trajectories").get<int>();
    r.evaluation = metrics_from(j.at("evaluation"));
    if (!j.at("batch").is_null()) r.batch = metrics_from(j.at("batch"));
    r.used = j.at("used").get<int>();
    r.em_iterations = j.at("em_iterations").get<int>();
    return r;
}

json path_json(const std::vector<sim::PathSample>& path, std::size_t stride, int a, int b) {
    json points = json::array(), plane = json::array();
    for (std::size_t i = 0; i < path.size(); i += stride) {
        const auto& p = path[i].position;
        points.push_back({{"t", path[i].t}, {"p", {p.x(), p.y(), p.z()}}});
        plane.push_back({p[a], p[b]});
    }
    return {points, plane};
}

}  // namespace

void SessionConfig::validate() const {
    if (batch < 1) throw std::invalid_argument("session: batch must be >= 1");
    if (rounds < 1) throw std::invalid_argument("session: rounds must be >= 1");
    if (!(temperature > 0.0)) throw std::invalid_argument("session: temperature must be > 0");
    if (eval_balls < 1) throw std::invalid_argument("session: eval_balls must be >= 1");
}

json session_to_json(const Session& s, const sim::Scenario& scenario) {
    json ratings = json::object();
    for (const auto& [id, r] : s.ratings) ratings[id] = io::reward_json(r);
    json metrics = json::array();
    for (const auto& m : s.metrics) metrics.push_back(round_json(m));
    return {{"id", s.id},
            {"config", config_json(s.config)},
            {"round", s.round},
            {"state", std::string(to_string(s.state))},
            {"episodes", s.episodes},
            {"pending", s.pending},
            {"ratings", ratings},
            {"metrics", metrics},
            {"params", io::primitive_to_json(s.params)},
            {"scenario", io::scenario_to_json(scenario)}};
}

Session session_from_json(const json& j) {
    Session s;
    try {
        s.id = j.at("id").get<std::string>();
        s.config = config_from(j.at("config"));
        s.round = j.at("round").get<int>();
        s.state = state_from(j.at("state").get<std::string>());
        s.episodes = j.at("episodes").get<std::vector<std::string>>();
        s.pending = j.at("pending").get<std::vector<std::string>>();
        for (const auto& [id, r] : j.at("ratings").items()) s.ratings[id] = r.get<double>();
        for (const auto& m : j.at("metrics")) s.metrics.push_back(round_from(m));
    } catch (const json::exception& e) {
        throw io::FormatError(std::string("session: ") + e.what());
    }
    s.params = io::primitive_from_json(j.at("params"));
    return s;
}

json replay_payload(const std::string& episode_id, const sim::EpisodeOutcome& o, double rate) {
    const double tick = o.ball_path.size() > 1 ? o.ball_path[1].t - o.ball_path[0].t : 1.0 / rate;
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / (rate * tick))));
    const json ball_top = path_json(o.ball_path, stride, 0, 1), ball_side = path_json(o.ball_path, stride, 0, 2);
    const json ee_top = path_json(o.ee_path, stride, 0, 1), ee_side = path_json(o.ee_path, stride, 0, 2);
    return {{"episode_id", episode_id},
            {"rate", rate},
            {"ball_path", ball_top[0]},
            {"ee_path", ee_top[0]},
            {"top", {{"axes", {"x", "y"}}, {"ball", ball_top[1]}, {"ee", ee_top[1]}}},
            {"side", {{"axes", {"x", "z"}}, {"ball", ball_side[1]}, {"ee", ee_side[1]}}},
            {"outcome_geometry",
             {{"hit", o.hit},
              {"min_distance", o.min_racket_ball_distance},
              {"above_net", o.return_crossed_net},
              {"pillar_zone", o.return_hit_pillar_zone},
              {"contact_time", o.hit ? json(o.contact_time) : json(nullptr)}}}};
}

FeedbackService::FeedbackService(std::filesystem::path out_dir, const sim::Scenario& scenario,
                                 const promp::PrimitiveParams& base, const SessionConfig& config)
    : out_dir_(std::move(out_dir)), scenario_(scenario) {
    std::filesystem::create_directories(out_dir_);
    if (std::filesystem::exists(session_path())) {
        const json j = json::parse(io::read_text(session_path()));
        session_ = session_from_json(j);
        scenario_ = io::scenario_from_json(j.at("scenario"));
    } else {
        config.validate();
        scenario_.validate();
        session_.id = "session-" + std::to_string(config.seed) + "-b" + std::to_string(config.batch);
        session_.config = config;
        session_.params = base;
        sim::RoundReport r0;
        r0.evaluation = sim::run_experiment(base, config.eval_balls, scenario_.launch, scenario_,
                                            sim::evaluation_seed(config.seed), config.threads)
                            .metrics;
        session_.metrics.push_back(r0);
        io::save_primitive(primitive_path(), base);
    }
    if (session_.state != SessionState::done) generate_batch();
    if (session_.episodes.empty()) {
        for (int i = 0; i < session_.config.batch; ++i) session_.episodes.push_back(sim::episode_id(session_.round + 1, i));
        session_.pending = session_.episodes;
    }
    persist(session_);
    // A crash between the last rating and the refined round leaves it here.
    if (session_.state == SessionState::refining) close_round();
}

void FeedbackService::persist(const Session& s) const {
    io::write_text_atomic(session_path(), io::dump(session_to_json(s, scenario_)));
}

void FeedbackService::generate_batch() {
    const int round = session_.round + 1;
    auto run = sim::run_experiment(session_.params, session_.config.batch, scenario_.launch, scenario_,
                                   sim::batch_seed(session_.config.seed, session_.round), session_.config.threads);
    outcomes_ = std::move(run.outcomes);
    payloads_.clear();
    const auto dir = out_dir_ / ("round_" + std::to_string(round));
    for (int i = 0; i < static_cast<int>(outcomes_.size()); ++i) {
        const std::string id = sim::episode_id(round, i);
        payloads_[id] = replay_payload(id, outcomes_[static_cast<std::size_t>(i)]);
        io::save_recording(dir / (id + ".rec"), outcomes_[static_cast<std::size_t>(i)].executed);
        io::write_text_atomic(dir / (id + ".json"), io::dump(io::outcome_to_json(outcomes_[static_cast<std::size_t>(i)])));
    }
}

void FeedbackService::close_round() {
    Session next = session_;
    next.state = SessionState::refining;
    persist(next);
    session_ = next;

    std::vector<sim::EpisodeOutcome> rated;
    std::vector<double> rewards;
    for (std::size_t i = 0; i < session_.episodes.size(); ++i) {
        const auto it = session_.ratings.find(session_.episodes[i]);
        if (it == session_.ratings.end()) continue;
        rated.push_back(outcomes_[i]);
        rewards.push_back(it->second);
    }
    refine::RoundOptions opts;
    opts.temperature = session_.config.temperature;
    opts.em = session_.config.em;
    const auto refined = sim::refine_from_batch(session_.params, rated, rewards, scenario_, opts);

    sim::RoundReport report;
    report.round = session_.round + 1;
    report.trajectories = report.round * session_.config.batch;
    report.batch = sim::aggregate_rewards(rewards);
    report.used = refined.used;
    report.em_iterations = refined.em_iterations;
    report.evaluation = sim::run_experiment(refined.params, session_.config.eval_balls, scenario_.launch, scenario_,
                                            sim::evaluation_seed(session_.config.seed), session_.config.threads)
                            .metrics;

    next = session_;
    next.params = refined.params;
    next.metrics.push_back(report);
    next.round += 1;
    next.ratings.clear();
    next.episodes.clear();
    next.pending.clear();
    io::save_primitive(out_dir_ / ("primitive_round_" + std::to_string(next.round) + ".json"), next.params);
    io::save_primitive(primitive_path(), next.params);
    if (next.round >= next.config.rounds) {
        next.state = SessionState::done;
        outcomes_.clear();
        payloads_.clear();
    } else {
        next.state = SessionState::collecting;
        session_ = next;
        generate_batch();
        for (int i = 0; i < next.config.batch; ++i) next.episodes.push_back(sim::episode_id(next.round + 1, i));
        next.pending = next.episodes;
    }
    persist(next);
    session_ = std::move(next);
}

json FeedbackService::summary_locked() const {
    json ratings = json::object();
    for (const auto& [id, r] : session_.ratings) ratings[id] = io::reward_json(r);
    return {{"session_id", session_.id},
            {"state", std::string(to_string(session_.state))},
            {"round", session_.round + (session_.state == SessionState::done ? 0 : 1)},
            {"completed_rounds", session_.round},
            {"rounds", session_.config.rounds},
            {"batch", session_.config.batch},
            {"rated", static_cast<int>(session_.ratings.size())},
            {"pending", session_.pending},
            {"ratings", ratings},
            {"reward_values", {0, 0.25, 0.5, 1, 2}}};
}

json FeedbackService::summary() const {
    std::lock_guard lock(mutex_);
    return summary_locked();
}

std::optional<json> FeedbackService::next_episode() const {
    std::lock_guard lock(mutex_);
    if (session_.state != SessionState::collecting || session_.pending.empty()) return std::nullopt;
    return payloads_.at(session_.pending.front());
}

RateResult FeedbackService::rate(const std::string& episode_id, const json& reward) {
    std::lock_guard lock(mutex_);
    if (!reward.is_number() || !refine::is_valid_reward(reward.get<double>()))
        return {RateStatus::invalid, "reward must be one of 0, 0.25, 0.5, 1, 2"};
    if (session_.ratings.contains(episode_id)) return {RateStatus::conflict, "episode " + episode_id + " already rated"};
    const auto it = std::find(session_.pending.begin(), session_.pending.end(), episode_id);
    if (session_.state != SessionState::collecting || it == session_.pending.end())
        return {RateStatus::not_found, "episode " + episode_id + " is not awaiting a rating"};

    Session next = session_;
    next.pending.erase(next.pending.begin() + (it - session_.pending.begin()));
    next.ratings[episode_id] = reward.get<double>();
    persist(next);
    session_ = std::move(next);
    if (session_.pending.empty()) close_round();
    return {RateStatus::ok, "recorded"};
}

json FeedbackService::advance() {
    std::lock_guard lock(mutex_);
    if (session_.state == SessionState::collecting) close_round();
    return summary_locked();
}

json FeedbackService::metrics() const {
    std::lock_guard lock(mutex_);
    json rounds = json::array();
    for (const auto& m : session_.metrics) rounds.push_back(round_json(m));
    return {{"session_id", session_.id}, {"batch", session_.config.batch}, {"rounds", rounds}};
}

Session FeedbackService::snapshot() const {
    std::lock_guard lock(mutex_);
    return session_;
}

}  // namespace strikelab::service

#include "strikelab/sim/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "strikelab/sim/demos.hpp"

namespace strikelab::sim {

ExperimentMetrics aggregate_rewards(std::span<const double> rewards) {
    ExperimentMetrics m;
    m.balls = static_cast<int>(rewards.size());
    if (rewards.empty()) return m;
    int hits = 0, successes = 0;
    double total = 0.0;
    for (double r : rewards) {
        hits += r >= 0.5;
        successes += r >= 1.0;
        total += r;
    }
    const double n = static_cast<double>(rewards.size());
    m.hit_rate = hits / n;
    m.success_rate = successes / n;
    m.avg_reward = total / n;
    return m;
}

ExperimentMetrics aggregate_outcomes(std::span<const EpisodeOutcome> outcomes) {
    std::vector<double> rewards;
    rewards.reserve(outcomes.size());
    for (const auto& o : outcomes) rewards.push_back(o.reward);
    ExperimentMetrics m = aggregate_rewards(rewards);
    if (!outcomes.empty()) {
        const auto hits = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.hit; });
        m.hit_rate = static_cast<double>(hits) / static_cast<double>(outcomes.size());
    }
    return m;
}

ExperimentRun run_experiment(const promp::PrimitiveParams& primitive, int n_balls, const LaunchSpec& launch,
                             const Scenario& scenario, std::uint64_t seed, int threads) {
    if (n_balls < 1) throw std::invalid_argument("run_experiment: n_balls must be >= 1");
    scenario.validate();
    const ControllerContext ctx = ControllerContext::make(primitive, scenario);

    ExperimentRun run;
    run.outcomes.resize(static_cast<std::size_t>(n_balls));
    int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n_balls);

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int i = w; i < n_balls; i += workers)
                        run.outcomes[static_cast<std::size_t>(i)] =
                            run_episode(ctx, scenario, launch, derive_seed(seed, 0, static_cast<std::uint64_t>(i)));
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    run.metrics = aggregate_outcomes(run.outcomes);
    return run;
}

std::optional<std::vector<double>> oracle_feedback(int, std::span<const EpisodeOutcome> outcomes) {
    std::vector<double> rewards;
    rewards.reserve(outcomes.size());
    for (const auto& o : outcomes) rewards.push_back(o.reward);
    return rewards;
}

BatchRefinement refine_from_batch(const promp::PrimitiveParams& params, std::span<const EpisodeOutcome> outcomes,
                                  std::span<const double> rewards, const Scenario& scenario,
                                  const refine::RoundOptions& options) {
    if (outcomes.size() != rewards.size())
        throw std::invalid_argument("refine_from_batch: one reward per outcome required");
    for (double r : rewards)
        if (!refine::is_valid_reward(r)) throw std::invalid_argument("refine_from_batch: reward outside value set");

    std::vector<promp::Trajectory> strokes;
    std::vector<double> kept;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto stroke = extract_stroke(outcomes[i].executed, scenario.segmentation, scenario.phase_samples);
        if (!stroke) continue;
        strokes.push_back(std::move(*stroke));
        kept.push_back(rewards[i]);
    }

    BatchRefinement out;
    out.params = params;
    out.used = static_cast<int>(strokes.size());
    if (strokes.size() < 2) return out;
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
    auto em = refine::refinement_round(params, strokes, r, options);
    // Timing follows the strokes too: the importance-weighted mean duration,
    // as the mean segmented duration does for demonstrations.
    const Eigen::VectorXd alphas = refine::importance_weights(r, options.temperature);
    double duration = 0.0;
    for (std::size_t i = 0; i < strokes.size(); ++i) duration += alphas[static_cast<Eigen::Index>(i)] * strokes[i].duration();
    em.params.basis.phase_duration = duration;
    out.params = std::move(em.params);
    out.em_iterations = em.iterations;
    out.wll_trace = std::move(em.wll_trace);
    return out;
}

std::uint64_t batch_seed(std::uint64_t seed, int round) {
    return derive_seed(seed, 100, static_cast<std::uint64_t>(round));
}

std::uint64_t evaluation_seed(std::uint64_t seed) { return derive_seed(seed, 200, 0); }

std::string episode_id(int round, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%d-e%02d", round, index);
    return buf;
}

RefinementReport refinement_experiment(const promp::PrimitiveParams& base, const Scenario& scenario,
                                       const RefinementOptions& options, const FeedbackSource& feedback) {
    if (options.rounds < 0) throw std::invalid_argument("refinement_experiment: rounds must be >= 0");
    if (options.batch < 1) throw std::invalid_argument("refinement_experiment: batch must be >= 1");
    if (options.eval_balls < 1) throw std::invalid_argument("refinement_experiment: eval_balls must be >= 1");

    RefinementReport report;
    report.final_params = base;
    const std::uint64_t eval_seed = evaluation_seed(options.seed);

    RoundReport r0;
    r0.evaluation = run_experiment(base, options.eval_balls, scenario.launch, scenario, eval_seed, options.threads).metrics;
    report.rounds.push_back(r0);

    refine::RoundOptions round_opts;
    round_opts.temperature = options.temperature;
    round_opts.em = options.em;

    for (int round = 1; round <= options.rounds; ++round) {
        const auto batch = run_experiment(report.final_params, options.batch, scenario.launch, scenario,
                                          batch_seed(options.seed, round - 1), options.threads);
        const auto rewards = feedback(round, batch.outcomes);
        if (!rewards) {
            report.aborted_round = round;
            break;
        }
        const auto refined = refine_from_batch(report.final_params, batch.outcomes, *rewards, scenario, round_opts);
        report.final_params = refined.params;

        RoundReport rr;
        rr.round = round;
        rr.trajectories = round * options.batch;
        rr.batch = aggregate_rewards(*rewards);
        rr.used = refined.used;
        rr.em_iterations = refined.em_iterations;
        rr.evaluation =
            run_experiment(report.final_params, options.eval_balls, scenario.launch, scenario, eval_seed, options.threads)
                .metrics;
        report.rounds.push_back(rr);
    }
    return report;
}

}  // namespace strikelab::sim

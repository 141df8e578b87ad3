#pragma once

// Batch evaluation and the outer refinement loop: run episodes, collect
// rewards, refine the primitive from the executed strokes, re-evaluate.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strikelab/promp.hpp"
#include "strikelab/refine.hpp"
#include "strikelab/sim/episode.hpp"
#include "strikelab/sim/scenario.hpp"

namespace strikelab::sim {

struct ExperimentMetrics {
    int balls = 0;
    double hit_rate = 0.0;
    /// Fraction of episodes with reward >= 1 (a good hit).
    double success_rate = 0.0;
    double avg_reward = 0.0;
};

/// Aggregates in index order; hits are rewards >= 0.5.
ExperimentMetrics aggregate_rewards(std::span<const double> rewards);
ExperimentMetrics aggregate_outcomes(std::span<const EpisodeOutcome> outcomes);

struct ExperimentRun {
    ExperimentMetrics metrics;
    std::vector<EpisodeOutcome> outcomes;
};

/// n_balls episodes, episode i seeded with derive_seed(seed, 0, i). Episodes
/// run on `threads` workers (0 = hardware concurrency); results are
/// independent of the schedule.
ExperimentRun run_experiment(const promp::PrimitiveParams& primitive, int n_balls, const LaunchSpec& launch,
                             const Scenario& scenario, std::uint64_t seed, int threads = 0);

/// Returns one reward per outcome, or nullopt when feedback did not arrive.
using FeedbackSource =
    std::function<std::optional<std::vector<double>>(int round, std::span<const EpisodeOutcome> outcomes)>;

/// The simulator's reward oracle.
std::optional<std::vector<double>> oracle_feedback(int round, std::span<const EpisodeOutcome> outcomes);

struct BatchRefinement {
    promp::PrimitiveParams params;
    /// Episodes whose executed stroke could be segmented.
    int used = 0;
    int em_iterations = 0;
    std::vector<double> wll_trace;
};

/// Segments each executed recording and runs one refinement round over the
/// usable strokes. With fewer than two usable strokes the parameters are
/// returned unchanged.
BatchRefinement refine_from_batch(const promp::PrimitiveParams& params, std::span<const EpisodeOutcome> outcomes,
                                  std::span<const double> rewards, const Scenario& scenario,
                                  const refine::RoundOptions& options);

struct RefinementOptions {
    int rounds = 3;
    int batch = 20;
    int eval_balls = 10;
    double temperature = 1.0;
    refine::EmOptions em;
    std::uint64_t seed = 42;
    int threads = 0;
};

/// Seeds of the round-`round` training batch and of the held-out evaluation
/// (the same evaluation balls every round).
std::uint64_t batch_seed(std::uint64_t seed, int round);
std::uint64_t evaluation_seed(std::uint64_t seed);

/// Id of episode `index` in the batch of refinement round `round` (1-based),
/// e.g. "r1-e07"; shared by feedback files and the session service.
std::string episode_id(int round, int index);

struct RoundReport {
    int round = 0;
    /// Trajectories collected so far (round × batch).
    int trajectories = 0;
    ExperimentMetrics evaluation;
    /// Metrics of the batch that produced this round's parameters.
    std::optional<ExperimentMetrics> batch;
    int used = 0;
    int em_iterations = 0;
};

struct RefinementReport {
    std::vector<RoundReport> rounds;  // rounds[0] is the base primitive
    promp::PrimitiveParams final_params;
    /// Round whose feedback never arrived, if any.
    std::optional<int> aborted_round;
};

RefinementReport refinement_experiment(const promp::PrimitiveParams& base, const Scenario& scenario,
                                       const RefinementOptions& options, const FeedbackSource& feedback);

}  // namespace strikelab::sim

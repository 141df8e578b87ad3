#pragma once

// File formats: primitive parameters, chain and scenario configs (JSON),
// joint-state recordings, feedback lists and observation streams (CSV-like
// text), plus the metrics and outcome summaries the tools emit.
//
// Doubles are written in shortest round-trip form, so save → load is exact.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "strikelab/kinematics.hpp"
#include "strikelab/promp.hpp"
#include "strikelab/refine.hpp"
#include "strikelab/segment.hpp"
#include "strikelab/sim/experiment.hpp"
#include "strikelab/sim/scenario.hpp"
#include "strikelab/tracker.hpp"

namespace strikelab::io {

using nlohmann::json;

inline constexpr int kPrimitiveSchemaVersion = 1;

/// Malformed input; the message names the source and line where known.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_double(double v);
double parse_double(std::string_view text);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Pretty-printed with a trailing newline.
std::string dump(const json& j);

json primitive_to_json(const promp::PrimitiveParams& p);
promp::PrimitiveParams primitive_from_json(const json& j);
void save_primitive(const std::filesystem::path& path, const promp::PrimitiveParams& p);
promp::PrimitiveParams load_primitive(const std::filesystem::path& path);

/// {joints:[{kind, axis, translation, rotation_rpy}], tool:{translation, rotation_rpy}, limits:{LL, UL}};
/// rotations are roll-pitch-yaw, R = Rz(yaw) Ry(pitch) Rx(roll).
struct ChainConfig {
    kinematics::KinematicChain chain;
    std::optional<kinematics::Limits> limits;
};

json chain_to_json(const kinematics::KinematicChain& chain);
json chain_config_to_json(const kinematics::KinematicChain& chain, const kinematics::Limits& limits);
kinematics::KinematicChain chain_from_json(const json& j, const std::string& path = "chain");
ChainConfig chain_config_from_json(const json& j, const std::string& path = "chain");
json limits_to_json(const kinematics::Limits& limits);
kinematics::Limits limits_from_json(const json& j, const std::string& path = "limits");

/// Every field is optional and defaults to the built-in scenario; unknown
/// keys and wrong types raise sim::ConfigError naming the field path.
json scenario_to_json(const sim::Scenario& scenario);
sim::Scenario scenario_from_json(const json& j);
sim::Scenario load_scenario(const std::filesystem::path& path);

/// "# D=<n> names=<a,b,...>" then one "t, q_1..q_D[, qd_1..qd_D]" row per sample.
void write_recording(std::ostream& os, const segment::Recording& rec, bool with_velocities = true);
segment::Recording read_recording(std::istream& is, const std::string& source = "recording");
void save_recording(const std::filesystem::path& path, const segment::Recording& rec, bool with_velocities = true);
segment::Recording load_recording(const std::filesystem::path& path);

/// "trajectory_id,reward" rows; an optional header row of that text.
void write_feedback(std::ostream& os, const std::vector<refine::FeedbackRecord>& records);
std::vector<refine::FeedbackRecord> read_feedback(std::istream& is, const std::string& source = "feedback");
std::vector<refine::FeedbackRecord> load_feedback(const std::filesystem::path& path);

/// "stamp,source_id,x,y,z,noise_std" rows; an optional header row.
void write_observations(std::ostream& os, const std::vector<tracker::Observation>& observations);
std::vector<tracker::Observation> read_observations(std::istream& is, const std::string& source = "observations");

json metrics_to_json(const sim::ExperimentMetrics& m);
json report_to_json(const sim::RefinementReport& report);
/// Per-episode sidecar: outcome geometry, reward and timing.
json outcome_to_json(const sim::EpisodeOutcome& outcome);

/// Reward in its canonical text form: 0, 0.25, 0.5, 1 or 2.
json reward_json(double reward);

}  // namespace strikelab::io

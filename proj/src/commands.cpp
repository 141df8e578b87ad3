#include "strikelab/commands.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "strikelab/io.hpp"
#include "strikelab/service/server.hpp"
#include "strikelab/sim/demos.hpp"
#include "strikelab/sim/experiment.hpp"

namespace strikelab::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

sim::Scenario scenario_or_default(const std::string& path) {
    return path.empty() ? sim::Scenario{} : io::load_scenario(path);
}

std::vector<fs::path> recording_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".rec") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

struct DemoArgs {
    std::string out_dir, scenario;
    int count = 20;
    std::uint64_t seed = 42;
    bool jitter = false;
};

int cmd_make_demos(const DemoArgs& a, std::ostream& out) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    sim::DemoOptions opts;
    opts.count = a.count;
    opts.jitter = a.jitter;
    const auto recs = sim::scripted_demonstrations(sc, opts, a.seed);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "demo_%03zu.rec", i);
        io::save_recording(fs::path(a.out_dir) / name, recs[i]);
    }
    out << io::dump({{"demos", recs.size()}, {"out_dir", a.out_dir}});
    return 0;
}

struct TrainArgs {
    std::string demo_dir, out, scenario;
    int basis = 8;
    double ridge = 1e-6;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    const auto files = recording_files(a.demo_dir);
    if (files.size() < 2)
        throw std::runtime_error("training needs at least 2 recording files, found " + std::to_string(files.size()));
    std::vector<segment::Recording> recs;
    for (const auto& f : files) recs.push_back(io::load_recording(f));
    sim::TrainOptions opts;
    opts.n_basis = a.basis;
    opts.fit.ridge = a.ridge;
    opts.fit.n_phase = sc.phase_samples;
    opts.segmentation = sc.segmentation;
    const auto res = sim::train_primitive(recs, opts);
    io::save_primitive(a.out, res.params);
    json rmse = json::object();
    for (std::size_t i = 0; i < files.size(); ++i) rmse[files[i].filename().string()] = res.rmse[i];
    out << io::dump({{"primitive", a.out},
                     {"phase_duration", res.params.basis.phase_duration},
                     {"rmse", rmse},
                     {"max_rmse", *std::max_element(res.rmse.begin(), res.rmse.end())}});
    return 0;
}

struct SimulateArgs {
    std::string primitive, scenario, out_dir;
    int balls = 10;
    std::uint64_t seed = 42;
    int threads = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    const auto params = io::load_primitive(a.primitive);
    const auto run = sim::run_experiment(params, a.balls, sc.launch, sc, a.seed, a.threads);
    const json metrics = io::metrics_to_json(run.metrics);
    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "episode_%03zu", i);
            io::save_recording(dir / (std::string(name) + ".rec"), run.outcomes[i].executed);
            io::write_text_atomic(dir / (std::string(name) + ".json"), io::dump(io::outcome_to_json(run.outcomes[i])));
        }
        io::write_text_atomic(dir / "metrics.json", io::dump(metrics));
    }
    out << io::dump(metrics);
    return 0;
}

struct RefineArgs {
    std::string primitive, scenario, out_dir, feedback;
    int batch = 20, rounds = 3, eval_balls = 10, threads = 0;
    double temperature = 1.0;
    std::uint64_t seed = 42;
};

int cmd_refine(const RefineArgs& a, std::ostream& out, std::ostream& err) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    const auto base = io::load_primitive(a.primitive);
    sim::RefinementOptions opts;
    opts.rounds = a.rounds;
    opts.batch = a.batch;
    opts.eval_balls = a.eval_balls;
    opts.temperature = a.temperature;
    opts.seed = a.seed;
    opts.threads = a.threads;

    sim::FeedbackSource source = sim::oracle_feedback;
    std::map<std::string, double> table;
    if (!a.feedback.empty()) {
        for (const auto& r : io::load_feedback(a.feedback)) table[r.trajectory_id] = r.reward;
        source = [&table](int round, std::span<const sim::EpisodeOutcome> outcomes)
            -> std::optional<std::vector<double>> {
            std::vector<double> rewards;
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                const auto it = table.find(sim::episode_id(round, static_cast<int>(i)));
                if (it == table.end()) return std::nullopt;
                rewards.push_back(it->second);
            }
            return rewards;
        };
    }
    const auto report = sim::refinement_experiment(base, sc, opts, source);
    if (report.aborted_round)
        err << "feedback for round " << *report.aborted_round << " is incomplete; stopped after round "
            << *report.aborted_round - 1 << "\n";
    json doc = io::report_to_json(report);
    doc["batch"] = a.batch;
    doc["temperature"] = a.temperature;
    doc["seed"] = a.seed;
    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        io::save_primitive(dir / "primitive.json", report.final_params);
        io::write_text_atomic(dir / "report.json", io::dump(doc));
    }
    out << io::dump(doc);
    return 0;
}

struct SegmentArgs {
    std::string recording, scenario;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    const auto rec = io::load_recording(a.recording);
    // Joint-state logs carry the rail in column 0; it does not take part in
    // stroke detection but it does in the hit-plane crossing.
    const bool with_rail = rec.dof() == sc.chain.size();
    const auto arm = with_rail ? rec.columns(1, rec.dof() - 1) : rec;
    const auto seg = segment::segment_stroke(arm, sc.segmentation);
    json doc = {{"recording", a.recording}, {"samples", rec.samples()}};
    if (!seg) {
        doc["stroke"] = nullptr;
        out << io::dump(doc);
        return 0;
    }
    doc["stroke"] = {{"start", seg->start},
                     {"end", seg->end},
                     {"t_start", rec.timestamps[seg->start]},
                     {"t_end", rec.timestamps[seg->end]}};
    std::optional<double> z;
    if (with_rail) z = segment::hit_phase(rec, *seg, sc.chain, sc.plane);
    doc["hit_phase"] = z ? json(*z) : json(nullptr);
    out << io::dump(doc);
    return 0;
}

struct ServeArgs {
    std::string primitive, scenario, out_dir = "session", host = "127.0.0.1";
    int port = 8080, batch = 20, rounds = 3, threads = 0;
    double temperature = 1.0;
    std::uint64_t seed = 42;
};

service::HttpServer* g_server = nullptr;

extern "C" void handle_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    const sim::Scenario sc = scenario_or_default(a.scenario);
    promp::PrimitiveParams base;
    const bool resuming = fs::exists(fs::path(a.out_dir) / "session.json");
    if (!resuming) {
        if (a.primitive.empty()) throw std::runtime_error("--primitive is required to start a new session");
        base = io::load_primitive(a.primitive);
    }
    service::SessionConfig cfg;
    cfg.batch = a.batch;
    cfg.rounds = a.rounds;
    cfg.temperature = a.temperature;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    service::FeedbackService svc(a.out_dir, sc, base, cfg);
    service::HttpServer server(svc);
    const int port = server.bind(a.host, a.port);
    if (port < 0) {
        err << "cannot bind " << a.host << ":" << a.port << "\n";
        return 1;
    }
    out << "serving " << svc.snapshot().id << " on http://" << a.host << ":" << port << (resuming ? " (resumed)" : "")
        << std::endl;
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    server.listen();
    g_server = nullptr;
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"movement-primitive striking with feedback refinement", "strikelab"};
    app.require_subcommand(1);

    DemoArgs demo;
    auto* make_demos = app.add_subcommand("make-demos", "write scripted demonstration recordings");
    make_demos->add_option("--out-dir", demo.out_dir, "output directory")->required();
    make_demos->add_option("--count", demo.count, "number of demonstrations")->check(CLI::PositiveNumber);
    make_demos->add_option("--seed", demo.seed, "random seed");
    make_demos->add_option("--scenario", demo.scenario, "scenario JSON");
    make_demos->add_flag("--jitter", demo.jitter, "apply the scenario's launch jitter to the demo balls");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "segment demonstrations and fit a primitive");
    train_cmd->add_option("--demos", train.demo_dir, "directory of .rec files")->required();
    train_cmd->add_option("--out", train.out, "primitive file to write")->required();
    train_cmd->add_option("--basis", train.basis, "basis functions per joint")->check(CLI::Range(2, 100));
    train_cmd->add_option("--ridge", train.ridge, "ridge regularizer")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--scenario", train.scenario, "scenario JSON (segmentation settings)");

    SimulateArgs simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "run episodes and report metrics");
    sim_cmd->add_option("--primitive", simulate.primitive, "primitive file")->required();
    sim_cmd->add_option("--balls", simulate.balls, "number of balls")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", simulate.seed, "random seed");
    sim_cmd->add_option("--scenario", simulate.scenario, "scenario JSON");
    sim_cmd->add_option("--out-dir", simulate.out_dir, "write episode logs and metrics here");
    sim_cmd->add_option("--threads", simulate.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    RefineArgs refine;
    auto* refine_cmd = app.add_subcommand("refine", "refinement rounds with oracle or file feedback");
    refine_cmd->add_option("--primitive", refine.primitive, "base primitive file")->required();
    refine_cmd->add_option("--batch", refine.batch, "trajectories per round")->check(CLI::IsMember({20, 50}));
    refine_cmd->add_option("--rounds", refine.rounds, "refinement rounds")->check(CLI::NonNegativeNumber);
    refine_cmd->add_option("--temperature", refine.temperature, "softmax temperature")->check(CLI::PositiveNumber);
    refine_cmd->add_option("--seed", refine.seed, "random seed");
    refine_cmd->add_option("--eval-balls", refine.eval_balls, "held-out balls per evaluation")
        ->check(CLI::PositiveNumber);
    refine_cmd->add_option("--feedback", refine.feedback, "trajectory_id,reward file instead of the oracle");
    refine_cmd->add_option("--scenario", refine.scenario, "scenario JSON");
    refine_cmd->add_option("--out-dir", refine.out_dir, "write the refined primitive and report here");
    refine_cmd->add_option("--threads", refine.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    SegmentArgs seg;
    auto* seg_cmd = app.add_subcommand("segment", "find the stroke in a recording");
    seg_cmd->add_option("--recording", seg.recording, "recording file")->required();
    seg_cmd->add_option("--scenario", seg.scenario, "scenario JSON");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the feedback session service");
    serve_cmd->add_option("--primitive", serve.primitive, "base primitive (new sessions)");
    serve_cmd->add_option("--port", serve.port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", serve.host, "bind address");
    serve_cmd->add_option("--scenario", serve.scenario, "scenario JSON");
    serve_cmd->add_option("--batch", serve.batch, "trajectories per round")->check(CLI::IsMember({20, 50}));
    serve_cmd->add_option("--temperature", serve.temperature, "softmax temperature")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--rounds", serve.rounds, "refinement rounds")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--seed", serve.seed, "random seed");
    serve_cmd->add_option("--out-dir", serve.out_dir, "session directory");
    serve_cmd->add_option("--threads", serve.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*make_demos) return cmd_make_demos(demo, out);
        if (*train_cmd) return cmd_train(train, out);
        if (*sim_cmd) return cmd_simulate(simulate, out);
        if (*refine_cmd) return cmd_refine(refine, out, err);
        if (*seg_cmd) return cmd_segment(seg, out);
        if (*serve_cmd) return cmd_serve(serve, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace strikelab::cli

#include <gtest/gtest.h>

#include <sstream>

#include "strikelab/commands.hpp"
#include "strikelab/io.hpp"
#include "test_support.hpp"

using namespace strikelab;
using nlohmann::json;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run_tool(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Demos and a trained primitive shared by the tests in this file.
class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new fixtures::TempDir("cli");
        const auto demos = run_tool({"make-demos", "--out-dir", (*dir_ / "demos").string(), "--count", "20", "--seed", "42"});
        ASSERT_EQ(demos.code, 0) << demos.err;
        train_ = new CliRun(run_tool({"train", "--demos", (*dir_ / "demos").string(), "--out", primitive()}));
        ASSERT_EQ(train_->code, 0) << train_->err;
    }
    static void TearDownTestSuite() {
        delete train_;
        delete dir_;
    }
    static std::string primitive() { return (*dir_ / "primitive.json").string(); }
    static std::string path(const std::string& name) { return (*dir_ / name).string(); }

    static fixtures::TempDir* dir_;
    static CliRun* train_;
};

fixtures::TempDir* CliTest::dir_ = nullptr;
CliRun* CliTest::train_ = nullptr;

}  // namespace

TEST_F(CliTest, TrainReproducesDemonstrations) {
    const json summary = json::parse(train_->out);
    EXPECT_EQ(summary["rmse"].size(), 20u);
    EXPECT_LT(summary["max_rmse"].get<double>(), 0.05);
    EXPECT_NO_THROW(io::load_primitive(primitive()));
}

TEST_F(CliTest, TrainIsByteIdenticalOnRerun) {
    const auto again = run_tool({"train", "--demos", path("demos"), "--out", path("again.json")});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(io::read_text(path("again.json")), io::read_text(primitive()));
    EXPECT_EQ(again.out.substr(again.out.find("\"rmse\"")), train_->out.substr(train_->out.find("\"rmse\"")));
}

TEST_F(CliTest, TrainNeedsTwoDemos) {
    std::filesystem::create_directories(path("one"));
    std::filesystem::copy_file(path("demos/demo_000.rec"), path("one/demo_000.rec"));
    const auto r = run_tool({"train", "--demos", path("one"), "--out", path("never.json")});
    EXPECT_NE(r.code, 0);
    EXPECT_FALSE(r.err.empty());
    EXPECT_FALSE(std::filesystem::exists(path("never.json")));
}

TEST_F(CliTest, SimulateIsDeterministic) {
    const auto a = run_tool({"simulate", "--primitive", primitive(), "--balls", "10", "--seed", "42"});
    const auto b = run_tool({"simulate", "--primitive", primitive(), "--balls", "10", "--seed", "42", "--threads", "1"});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out);
    const json m = json::parse(a.out);
    EXPECT_EQ(m["balls"], 10);
    for (const char* key : {"hit_rate", "success_rate", "avg_reward"}) EXPECT_TRUE(m.contains(key)) << key;
}

TEST_F(CliTest, SimulateWritesEpisodeLogs) {
    const auto r = run_tool({"simulate", "--primitive", primitive(), "--balls", "2", "--out-dir", path("sim")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NO_THROW(io::load_recording(path("sim/episode_000.rec")));
    const json side = json::parse(io::read_text(path("sim/episode_001.json")));
    EXPECT_TRUE(side.contains("reward"));
    EXPECT_EQ(json::parse(io::read_text(path("sim/metrics.json"))), json::parse(r.out));
}

TEST_F(CliTest, MissingPrimitiveFails) {
    const auto r = run_tool({"simulate", "--primitive", path("nope.json")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("nope.json"), std::string::npos) << r.err;
}

TEST_F(CliTest, RefineAcceptsPaperBatchSizesOnly) {
    for (const char* batch : {"20", "50"}) {
        const auto r = run_tool({"refine", "--primitive", primitive(), "--batch", batch, "--rounds", "0", "--eval-balls", "2"});
        EXPECT_EQ(r.code, 0) << batch << ": " << r.err;
    }
    EXPECT_NE(run_tool({"refine", "--primitive", primitive(), "--batch", "30", "--rounds", "0"}).code, 0);
}

TEST_F(CliTest, RefineReportsRounds) {
    const auto r = run_tool({"refine", "--primitive", primitive(), "--batch", "20", "--rounds", "1", "--eval-balls", "2",
                        "--out-dir", path("refined")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = json::parse(r.out);
    ASSERT_EQ(rep["rounds"].size(), 2u);
    EXPECT_EQ(rep["rounds"][1]["trajectories"], 20);
    EXPECT_TRUE(rep["aborted_round"].is_null());
    EXPECT_NO_THROW(io::load_primitive(path("refined/primitive.json")));
}

TEST_F(CliTest, RefineWithIncompleteFeedbackAbortsCleanly) {
    io::write_text_atomic(path("partial.csv"), "trajectory_id,reward\nr1-e00,1\n");
    const auto r = run_tool({"refine", "--primitive", primitive(), "--batch", "20", "--rounds", "2", "--eval-balls", "2",
                        "--feedback", path("partial.csv")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["aborted_round"], 1);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ScenarioErrorsNameTheField) {
    io::write_text_atomic(path("bad.json"), R"({"launch": {"v0_std": [0, -1, 0]}})");
    const auto r = run_tool({"simulate", "--primitive", primitive(), "--scenario", path("bad.json")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("launch.v0_std"), std::string::npos) << r.err;
}

TEST_F(CliTest, SegmentFindsTheDemoStroke) {
    const auto r = run_tool({"segment", "--recording", path("demos/demo_000.rec")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json s = json::parse(r.out);
    ASSERT_TRUE(s["stroke"].is_object());
    EXPECT_LT(s["stroke"]["start"].get<int>(), s["stroke"]["end"].get<int>());
    const double z = s["hit_phase"].get<double>();
    EXPECT_GT(z, 0.0);
    EXPECT_LT(z, 1.0);
}

TEST(Cli, UnknownCommandFails) {
    EXPECT_NE(run_tool({"fly"}).code, 0);
    EXPECT_NE(run_tool({}).code, 0);
}

// End-to-end exercises of the eyolo binary. The path comes from CMake via
// EYOLO_CLI_PATH.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using eyolo::testing::TempDir;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    static const std::string binary = EYOLO_CLI_PATH;
    TempDir tmp("cli_out");
    const fs::path out = tmp.path() / "out.txt";
    const std::string cmd = binary + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return {WEXITSTATUS(status), buffer.str()};
}

} // namespace

TEST(Cli, HelpDocumentsSubcommandsAndDefaults) {
    const RunResult help = run("--help");
    EXPECT_EQ(help.exit_code, 0);
    for (const char* sub : {"synth", "train", "detect", "eval", "bench", "export"})
        EXPECT_NE(help.output.find(sub), std::string::npos) << sub;

    const RunResult detect_help = run("detect --help");
    EXPECT_EQ(detect_help.exit_code, 0);
    EXPECT_NE(detect_help.output.find("--nms"), std::string::npos);
    EXPECT_NE(detect_help.output.find("0.35"), std::string::npos); // documented default threshold
    EXPECT_NE(detect_help.output.find("--seed"), std::string::npos);
}

TEST(Cli, UnknownFlagExitsTwo) {
    const RunResult r = run("synth --no-such-flag");
    EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, MissingFileExitsOne) {
    const RunResult r = run("eval --data /nonexistent/dataset --oracle");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.output.find("error"), std::string::npos);
}

TEST(Cli, SynthTrainDetectEvalFlow) {
    TempDir work("cli_flow");
    const fs::path data = work.path() / "data";
    const fs::path runs = work.path() / "runs";

    const RunResult synth =
        run("synth --seed 7 --scenes 4 --objects 2 --size 128 --out " + data.string());
    ASSERT_EQ(synth.exit_code, 0) << synth.output;
    EXPECT_TRUE(fs::exists(data / "manifest.txt"));
    EXPECT_TRUE(fs::exists(data / "generator.txt"));
    EXPECT_TRUE(fs::exists(data / "scene0000" / "color.png"));

    // determinism: same seed reproduces byte-identical labels
    const fs::path data2 = work.path() / "data2";
    run("synth --seed 7 --scenes 4 --objects 2 --size 128 --out " + data2.string());
    std::ifstream a(data / "scene0000" / "labels.txt"), b(data2 / "scene0000" / "labels.txt");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());

    const RunResult train = run("train --data " + data.string() +
                                " --preset tiny --epochs 3 --batch 2 --seed 1 --out " +
                                runs.string());
    ASSERT_EQ(train.exit_code, 0) << train.output;
    EXPECT_TRUE(fs::exists(runs / "loss.csv"));
    EXPECT_TRUE(fs::exists(runs / "best.ckpt"));
    EXPECT_TRUE(fs::exists(runs / "model.cfg"));

    // loss.csv: final epoch loss below the first epoch loss
    std::ifstream csv(runs / "loss.csv");
    std::string line;
    std::getline(csv, line); // header
    double first = 0.0, last = 0.0;
    bool have_first = false;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double value = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        if (!have_first) {
            first = value;
            have_first = true;
        }
        last = value;
    }
    EXPECT_TRUE(have_first);
    EXPECT_LT(last, first);

    const RunResult detect = run("detect --image " + (data / "scene0000").string() +
                                 " --ckpt " + (runs / "best.ckpt").string() +
                                 " --preset tiny --conf 0.01 --out " +
                                 (work.path() / "det.txt").string() + " --ply " +
                                 (work.path() / "det.ply").string());
    ASSERT_EQ(detect.exit_code, 0) << detect.output;
    EXPECT_TRUE(fs::exists(work.path() / "det.txt"));
    ASSERT_TRUE(fs::exists(work.path() / "det.ply"));
    {
        std::ifstream ply(work.path() / "det.ply");
        std::string magic;
        std::getline(ply, magic);
        EXPECT_EQ(magic, "ply");
    }

    const RunResult oracle = run("eval --data " + data.string() + " --preset tiny --oracle");
    ASSERT_EQ(oracle.exit_code, 0) << oracle.output;
    EXPECT_NE(oracle.output.find("1.0000   1.0000   1.0000"), std::string::npos)
        << oracle.output;

    const RunResult exported =
        run("export --image " + (data / "scene0001").string() + " --detections " +
            (work.path() / "det.txt").string() + " --out " + (work.path() / "gt.ply").string());
    ASSERT_EQ(exported.exit_code, 0) << exported.output;
    EXPECT_TRUE(fs::exists(work.path() / "gt.ply"));
}

TEST(Cli, DataDirEnvironmentVariable) {
    TempDir work("cli_env");
    const fs::path data = work.path() / "data";
    run("synth --seed 2 --scenes 2 --size 64 --out " + data.string());
    static const std::string binary = EYOLO_CLI_PATH;
    const fs::path out = work.path() / "out.txt";
    const std::string cmd = "EYOLO_DATA_DIR=" + data.string() + " " + binary +
                            " eval --oracle > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 0);
    std::ifstream in(out);
    std::stringstream buffer;
    buffer << in.rdbuf();
    EXPECT_NE(buffer.str().find("Mean"), std::string::npos);
}

TEST(Cli, BenchEmitsTables) {
    const RunResult bench = run("bench --preset tiny --iterations 2 --candidates 64");
    ASSERT_EQ(bench.exit_code, 0) << bench.output;
    EXPECT_NE(bench.output.find("SPEED [fps]"), std::string::npos);
    EXPECT_NE(bench.output.find("3d-iou single-pass"), std::string::npos);
    EXPECT_NE(bench.output.find("2d-iou two-pass"), std::string::npos);
}

TEST(Cli, ConfigHashMismatchFailsCleanly) {
    TempDir work("cli_hash");
    const fs::path data = work.path() / "data";
    const fs::path runs = work.path() / "runs";
    run("synth --seed 3 --scenes 2 --size 128 --out " + data.string());
    run("train --data " + data.string() + " --preset tiny --epochs 1 --batch 2 --out " +
        runs.string());
    // full preset cannot load a tiny checkpoint
    const RunResult r = run("detect --image " + (data / "scene0000").string() + " --ckpt " +
                            (runs / "best.ckpt").string() + " --preset full");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.output.find("hash"), std::string::npos);
}

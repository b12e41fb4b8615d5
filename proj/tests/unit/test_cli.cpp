#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "diggan/dataset.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DIGGAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string synth_args(const fs::path& out) {
    return "synth --out " + out.string() + " --seed 4 --set synth.subjects=4 --set synth.frames=12";
}

// Narrow model and short stages for end-to-end runs.
const char* kTinyTrain =
    " --set steps.a=4 --set steps.b1=4 --set steps.b2=4 --set steps.c=4 --set batch.pairs=2"
    " --set batch.triplets=4 --set batch.angle=4 --set arch.latent_dim=8"
    " --set arch.encoder_channels=2,4,4,4 --set arch.generator_channels=4,4,2,2"
    " --set arch.discriminator_channels=2,2,4,4";

}  // namespace

TEST(Cli, SynthIsReproducible) {
    auto dir = testutil::scratch_dir();
    ASSERT_EQ(run(synth_args(dir / "a")), 0);
    ASSERT_EQ(run(synth_args(dir / "b")), 0);
    const auto a = testutil::read_tree(dir / "a"), b = testutil::read_tree(dir / "b");
    EXPECT_EQ(a, b);
    EXPECT_TRUE(a.count("run_manifest.txt"));
    EXPECT_TRUE(a.count("manifest.csv"));
}

TEST(Cli, ExitCodes) {
    auto dir = testutil::scratch_dir();
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("synth --no-such-flag"), 2);
    EXPECT_EQ(run("synth --out " + (dir / "x").string() + " --config " + (dir / "missing.cfg").string()), 3);
    EXPECT_EQ(run("synth --out " + (dir / "x").string() + " --set synth.subjects=lots"), 3);
    EXPECT_EQ(run("synth"), 3);
    EXPECT_EQ(run("train --out " + (dir / "t").string() + " --data " + (dir / "nowhere").string()), 1);
}

TEST(Cli, GeiFromSilhouettes) {
    auto dir = testutil::scratch_dir();
    ASSERT_EQ(run(synth_args(dir / "s")), 0);
    ASSERT_EQ(run("gei --input " + (dir / "s").string() + " --out " + (dir / "g").string()), 0);
    const auto ds = diggan::scan_dataset(dir / "g");
    EXPECT_EQ(ds.records.size(), 4u * 4u * 2u);
}

TEST(Cli, TrainEvalGenerateReport) {
    auto dir = testutil::scratch_dir();
    ASSERT_EQ(run(synth_args(dir / "data")), 0);
    const auto train = dir / "run";
    ASSERT_EQ(run("train --data " + (dir / "data").string() + " --out " + train.string() + " --seed 2" + kTinyTrain), 0);
    for (const char* f : {"final.ckpt", "loss_log.csv", "split.csv", "run_manifest.txt", "snapshot_C.pgm"})
        EXPECT_TRUE(fs::exists(train / f)) << f;

    const std::string common = " --data " + (dir / "data").string() + " --checkpoint " + (train / "final.ckpt").string();
    ASSERT_EQ(run("eval cooperative" + common + " --out " + (dir / "ev").string()), 0);
    const auto csv = testutil::read_file(dir / "ev" / "report_cooperative.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 16);

    ASSERT_EQ(run("eval uncooperative" + common + " --seed 3 --out " + (dir / "u1").string()), 0);
    ASSERT_EQ(run("eval uncooperative" + common + " --seed 3 --out " + (dir / "u2").string()), 0);
    EXPECT_EQ(testutil::read_file(dir / "u1" / "report_uncooperative.csv"),
              testutil::read_file(dir / "u2" / "report_uncooperative.csv"));

    ASSERT_EQ(run("eval curve" + common + " --set curve.sizes=1,2,4 --set curve.trials=2 --out " + (dir / "cv").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "cv" / "curve.png"));
    ASSERT_EQ(run("eval dm --data " + (dir / "data").string() + " --out " + (dir / "dm").string()), 0);
    ASSERT_EQ(run("generate" + common + " --set generate.k=3 --out " + (dir / "gen").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "gen" / "all_views.pgm"));
    EXPECT_TRUE(fs::exists(dir / "gen" / "consistency.csv"));

    ASSERT_EQ(run("report --input " + (dir / "ev").string() + " --out " + (dir / "rep").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "rep" / "report_cooperative.txt"));

    ASSERT_EQ(run("finetune" + common + " --set steps.finetune=3 --out " + (dir / "ft").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "ft" / "final.ckpt"));
}

#include <gtest/gtest.h>

#include <map>

#include "diggan/errors.hpp"
#include "diggan/evidence.hpp"
#include "diggan/synth.hpp"
#include "diggan/trainer.hpp"
#include "helpers.hpp"

using namespace diggan;

namespace {

ArchSpec narrow(int nv) {
    ArchSpec a;
    a.latent_dim = 16;
    a.n_views = nv;
    a.encoder_channels = {4, 8, 8, 8};
    a.generator_channels = {8, 8, 4, 4};
    a.discriminator_channels = {4, 4, 8, 8};
    return a;
}

const Dataset& data() {
    static const Dataset ds = synthesize_dataset(testutil::small_spec(6, 17));
    return ds;
}

const ModelParams& model() {
    static const ModelParams m = init_params(narrow(4), 3);
    return m;
}

std::vector<double> as_targets(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(ViewVector, OneHotAndInterpolation) {
    EXPECT_EQ(view_vector_for({0, 30, 60, 90}, 60), (ViewVector{0, 0, 1, 0}));
    EXPECT_THROW(view_vector_for({0, 30, 60, 90}, 45), UnknownViewError);
    const auto v = view_vector_for({0, 30, 60, 90}, 45, true);
    EXPECT_DOUBLE_EQ(v[1], 0.5);
    EXPECT_DOUBLE_EQ(v[2], 0.5);
    EXPECT_THROW(view_vector_for({0, 30, 60, 90}, 120, true), UnknownViewError);
}

TEST(GenerateView, ShapeRangeDeterminism) {
    const auto& probe = data().records.front().gei;
    const auto a = generate_view(model(), probe, data().views_deg, 30);
    EXPECT_EQ(a.pixels.height, kGeiHeight);
    EXPECT_EQ(a.pixels.width, kGeiWidth);
    for (double x : a.pixels.data) {
        ASSERT_GE(x, 0.0);
        ASSERT_LE(x, 1.0);
    }
    EXPECT_EQ(generate_view(model(), probe, data().views_deg, 30).pixels, a.pixels);
    EXPECT_THROW(generate_view(model(), probe, data().views_deg, 45), UnknownViewError);
}

TEST(GenerateAllViews, SingleTargetMatchesGenerateView) {
    const auto& probe = data().records[5].gei;
    const auto all = generate_all_views(model(), probe, data().views_deg, {90});
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].pixels, generate_view(model(), probe, data().views_deg, 90).pixels);
    EXPECT_TRUE(generate_all_views(model(), probe, data().views_deg, {}).empty());
}

TEST(GenerateAllViews, FourteenViewPreset) {
    auto s = testutil::small_spec(2, 19);
    s.views_deg = fourteen_view_preset();
    s.seqs_per_view = 1;
    const auto ds = synthesize_dataset(s);
    const auto m = init_params(narrow(14), 4);
    const auto imgs = generate_all_views(m, ds.records.front().gei, ds.views_deg, as_targets(ds.views_deg));
    EXPECT_EQ(imgs.size(), 14u);
}

TEST(Grid, AllViewsLayoutAndSidecar) {
    const auto& rec = data().records.front();
    const auto g = all_views_grid(model(), rec, data().views_deg, as_targets(data().views_deg));
    EXPECT_EQ(g.rows, 1);
    EXPECT_EQ(g.columns, 5);
    EXPECT_EQ(g.image.height, kGeiHeight);
    EXPECT_EQ(g.image.width, 5 * kGeiWidth);
    ASSERT_EQ(g.tiles.size(), 5u);
    EXPECT_EQ(g.tiles[0].kind, "ground-truth");
    EXPECT_EQ(g.tiles[3].view, "60");
    const auto csv = grid_sidecar_csv(g);
    EXPECT_EQ(csv.rfind("row,column,subject,view,kind\n", 0), 0u);

    auto dir = testutil::scratch_dir();
    write_grid(g, dir / "g.pgm", dir / "g.csv");
    EXPECT_EQ(read_pgm(dir / "g.pgm").width, 5 * kGeiWidth);
    EXPECT_EQ(testutil::read_file(dir / "g.csv"), csv);
}

TEST(Grid, ExperimentalInterpolationIsMarked) {
    const auto& rec = data().records.front();
    EXPECT_THROW(all_views_grid(model(), rec, data().views_deg, {45}), UnknownViewError);
    const auto g = all_views_grid(model(), rec, data().views_deg, {15, 45}, true);
    EXPECT_TRUE(g.experimental);
    EXPECT_EQ(grid_sidecar_csv(g).rfind("# experimental", 0), 0u);
}

TEST(Consistency, ProbeInGalleryRanksFirst) {
    const auto& rec = data().records[9];
    const auto res = consistency_grid(model(), rec, data().records, 1, data().views_deg, as_targets(data().views_deg));
    ASSERT_EQ(res.ranked_subjects.size(), 1u);
    EXPECT_EQ(res.ranked_subjects[0], rec.subject_id);
    EXPECT_EQ(res.grid.rows, 2);
}

TEST(Consistency, KRowsPlusProbe) {
    const auto& rec = data().records.front();
    const auto targets = as_targets(data().views_deg);
    const auto res = consistency_grid(model(), rec, data().records, 5, data().views_deg, targets);
    EXPECT_EQ(res.grid.rows, 6);
    EXPECT_EQ(res.grid.columns, 5);
    EXPECT_EQ(res.grid.image.height, 6 * kGeiHeight);
    EXPECT_EQ(res.generated.size(), 6u);
    for (const auto& row : res.generated) EXPECT_EQ(row.size(), 4u);
    EXPECT_EQ(res.grid.tiles.size(), 30u);
    EXPECT_THROW(consistency_grid(model(), rec, data().records, 7, data().views_deg, targets), InvalidArgumentError);
    EXPECT_THROW(consistency_grid(model(), rec, {}, 1, data().views_deg, targets), EmptyDatasetError);
}

// After cross-view training, a generation at a target view should resemble
// the subject's real GEI at that view more than the GEI it was made from.
TEST(TrainedModel, GenerationMovesTowardTargetView) {
    TrainConfig c;
    c.steps_a = 20;
    c.steps_b1 = 100;
    c.steps_b2 = 300;
    c.steps_c = 0;
    c.arch.latent_dim = 32;
    const auto ck = run_curriculum(c, data(), {});
    std::map<std::pair<int, int>, const SampleRecord*> seq1;
    for (const auto& r : data().records)
        if (r.seq_id == 1) seq1[{r.subject_id, r.view_index}] = &r;
    int wins = 0, total = 0;
    for (const auto& [key, rec] : seq1)
        for (int t = 0; t < data().n_views(); ++t) {
            if (t == key.second) continue;
            const auto* truth = seq1.at({key.first, t});
            const double deg = data().views_deg[static_cast<std::size_t>(t)];
            const auto gen = generate_view(ck.model, rec->gei, data().views_deg, deg).pixels;
            wins += recon_loss(gen, truth->gei.pixels) < recon_loss(gen, rec->gei.pixels);
            ++total;
        }
    std::cout << "generation closer to the target-view GEI in " << wins << "/" << total << "\n";
    EXPECT_GE(wins, total * 3 / 4);
}

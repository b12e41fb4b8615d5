#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "diggan/config.hpp"
#include "diggan/dataset.hpp"
#include "diggan/losses.hpp"
#include "diggan/network.hpp"
#include "diggan/nn/adam.hpp"

namespace diggan {

struct TrainConfig {
    std::int64_t steps_a = 300;
    std::int64_t steps_b1 = 150;
    std::int64_t steps_b2 = 250;
    std::int64_t steps_c = 400;
    std::int64_t steps_finetune = 200;

    int batch_size = 8;          // (source, target) pairs per step
    int triplet_batch = 32;      // triplets per stage-C step
    int angle_batch = 32;        // stage-A batch, half with wrong labels; even

    double lr_encoder = 5e-4;
    double lr_generator = 5e-4;
    double lr_angle = 2e-4;
    double lr_identity = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;

    LossWeights weights;
    std::uint64_t seed = 1;
    std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
    bool allow_stage_override = false;

    // n_views = 0 takes the view count from the training dataset.
    ArchSpec arch{};

    TrainConfig() { arch.n_views = 0; }

    void validate() const;
    // Round-trips through Config (every field has a key).
    Config to_config() const;
    static TrainConfig from_config(const Config& c);
};

struct OptimizerState {
    std::int64_t steps = 0;
    std::vector<std::vector<double>> m, v;
};

// Training snapshot: parameters, optimizer moments and bookkeeping.
struct Checkpoint {
    static constexpr std::uint32_t kFormatVersion = 1;

    ModelParams model;
    TrainConfig config;
    std::string stage = "init";  // init, A, B1, B2, C, final
    std::int64_t global_step = 0;
    OptimizerState opt_encoder, opt_generator, opt_angle, opt_identity;

    explicit Checkpoint(const ArchSpec& arch) : model(arch) {}
};

// Magic "DIGGAN01", version, key/value entries, trailing FNV-1a checksum.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint clone_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

struct LossRow {
    std::int64_t step = 0;
    std::string stage;
    double d_angle = 0, d_id = 0, g_angle = 0, g_id = 0, rec = 0, triplet = 0, total = 0;
};

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRow>& rows);
std::vector<LossRow> read_loss_log(const std::filesystem::path& path);

// Optional sinks for a training run.
struct TrainHooks {
    std::vector<LossRow>* log = nullptr;
    std::filesystem::path checkpoint_dir;  // periodic checkpoints go here when set
    std::ostream* warnings = nullptr;      // defaults to std::cerr
};

enum class Substage { B1, B2 };

Checkpoint initial_checkpoint(const TrainConfig& config, const Dataset& ds);
Checkpoint train_stage_A(const TrainConfig& config, const Dataset& ds, const TrainHooks& hooks = {});
Checkpoint train_stage_B(const TrainConfig& config, const Dataset& ds, Checkpoint ckpt, Substage sub,
                         const TrainHooks& hooks = {});
Checkpoint train_stage_C(const TrainConfig& config, const Dataset& ds, Checkpoint ckpt, const TrainHooks& hooks = {});
Checkpoint fine_tune(const TrainConfig& config, const Dataset& ds, Checkpoint ckpt, const TrainHooks& hooks = {});

// Probe row used for the stage progression artifact: the probe followed by
// its generation at every view.
Image stage_snapshot(const ModelParams& m, const Image& probe);

// A -> B1 -> B2 -> C. Writes snapshot_{A,B1,B2,C}.pgm, loss_log.csv and
// final.ckpt under `out_dir` when it is non-empty.
Checkpoint run_curriculum(const TrainConfig& config, const Dataset& ds, const std::filesystem::path& out_dir,
                          std::vector<LossRow>* log = nullptr);

// Fraction of a labelled angle batch that D_angle classifies correctly
// (probability > 0.5 iff the label is true).
double angle_accuracy(const ModelParams& m, const std::vector<AnglePretrainSample>& batch);

}  // namespace diggan

#include "diggan/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "diggan/errors.hpp"
#include "diggan/objectives.hpp"

namespace diggan {

// ---- config ----

void TrainConfig::validate() const {
    for (auto s : {steps_a, steps_b1, steps_b2, steps_c, steps_finetune})
        if (s < 0) throw InvalidArgumentError("step counts must be non-negative");
    if (batch_size < 1 || triplet_batch < 1) throw InvalidArgumentError("batch sizes must be positive");
    if (angle_batch < 2 || angle_batch % 2 != 0)
        throw InvalidArgumentError("angle pretraining batch must be even and at least 2");
    for (double lr : {lr_encoder, lr_generator, lr_angle, lr_identity})
        if (!(lr > 0.0)) throw InvalidArgumentError("learning rates must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw InvalidArgumentError("Adam betas must lie in [0,1)");
    if (checkpoint_every < 0) throw InvalidArgumentError("checkpoint cadence must be non-negative");
    weights.validate();
    if (arch.n_views != 0 && arch.n_views < 2) throw InvalidArgumentError("n_views must be 0 (auto) or at least 2");
    ArchSpec probe = arch;
    if (probe.n_views == 0) probe.n_views = 2;
    probe.validate();
}

Config TrainConfig::to_config() const {
    Config c;
    c.set("steps.a", std::to_string(steps_a));
    c.set("steps.b1", std::to_string(steps_b1));
    c.set("steps.b2", std::to_string(steps_b2));
    c.set("steps.c", std::to_string(steps_c));
    c.set("steps.finetune", std::to_string(steps_finetune));
    c.set("batch.pairs", std::to_string(batch_size));
    c.set("batch.triplets", std::to_string(triplet_batch));
    c.set("batch.angle", std::to_string(angle_batch));
    c.set("lr.encoder", format_double(lr_encoder));
    c.set("lr.generator", format_double(lr_generator));
    c.set("lr.angle", format_double(lr_angle));
    c.set("lr.identity", format_double(lr_identity));
    c.set("adam.beta1", format_double(beta1));
    c.set("adam.beta2", format_double(beta2));
    c.set("weight.triplet", format_double(weights.triplet));
    c.set("weight.rec", format_double(weights.rec));
    c.set("weight.angle", format_double(weights.angle));
    c.set("weight.id", format_double(weights.id));
    c.set("triplet.margin", format_double(weights.margin));
    c.set("seed", std::to_string(seed));
    c.set("checkpoint.every", std::to_string(checkpoint_every));
    c.set("stage.allow_override", allow_stage_override ? "true" : "false");
    c.set("arch.latent_dim", std::to_string(arch.latent_dim));
    c.set("arch.n_views", std::to_string(arch.n_views));
    c.set("arch.image_height", std::to_string(arch.image_height));
    c.set("arch.image_width", std::to_string(arch.image_width));
    c.set("arch.encoder_channels", join_ints(arch.encoder_channels));
    c.set("arch.generator_channels", join_ints(arch.generator_channels));
    c.set("arch.discriminator_channels", join_ints(arch.discriminator_channels));
    return c;
}

TrainConfig TrainConfig::from_config(const Config& c) {
    TrainConfig t;
    t.steps_a = c.get_int("steps.a", t.steps_a);
    t.steps_b1 = c.get_int("steps.b1", t.steps_b1);
    t.steps_b2 = c.get_int("steps.b2", t.steps_b2);
    t.steps_c = c.get_int("steps.c", t.steps_c);
    t.steps_finetune = c.get_int("steps.finetune", t.steps_finetune);
    t.batch_size = static_cast<int>(c.get_int("batch.pairs", t.batch_size));
    t.triplet_batch = static_cast<int>(c.get_int("batch.triplets", t.triplet_batch));
    t.angle_batch = static_cast<int>(c.get_int("batch.angle", t.angle_batch));
    t.lr_encoder = c.get_double("lr.encoder", t.lr_encoder);
    t.lr_generator = c.get_double("lr.generator", t.lr_generator);
    t.lr_angle = c.get_double("lr.angle", t.lr_angle);
    t.lr_identity = c.get_double("lr.identity", t.lr_identity);
    t.beta1 = c.get_double("adam.beta1", t.beta1);
    t.beta2 = c.get_double("adam.beta2", t.beta2);
    t.weights.triplet = c.get_double("weight.triplet", t.weights.triplet);
    t.weights.rec = c.get_double("weight.rec", t.weights.rec);
    t.weights.angle = c.get_double("weight.angle", t.weights.angle);
    t.weights.id = c.get_double("weight.id", t.weights.id);
    t.weights.margin = c.get_double("triplet.margin", t.weights.margin);
    const auto seed = c.get_int("seed", static_cast<std::int64_t>(t.seed));
    if (seed < 0) throw ConfigError("`seed` must be non-negative");
    t.seed = static_cast<std::uint64_t>(seed);
    t.checkpoint_every = c.get_int("checkpoint.every", t.checkpoint_every);
    t.allow_stage_override = c.get_bool("stage.allow_override", t.allow_stage_override);
    t.arch.latent_dim = static_cast<int>(c.get_int("arch.latent_dim", t.arch.latent_dim));
    t.arch.n_views = static_cast<int>(c.get_int("arch.n_views", t.arch.n_views));
    t.arch.image_height = static_cast<int>(c.get_int("arch.image_height", t.arch.image_height));
    t.arch.image_width = static_cast<int>(c.get_int("arch.image_width", t.arch.image_width));
    t.arch.encoder_channels = c.get_int_list("arch.encoder_channels", t.arch.encoder_channels);
    t.arch.generator_channels = c.get_int_list("arch.generator_channels", t.arch.generator_channels);
    t.arch.discriminator_channels = c.get_int_list("arch.discriminator_channels", t.arch.discriminator_channels);
    return t;
}

// ---- loss log ----

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRow>& rows) {
    std::ofstream out(path);
    if (!out) throw UnwritablePathError("cannot write loss log " + path.string());
    out << "step,stage,loss_D_angle,loss_D_id,loss_G_angle,loss_G_id,loss_rec,loss_triplet,total\n";
    for (const auto& r : rows)
        out << r.step << ',' << r.stage << ',' << format_double(r.d_angle) << ',' << format_double(r.d_id) << ','
            << format_double(r.g_angle) << ',' << format_double(r.g_id) << ',' << format_double(r.rec) << ','
            << format_double(r.triplet) << ',' << format_double(r.total) << '\n';
}

std::vector<LossRow> read_loss_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingDirectoryError("cannot read loss log " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<LossRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[9];
        for (auto& x : f)
            if (!std::getline(ss, x, ',')) throw LayoutError("malformed loss log row: " + line);
        LossRow r;
        r.step = std::stoll(f[0]);
        r.stage = f[1];
        double* vals[] = {&r.d_angle, &r.d_id, &r.g_angle, &r.g_id, &r.rec, &r.triplet, &r.total};
        for (int i = 0; i < 7; ++i) *vals[i] = std::stod(f[i + 2]);
        rows.push_back(r);
    }
    return rows;
}

// ---- training session ----

namespace {

nn::AdamOptions adam_options(const TrainConfig& c, double lr) { return {lr, c.beta1, c.beta2, 1e-8}; }

void restore(nn::Adam<float>& opt, const OptimizerState& s) {
    opt.set_steps(s.steps);
    if (s.m.empty()) return;
    opt.first_moments() = s.m;
    opt.second_moments() = s.v;
}

OptimizerState snapshot(nn::Adam<float>& opt) { return {opt.steps(), opt.first_moments(), opt.second_moments()}; }

template <class T>
std::vector<const Image*> images_of(const std::vector<T>& items, const SampleRecord* T::*member) {
    std::vector<const Image*> out;
    for (const auto& it : items) out.push_back(&(it.*member)->gei.pixels);
    return out;
}

nn::Tensor<float> view_tensor(const std::vector<int>& views, int n_views) {
    nn::Tensor<float> t(n_views, static_cast<int>(views.size()), 1, 1);
    for (std::size_t n = 0; n < views.size(); ++n) t.data[static_cast<std::size_t>(views[n]) * views.size() + n] = 1.0f;
    return t;
}

// Binds optimizers to a checkpoint's model for the duration of one stage.
class Session {
public:
    Session(const TrainConfig& cfg, const Dataset& ds, Checkpoint& ck, const TrainHooks& hooks, std::string stage,
            std::uint64_t stream)
        : cfg_(cfg), ck_(ck), hooks_(hooks), stage_(std::move(stage)), sampler_(ds),
          rng_(Rng::derive(cfg.seed, {stream, static_cast<std::uint64_t>(ck.global_step)})),
          opt_e_(ck.model.parameters(Net::Encoder), adam_options(cfg, cfg.lr_encoder)),
          opt_g_(ck.model.parameters(Net::Generator), adam_options(cfg, cfg.lr_generator)),
          opt_a_(ck.model.parameters(Net::AngleDiscriminator), adam_options(cfg, cfg.lr_angle)),
          opt_i_(ck.model.parameters(Net::IdentityDiscriminator), adam_options(cfg, cfg.lr_identity)) {
        restore(opt_e_, ck.opt_encoder);
        restore(opt_g_, ck.opt_generator);
        restore(opt_a_, ck.opt_angle);
        restore(opt_i_, ck.opt_identity);
    }

    ~Session() = default;

    void run_angle_pretrain(std::int64_t steps) {
        const int nv = ck_.model.arch.n_views;
        for (std::int64_t s = 0; s < steps; ++s) {
            const auto batch = sampler_.angle_pretrain_batch(static_cast<std::size_t>(cfg_.angle_batch), rng_);
            std::vector<const Image*> imgs;
            std::vector<int> labels;
            std::vector<double> truth;
            for (const auto& b : batch) {
                imgs.push_back(&b.record->gei.pixels);
                labels.push_back(b.label_view);
                truth.push_back(b.truth ? 1.0 : 0.0);
            }
            const auto x = images_to_tensor<float>(imgs, ck_.model.arch.image_height, ck_.model.arch.image_width);
            opt_a_.zero_grad();
            LossRow row;
            row.d_angle = angle_pretrain_loss(ck_.model, x, view_tensor(labels, nv), truth);
            row.total = row.d_angle;
            opt_a_.step();
            finish_step(row);
        }
    }

    void run_adversarial(std::int64_t steps, PairMode mode, LossWeights weights) {
        const int nv = ck_.model.arch.n_views, h = ck_.model.arch.image_height, w = ck_.model.arch.image_width;
        const bool use_triplet = weights.triplet != 0.0;
        for (std::int64_t s = 0; s < steps; ++s) {
            const auto pairs = sampler_.pair_batch(static_cast<std::size_t>(cfg_.batch_size), rng_, mode);
            PairBatch<float> b;
            b.source = images_to_tensor<float>(images_of(pairs, &PairSample::source), h, w);
            b.target = images_to_tensor<float>(images_of(pairs, &PairSample::target), h, w);
            std::vector<int> views;
            for (const auto& p : pairs) views.push_back(p.target_view);
            b.view = view_tensor(views, nv);

            TripletBatch<float> tb;
            if (use_triplet) {
                const auto trip = sampler_.triplet_batch(static_cast<std::size_t>(cfg_.triplet_batch), rng_);
                tb.anchor = images_to_tensor<float>(images_of(trip, &TripletSample::anchor), h, w);
                tb.positive = images_to_tensor<float>(images_of(trip, &TripletSample::positive), h, w);
                tb.negative = images_to_tensor<float>(images_of(trip, &TripletSample::negative), h, w);
            }

            const auto cache = generate_fakes(ck_.model, b);

            opt_a_.zero_grad();
            opt_i_.zero_grad();
            const auto d = discriminator_losses(ck_.model, b, cache.fake);
            opt_a_.step();
            opt_i_.step();

            opt_e_.zero_grad();
            opt_g_.zero_grad();
            const auto g = generator_losses(ck_.model, b, cache, use_triplet ? &tb : nullptr, weights);
            opt_e_.step();
            opt_g_.step();

            LossRow row;
            row.d_angle = d.angle;
            row.d_id = d.id;
            row.g_angle = g.angle;
            row.g_id = g.id;
            row.rec = g.rec;
            row.triplet = g.triplet;
            row.total = g.total;
            finish_step(row);
        }
    }

    void store() {
        ck_.opt_encoder = snapshot(opt_e_);
        ck_.opt_generator = snapshot(opt_g_);
        ck_.opt_angle = snapshot(opt_a_);
        ck_.opt_identity = snapshot(opt_i_);
    }

private:
    void finish_step(LossRow& row) {
        ++ck_.global_step;
        row.step = ck_.global_step;
        row.stage = stage_;
        for (double v : {row.d_angle, row.d_id, row.g_angle, row.g_id, row.rec, row.triplet, row.total})
            if (!std::isfinite(v))
                throw NonFiniteError("non-finite loss in stage " + stage_ + " at step " + std::to_string(row.step) +
                                     " (D_angle " + std::to_string(row.d_angle) + ", D_id " +
                                     std::to_string(row.d_id) + ", rec " + std::to_string(row.rec) + ")");
        if (hooks_.log) hooks_.log->push_back(row);
        if (cfg_.checkpoint_every > 0 && !hooks_.checkpoint_dir.empty() && row.step % cfg_.checkpoint_every == 0) {
            store();
            const auto tag = ck_.stage;
            ck_.stage = stage_;
            save_checkpoint(ck_, hooks_.checkpoint_dir / ("step_" + std::to_string(row.step) + ".ckpt"));
            ck_.stage = tag;
        }
    }

    const TrainConfig& cfg_;
    Checkpoint& ck_;
    const TrainHooks& hooks_;
    std::string stage_;
    BatchSampler sampler_;
    Rng rng_;
    nn::Adam<float> opt_e_, opt_g_, opt_a_, opt_i_;
};

std::ostream& warn_stream(const TrainHooks& h) { return h.warnings ? *h.warnings : std::cerr; }

void require_stage(const Checkpoint& ck, const std::string& expected, const std::string& next, const TrainConfig& cfg,
                   const TrainHooks& hooks) {
    if (ck.stage == expected) return;
    const std::string msg =
        "stage " + next + " expects a checkpoint from stage " + expected + ", got stage " + ck.stage;
    if (!cfg.allow_stage_override) throw StageOrderError(msg);
    warn_stream(hooks) << "warning: " << msg << " (override enabled)\n";
}

void require_views(const Dataset& ds) {
    if (ds.records.empty()) throw EmptyDatasetError("training dataset has no records");
    if (ds.n_views() < 2) throw InvalidArgumentError("training requires at least 2 views");
}

void check_arch(const Checkpoint& ck, const Dataset& ds) {
    if (ck.model.arch.n_views != ds.n_views())
        throw ArchitectureMismatchError("model has " + std::to_string(ck.model.arch.n_views) +
                                        " view slots, dataset has " + std::to_string(ds.n_views()));
}

}  // namespace

Checkpoint initial_checkpoint(const TrainConfig& config, const Dataset& ds) {
    config.validate();
    require_views(ds);
    ArchSpec arch = config.arch;
    if (arch.n_views == 0) arch.n_views = ds.n_views();
    if (arch.n_views != ds.n_views())
        throw ArchitectureMismatchError("config declares " + std::to_string(arch.n_views) + " views, dataset has " +
                                        std::to_string(ds.n_views()));
    Checkpoint c(arch);
    c.model.initialize(config.seed);
    c.config = config;
    return c;
}

Checkpoint train_stage_A(const TrainConfig& config, const Dataset& ds, const TrainHooks& hooks) {
    Checkpoint ck = initial_checkpoint(config, ds);
    {
        Session s(config, ds, ck, hooks, "A", 0xA);
        s.run_angle_pretrain(config.steps_a);
        s.store();
    }
    ck.stage = "A";
    return ck;
}

Checkpoint train_stage_B(const TrainConfig& config, const Dataset& ds, Checkpoint ck, Substage sub,
                         const TrainHooks& hooks) {
    config.validate();
    require_views(ds);
    check_arch(ck, ds);
    const std::string name = sub == Substage::B1 ? "B1" : "B2";
    require_stage(ck, sub == Substage::B1 ? "A" : "B1", name, config, hooks);
    LossWeights w = config.weights;
    w.triplet = 0.0;
    {
        Session s(config, ds, ck, hooks, name, sub == Substage::B1 ? 0xB1 : 0xB2);
        s.run_adversarial(sub == Substage::B1 ? config.steps_b1 : config.steps_b2,
                          sub == Substage::B1 ? PairMode::Identity : PairMode::CrossView, w);
        s.store();
    }
    ck.config = config;
    ck.stage = name;
    return ck;
}

Checkpoint train_stage_C(const TrainConfig& config, const Dataset& ds, Checkpoint ck, const TrainHooks& hooks) {
    config.validate();
    require_views(ds);
    check_arch(ck, ds);
    require_stage(ck, "B2", "C", config, hooks);
    {
        Session s(config, ds, ck, hooks, "C", 0xC);
        s.run_adversarial(config.steps_c, PairMode::CrossView, config.weights);
        s.store();
    }
    ck.config = config;
    ck.stage = "final";
    return ck;
}

Checkpoint fine_tune(const TrainConfig& config, const Dataset& ds, Checkpoint ck, const TrainHooks& hooks) {
    config.validate();
    require_views(ds);
    check_arch(ck, ds);
    ArchSpec wanted = config.arch;
    if (wanted.n_views == 0) wanted.n_views = ds.n_views();
    if (architecture_hash(Model<float>(wanted)) != architecture_hash(ck.model))
        throw ArchitectureMismatchError("fine-tune config architecture differs from the checkpoint's");
    require_stage(ck, "final", "fine-tune", config, hooks);
    {
        Session s(config, ds, ck, hooks, "C", 0xF7);
        s.run_adversarial(config.steps_finetune, PairMode::CrossView, config.weights);
        s.store();
    }
    ck.config = config;
    ck.stage = "final";
    return ck;
}

Image stage_snapshot(const ModelParams& m, const Image& probe) {
    const Image* p = &probe;
    const auto codes = encode(m, std::span<const Image* const>(&p, 1));
    std::vector<Code> cs;
    std::vector<ViewVector> vs;
    for (int v = 0; v < m.arch.n_views; ++v) {
        cs.push_back(codes[0]);
        ViewVector oh(static_cast<std::size_t>(m.arch.n_views), 0.0);
        oh[static_cast<std::size_t>(v)] = 1.0;
        vs.push_back(oh);
    }
    const auto gen = generate(m, cs, vs);
    std::vector<const Image*> tiles{&probe};
    for (const auto& g : gen) tiles.push_back(&g);
    return tile_images(tiles, 1, static_cast<int>(tiles.size()));
}

Checkpoint run_curriculum(const TrainConfig& config, const Dataset& ds, const std::filesystem::path& out_dir,
                          std::vector<LossRow>* log) {
    std::vector<LossRow> local;
    TrainHooks hooks;
    hooks.log = log ? log : &local;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (config.checkpoint_every > 0) hooks.checkpoint_dir = out_dir / "checkpoints";
        if (!hooks.checkpoint_dir.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);
    }
    require_views(ds);
    const Image& probe = ds.records.front().gei.pixels;
    auto snap = [&](const Checkpoint& ck, const std::string& tag) {
        if (!out_dir.empty()) write_pgm(out_dir / ("snapshot_" + tag + ".pgm"), quantize(stage_snapshot(ck.model, probe)));
    };

    auto ck = train_stage_A(config, ds, hooks);
    snap(ck, "A");
    ck = train_stage_B(config, ds, std::move(ck), Substage::B1, hooks);
    snap(ck, "B1");
    ck = train_stage_B(config, ds, std::move(ck), Substage::B2, hooks);
    snap(ck, "B2");
    ck = train_stage_C(config, ds, std::move(ck), hooks);
    snap(ck, "C");
    if (!out_dir.empty()) {
        write_loss_log(out_dir / "loss_log.csv", *hooks.log);
        save_checkpoint(ck, out_dir / "final.ckpt");
    }
    return ck;
}

double angle_accuracy(const ModelParams& m, const std::vector<AnglePretrainSample>& batch) {
    if (batch.empty()) throw InvalidArgumentError("angle_accuracy: empty batch");
    std::vector<const Image*> imgs;
    std::vector<ViewVector> views;
    for (const auto& b : batch) {
        imgs.push_back(&b.record->gei.pixels);
        ViewVector v(static_cast<std::size_t>(m.arch.n_views), 0.0);
        v[static_cast<std::size_t>(b.label_view)] = 1.0;
        views.push_back(v);
    }
    const auto p = discriminate_angle(m, imgs, views);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.size(); ++i) correct += ((p[i] > 0.5) == batch[i].truth) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(p.size());
}

}  // namespace diggan

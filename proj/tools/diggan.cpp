// Command-line entry point. Configuration precedence, lowest first:
// built-in defaults, --config file, --set key=value, dedicated flags.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "diggan/config.hpp"
#include "diggan/errors.hpp"
#include "diggan/evaluator.hpp"
#include "diggan/evidence.hpp"
#include "diggan/gei.hpp"
#include "diggan/synth.hpp"
#include "diggan/trainer.hpp"

namespace fs = std::filesystem;
using namespace diggan;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "flat key = value config file");
    cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", c.seed, "master seed (overrides `seed`)");
    cmd->add_option("--out", c.out, "output directory");
}

Config resolve(const Common& c) {
    Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
    for (const auto& o : c.overrides) cfg.apply_override(o);
    if (c.seed >= 0) cfg.set("seed", std::to_string(c.seed));
    if (!c.out.empty()) cfg.set("out", c.out);
    return cfg;
}

fs::path out_dir(const Config& cfg) {
    const auto out = cfg.get_string("out", "");
    if (out.empty()) throw ConfigError("an output directory is required (--out or `out`)");
    fs::create_directories(out);
    return out;
}

fs::path require_path(const Config& cfg, const std::string& key, const std::string& flag) {
    const auto v = cfg.get_string(key, "");
    if (v.empty()) throw ConfigError("`" + key + "` is required (" + flag + ")");
    return v;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnwritablePathError("cannot write " + path.string());
    out << text;
}

// Everything needed to replay the run: command, resolved config, mode.
void write_manifest(const fs::path& dir, const std::string& command, const Config& cfg) {
    const char* det = std::getenv("DIGGAN_DETERMINISTIC");
    std::string text = "# diggan run manifest\ncommand = " + command + "\n";
    text += "deterministic = " + std::string(det && std::string(det) == "1" ? "1" : "0") + "\n";
    // The output location itself is left out so identical runs compare equal.
    Config replay = cfg;
    replay.erase("out");
    text += replay.to_text();
    write_text(dir / "run_manifest.txt", text);
}

std::uint64_t seed_of(const Config& cfg) {
    const auto s = cfg.get_int("seed", 1);
    if (s < 0) throw ConfigError("`seed` must be non-negative");
    return static_cast<std::uint64_t>(s);
}

SynthDatasetSpec synth_spec(const Config& cfg) {
    SynthDatasetSpec s;
    s.n_subjects = static_cast<int>(cfg.get_int("synth.subjects", s.n_subjects));
    if (cfg.get_string("synth.preset", "") == "fourteen") s.views_deg = fourteen_view_preset();
    s.views_deg = cfg.get_int_list("synth.views", s.views_deg);
    s.seqs_per_view = static_cast<int>(cfg.get_int("synth.seqs", s.seqs_per_view));
    s.frames_per_seq = static_cast<int>(cfg.get_int("synth.frames", s.frames_per_seq));
    s.write_silhouettes = cfg.get_bool("synth.silhouettes", s.write_silhouettes);
    s.seed = seed_of(cfg);
    return s;
}

TrainConfig train_config(const Config& cfg) {
    auto t = TrainConfig::from_config(cfg);
    t.seed = seed_of(cfg);
    return t;
}

// Test split: `split.file` if given, else every subject in the dataset.
Dataset eval_subset(const Config& cfg, const Dataset& ds) {
    const auto split = cfg.get_string("split.file", "");
    if (split.empty()) return ds;
    return subset(ds, read_split(split).test_subjects);
}

EvalOptions eval_options(const Config& cfg) {
    EvalOptions o;
    const auto d = cfg.get_string("eval.distance", "euclidean");
    if (d == "cosine") o.distance = Distance::Cosine;
    else if (d != "euclidean") throw ConfigError("`eval.distance` must be euclidean or cosine");
    o.strict = cfg.get_bool("eval.strict", false);
    return o;
}

int cmd_synth(const Config& cfg) {
    const auto out = out_dir(cfg);
    const auto ds = generate_dataset(synth_spec(cfg), out);
    write_manifest(out, "synth", cfg);
    std::cout << "wrote " << ds.records.size() << " GEIs to " << out.string() << "\n";
    return 0;
}

int cmd_gei(const Config& cfg) {
    const fs::path in = require_path(cfg, "gei.input", "--input");
    const auto out = out_dir(cfg);
    if (!fs::is_directory(in)) throw MissingDirectoryError("no silhouette directory " + in.string());
    // <in>/<subject>/<view_deg>/<seq>/ frame files
    std::vector<fs::path> seq_dirs;
    for (const auto& s : fs::directory_iterator(in)) {
        if (!s.is_directory() || s.path().filename() == "gei") continue;
        for (const auto& v : fs::directory_iterator(s.path())) {
            if (!v.is_directory()) continue;
            for (const auto& q : fs::directory_iterator(v.path()))
                if (q.is_directory()) seq_dirs.push_back(q.path());
        }
    }
    std::sort(seq_dirs.begin(), seq_dirs.end());
    if (seq_dirs.empty()) throw LayoutError("no <subject>/<view>/<seq> silhouette directories under " + in.string());
    for (const auto& dir : seq_dirs) {
        const auto gei = compute_gei(load_silhouette_sequence(dir));
        const auto rel = fs::relative(dir, in);
        auto target = out / "gei" / rel.parent_path() / (rel.filename().string() + ".pgm");
        fs::create_directories(target.parent_path());
        save_gei(target, gei);
    }
    const auto ds = scan_dataset(out);
    write_manifest(out, "gei", cfg);
    std::cout << "wrote " << ds.records.size() << " GEIs to " << out.string() << "\n";
    return 0;
}

int cmd_train(const Config& cfg) {
    const auto out = out_dir(cfg);
    const auto ds = scan_dataset(require_path(cfg, "data.root", "--data"));
    const auto tc = train_config(cfg);
    const auto split = split_train_test(ds, cfg.get_double("split.fraction", 0.5), tc.seed);
    write_split(out / "split.csv", split);
    write_manifest(out, "train", cfg);
    const auto ck = run_curriculum(tc, subset(ds, split.train_subjects), out);
    std::cout << "trained to step " << ck.global_step << "; checkpoint " << (out / "final.ckpt").string() << "\n";
    return 0;
}

int cmd_finetune(const Config& cfg) {
    const auto out = out_dir(cfg);
    const auto ds = scan_dataset(require_path(cfg, "data.root", "--data"));
    auto ck = load_checkpoint(require_path(cfg, "checkpoint", "--checkpoint"));
    // Keys not given explicitly keep the checkpoint's training values.
    Config merged = ck.config.to_config();
    for (const auto& [k, v] : cfg.values()) merged.set(k, v);
    const auto tc = train_config(merged);
    const auto split = split_train_test(ds, cfg.get_double("split.fraction", 0.5), tc.seed);
    write_split(out / "split.csv", split);
    write_manifest(out, "finetune", merged);
    std::vector<LossRow> log;
    TrainHooks hooks;
    hooks.log = &log;
    ck = fine_tune(tc, subset(ds, split.train_subjects), std::move(ck), hooks);
    write_loss_log(out / "loss_log.csv", log);
    save_checkpoint(ck, out / "final.ckpt");
    std::cout << "fine-tuned to step " << ck.global_step << "\n";
    return 0;
}

int cmd_eval(const Config& cfg, const std::string& protocol) {
    const auto out = out_dir(cfg);
    const auto ds = eval_subset(cfg, scan_dataset(require_path(cfg, "data.root", "--data")));
    const auto opts = eval_options(cfg);
    const auto seed = seed_of(cfg);
    write_manifest(out, "eval " + protocol, cfg);
    if (protocol == "dm") {
        auto r = dm_baseline(ds.records, ds.records, ds.views_deg, opts);
        write_report(r, out / "report_dm.csv", out / "summary_dm.txt");
        std::cout << report_summary(r);
        return 0;
    }
    const auto ck = load_checkpoint(require_path(cfg, "checkpoint", "--checkpoint"));
    if (ck.model.arch.n_views != ds.n_views())
        throw ArchitectureMismatchError("checkpoint has " + std::to_string(ck.model.arch.n_views) +
                                        " views, dataset has " + std::to_string(ds.n_views()));
    const auto codes = extract_embeddings(ck.model, ds.records, static_cast<int>(cfg.get_int("eval.threads", 0)));
    if (protocol == "cooperative") {
        auto r = eval_cooperative(codes, codes, ds.views_deg, opts);
        r.seed = seed;
        write_report(r, out / "report_cooperative.csv", out / "summary_cooperative.txt");
        std::cout << report_summary(r);
    } else if (protocol == "uncooperative") {
        auto r = eval_uncooperative(codes, codes, ds.views_deg, seed, opts);
        write_report(r, out / "report_uncooperative.csv", out / "summary_uncooperative.txt");
        std::cout << report_summary(r);
    } else {
        const auto sizes = cfg.get_int_list("curve.sizes", {1, 2, 4, 8, 16, 32});
        const auto trials = static_cast<int>(cfg.get_int("curve.trials", 10));
        const auto curve = gallery_size_curve(codes, codes, ds.views_deg, sizes, trials, seed, opts);
        write_text(out / "curve.csv", curve_csv(curve));
        write_curve_png(curve, out / "curve.png");
        std::cout << curve_csv(curve);
    }
    return 0;
}

int cmd_generate(const Config& cfg) {
    const auto out = out_dir(cfg);
    const auto ds = scan_dataset(require_path(cfg, "data.root", "--data"));
    const auto ck = load_checkpoint(require_path(cfg, "checkpoint", "--checkpoint"));
    const auto test = eval_subset(cfg, ds);
    if (test.records.empty()) throw EmptyDatasetError("no records to generate from");
    const bool experimental = cfg.get_bool("generate.experimental", false);

    const int subject = static_cast<int>(cfg.get_int("generate.subject", test.records.front().subject_id));
    const int view_deg = static_cast<int>(cfg.get_int("generate.view", ds.views_deg.front()));
    const int probe_seq = static_cast<int>(cfg.get_int("generate.probe_seq", 2));
    const SampleRecord* probe = nullptr;
    for (const auto& r : test.records)
        if (r.subject_id == subject && ds.views_deg[static_cast<std::size_t>(r.view_index)] == view_deg &&
            (!probe || r.seq_id == probe_seq))
            probe = &r;
    if (!probe)
        throw InvalidArgumentError("no record for subject " + std::to_string(subject) + " at view " +
                                   std::to_string(view_deg));

    std::vector<double> targets;
    for (int v : cfg.get_int_list("generate.targets", ds.views_deg)) targets.push_back(v);
    const auto grid = all_views_grid(ck.model, *probe, ds.views_deg, targets, experimental);
    write_grid(grid, out / "all_views.pgm", out / "all_views.csv");

    std::vector<SampleRecord> gallery;
    for (const auto& r : test.records)
        if (r.seq_id == 1) gallery.push_back(r);
    const auto k = static_cast<std::size_t>(cfg.get_int("generate.k", 5));
    std::vector<double> one_hot_targets(ds.views_deg.begin(), ds.views_deg.end());
    const auto cons = consistency_grid(ck.model, *probe, gallery, k, ds.views_deg, one_hot_targets, eval_options(cfg).distance);
    write_grid(cons.grid, out / "consistency.pgm", out / "consistency.csv");
    std::string ranks = "rank,subject\n";
    for (std::size_t i = 0; i < cons.ranked_subjects.size(); ++i)
        ranks += std::to_string(i + 1) + "," + std::to_string(cons.ranked_subjects[i]) + "\n";
    write_text(out / "consistency_ranks.csv", ranks);
    write_manifest(out, "generate", cfg);
    std::cout << "wrote evidence grids to " << out.string() << "\n";
    return 0;
}

// Renders report CSVs in a directory as aligned text tables, and curve
// CSVs as PNG plots.
int cmd_report(const Config& cfg) {
    const fs::path in = require_path(cfg, "report.input", "--input");
    const auto out = out_dir(cfg);
    if (!fs::is_directory(in)) throw MissingDirectoryError("no report directory " + in.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int rendered = 0;
    for (const auto& f : files) {
        std::ifstream is(f);
        std::string line, header;
        while (std::getline(is, line) && !line.empty() && line[0] == '#') {}
        header = line;
        if (header == "protocol,seed,gallery_view,probe_view,rank1_pct") {
            std::map<std::string, std::map<int, std::string>> cells;
            std::vector<std::string> rows;
            std::set<int> cols;
            while (std::getline(is, line)) {
                std::stringstream ss(line);
                std::string proto, seed, g, p, v;
                if (!std::getline(ss, proto, ',') || !std::getline(ss, seed, ',') || !std::getline(ss, g, ',') ||
                    !std::getline(ss, p, ',') || !std::getline(ss, v, ','))
                    throw LayoutError("malformed report row in " + f.string() + ": " + line);
                if (!cells.count(g)) rows.push_back(g);
                cells[g][std::stoi(p)] = v;
                cols.insert(std::stoi(p));
            }
            std::ostringstream t;
            t << "gallery\\probe";
            for (int c : cols) t << '\t' << c;
            t << '\n';
            for (const auto& r : rows) {
                t << r;
                for (int c : cols) t << '\t' << (cells[r].count(c) ? cells[r][c] : "-");
                t << '\n';
            }
            write_text(out / (f.stem().string() + ".txt"), t.str());
            ++rendered;
        } else if (header == "gallery_size,mean_rank1_pct,std_rank1_pct") {
            std::vector<CurvePoint> curve;
            while (std::getline(is, line)) {
                std::stringstream ss(line);
                std::string a, b, c;
                std::getline(ss, a, ',');
                std::getline(ss, b, ',');
                std::getline(ss, c, ',');
                curve.push_back({std::stoi(a), std::stod(b), std::stod(c)});
            }
            write_curve_png(curve, out / (f.stem().string() + ".png"));
            ++rendered;
        }
    }
    write_manifest(out, "report", cfg);
    std::cout << "rendered " << rendered << " reports\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-view gait identification: data synthesis, GEI extraction, training, evaluation"};
    app.require_subcommand(1);

    Common common;
    std::string data, checkpoint, split, input;

    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-view gait dataset");
    add_common(synth, common);

    auto* gei = app.add_subcommand("gei", "convert silhouette sequences to GEIs");
    add_common(gei, common);
    gei->add_option("--input", input, "silhouette root (<subject>/<view>/<seq>/frames)");

    auto* train = app.add_subcommand("train", "run the staged training curriculum");
    add_common(train, common);
    train->add_option("--data", data, "dataset root");

    auto* finetune = app.add_subcommand("finetune", "continue training a checkpoint on another dataset");
    add_common(finetune, common);
    finetune->add_option("--data", data, "dataset root");
    finetune->add_option("--checkpoint", checkpoint, "checkpoint to start from");

    auto* eval = app.add_subcommand("eval", "rank-1 evaluation");
    eval->require_subcommand(1);
    std::vector<std::pair<std::string, CLI::App*>> protocols;
    for (const char* p : {"cooperative", "uncooperative", "curve", "dm"}) {
        auto* sub = eval->add_subcommand(p, std::string(p) + " protocol");
        add_common(sub, common);
        sub->add_option("--data", data, "dataset root");
        sub->add_option("--checkpoint", checkpoint, "trained checkpoint");
        sub->add_option("--split", split, "split CSV; only its test subjects are evaluated");
        protocols.emplace_back(p, sub);
    }

    auto* generate = app.add_subcommand("generate", "evidence grids: all views and retrieval consistency");
    add_common(generate, common);
    generate->add_option("--data", data, "dataset root");
    generate->add_option("--checkpoint", checkpoint, "trained checkpoint");
    generate->add_option("--split", split, "split CSV; probes and gallery come from its test subjects");

    auto* report = app.add_subcommand("report", "render report CSVs to tables and plots");
    add_common(report, common);
    report->add_option("--input", input, "directory of report CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        Config cfg = resolve(common);
        if (!data.empty()) cfg.set("data.root", data);
        if (!checkpoint.empty()) cfg.set("checkpoint", checkpoint);
        if (!split.empty()) cfg.set("split.file", split);
        if (!input.empty()) cfg.set(*synth ? "synth.input" : (*gei ? "gei.input" : "report.input"), input);

        if (*synth) return cmd_synth(cfg);
        if (*gei) return cmd_gei(cfg);
        if (*train) return cmd_train(cfg);
        if (*finetune) return cmd_finetune(cfg);
        if (*generate) return cmd_generate(cfg);
        if (*report) return cmd_report(cfg);
        for (const auto& [name, sub] : protocols)
            if (*sub) return cmd_eval(cfg, name);
        std::cerr << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error [RuntimeError]: " << e.what() << "\n";
        return kExitRuntime;
    }
}

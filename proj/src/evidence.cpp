#include "diggan/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "diggan/errors.hpp"

namespace diggan {

namespace {

std::string deg_label(double deg) {
    if (deg == std::floor(deg)) return std::to_string(static_cast<long long>(deg));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", deg);
    return buf;
}

std::vector<Image> generate_from_code(const ModelParams& m, const Code& code, const std::vector<int>& views_deg,
                                      const std::vector<double>& targets, bool experimental) {
    std::vector<Code> codes;
    std::vector<ViewVector> vs;
    for (double t : targets) {
        codes.push_back(code);
        vs.push_back(view_vector_for(views_deg, t, experimental));
    }
    return generate(m, codes, vs);
}

}  // namespace

ViewVector view_vector_for(const std::vector<int>& views_deg, double target_deg, bool experimental) {
    ViewVector v(views_deg.size(), 0.0);
    for (std::size_t i = 0; i < views_deg.size(); ++i)
        if (static_cast<double>(views_deg[i]) == target_deg) {
            v[i] = 1.0;
            return v;
        }
    if (!experimental) throw UnknownViewError("view " + deg_label(target_deg) + " is not one of the trained views");
    // Nearest declared views below and above the target.
    std::ptrdiff_t lo = -1, hi = -1;
    for (std::size_t i = 0; i < views_deg.size(); ++i) {
        const double d = views_deg[i];
        if (d < target_deg && (lo < 0 || d > views_deg[static_cast<std::size_t>(lo)])) lo = static_cast<std::ptrdiff_t>(i);
        if (d > target_deg && (hi < 0 || d < views_deg[static_cast<std::size_t>(hi)])) hi = static_cast<std::ptrdiff_t>(i);
    }
    if (lo < 0 || hi < 0)
        throw UnknownViewError("view " + deg_label(target_deg) + " lies outside the trained view range");
    const double a = views_deg[static_cast<std::size_t>(lo)], b = views_deg[static_cast<std::size_t>(hi)];
    const double t = (target_deg - a) / (b - a);
    v[static_cast<std::size_t>(lo)] = 1.0 - t;
    v[static_cast<std::size_t>(hi)] = t;
    return v;
}

std::vector<GeiImage> generate_all_views(const ModelParams& m, const GeiImage& probe, const std::vector<int>& views_deg,
                                         const std::vector<double>& targets_deg, bool experimental) {
    if (targets_deg.empty()) return {};
    const Image* p = &probe.pixels;
    const auto code = encode(m, std::span<const Image* const>(&p, 1)).front();
    auto imgs = generate_from_code(m, code, views_deg, targets_deg, experimental);
    std::vector<GeiImage> out;
    for (std::size_t i = 0; i < imgs.size(); ++i)
        out.push_back({std::move(imgs[i]), probe.meta + "@" + deg_label(targets_deg[i])});
    return out;
}

GeiImage generate_view(const ModelParams& m, const GeiImage& probe, const std::vector<int>& views_deg,
                       double target_deg, bool experimental) {
    return generate_all_views(m, probe, views_deg, {target_deg}, experimental).front();
}

std::string grid_sidecar_csv(const EvidenceGrid& g) {
    std::string out;
    if (g.experimental) out += "# experimental: interpolated view vectors\n";
    out += "row,column,subject,view,kind\n";
    for (const auto& t : g.tiles)
        out += std::to_string(t.row) + "," + std::to_string(t.column) + "," + std::to_string(t.subject) + "," + t.view +
               "," + t.kind + "\n";
    return out;
}

void write_grid(const EvidenceGrid& g, const std::filesystem::path& pgm_path, const std::filesystem::path& csv_path) {
    if (pgm_path.has_parent_path()) std::filesystem::create_directories(pgm_path.parent_path());
    write_pgm(pgm_path, quantize(g.image));
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw UnwritablePathError("cannot write " + csv_path.string());
    out << grid_sidecar_csv(g);
}

EvidenceGrid all_views_grid(const ModelParams& m, const SampleRecord& probe, const std::vector<int>& views_deg,
                            const std::vector<double>& targets_deg, bool experimental) {
    const auto gen = generate_all_views(m, probe.gei, views_deg, targets_deg, experimental);
    EvidenceGrid g;
    g.rows = 1;
    g.columns = static_cast<int>(gen.size()) + 1;
    g.experimental = experimental;
    std::vector<const Image*> tiles{&probe.gei.pixels};
    g.tiles.push_back({0, 0, probe.subject_id, deg_label(views_deg.at(static_cast<std::size_t>(probe.view_index))),
                       "ground-truth"});
    for (std::size_t i = 0; i < gen.size(); ++i) {
        tiles.push_back(&gen[i].pixels);
        g.tiles.push_back({0, static_cast<int>(i) + 1, probe.subject_id, deg_label(targets_deg[i]), "generated"});
    }
    g.image = tile_images(tiles, g.rows, g.columns);
    return g;
}

ConsistencyResult consistency_grid(const ModelParams& m, const SampleRecord& probe,
                                   const std::vector<SampleRecord>& gallery, std::size_t k,
                                   const std::vector<int>& views_deg, const std::vector<double>& targets_deg,
                                   Distance d) {
    if (gallery.empty()) throw EmptyDatasetError("consistency_grid: empty gallery");
    std::set<int> subjects;
    for (const auto& r : gallery) subjects.insert(r.subject_id);
    if (k > subjects.size())
        throw InvalidArgumentError("consistency_grid: k = " + std::to_string(k) + " exceeds the " +
                                   std::to_string(subjects.size()) + " gallery subjects");

    const auto gallery_codes = extract_embeddings(m, gallery);
    const Image* p = &probe.gei.pixels;
    const auto probe_code = encode(m, std::span<const Image* const>(&p, 1)).front();

    ConsistencyResult res;
    res.ranked_subjects = rank_k_identify(gallery_codes, probe_code, k, d);

    std::vector<const SampleRecord*> row_records{&probe};
    std::vector<Code> row_codes{probe_code};
    for (int s : res.ranked_subjects) {
        // The subject's gallery record closest to the probe.
        std::size_t best = gallery.size();
        double best_d = 0;
        for (std::size_t i = 0; i < gallery.size(); ++i) {
            if (gallery[i].subject_id != s) continue;
            const double dist = code_distance(gallery_codes[i].code, probe_code, d);
            if (best == gallery.size() || dist < best_d) {
                best = i;
                best_d = dist;
            }
        }
        row_records.push_back(&gallery[best]);
        row_codes.push_back(gallery_codes[best].code);
    }

    auto& g = res.grid;
    g.rows = static_cast<int>(row_records.size());
    g.columns = static_cast<int>(targets_deg.size()) + 1;
    std::vector<const Image*> tiles;
    for (std::size_t r = 0; r < row_records.size(); ++r) {
        const auto* rec = row_records[r];
        res.generated.push_back(generate_from_code(m, row_codes[r], views_deg, targets_deg, false));
        g.tiles.push_back({static_cast<int>(r), 0, rec->subject_id,
                           deg_label(views_deg.at(static_cast<std::size_t>(rec->view_index))), "ground-truth"});
        for (std::size_t c = 0; c < targets_deg.size(); ++c)
            g.tiles.push_back({static_cast<int>(r), static_cast<int>(c) + 1, rec->subject_id, deg_label(targets_deg[c]),
                               "generated"});
    }
    for (std::size_t r = 0; r < row_records.size(); ++r) {
        tiles.push_back(&row_records[r]->gei.pixels);
        for (const auto& img : res.generated[r]) tiles.push_back(&img);
    }
    g.image = tile_images(tiles, g.rows, g.columns);
    return res;
}

}  // namespace diggan

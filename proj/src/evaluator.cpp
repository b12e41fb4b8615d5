#include "diggan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <thread>
#include <tuple>

#include "diggan/errors.hpp"

namespace diggan {

namespace {

constexpr std::size_t kEncodeChunk = 16;

bool deterministic_mode() {
    const char* v = std::getenv("DIGGAN_DETERMINISTIC");
    return v && std::string(v) == "1";
}

std::string pct(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::set<int> subjects_of(const EmbeddingSet& s, int seq) {
    std::set<int> out;
    for (const auto& e : s)
        if (e.seq_id == seq) out.insert(e.subject_id);
    return out;
}

// Percentage of probes whose rank-1 subject is correct; NaN if none scored.
double score(const EmbeddingSet& gallery, const std::vector<const Embedding*>& probes, Distance d) {
    if (probes.empty() || gallery.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hits = 0;
    for (const auto* p : probes) hits += rank_k_identify(gallery, p->code, 1, d).front() == p->subject_id ? 1 : 0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(probes.size());
}

void note_missing(EvalReport& r, std::set<std::string>& seen, const std::string& msg) {
    if (r.options.strict) throw CoverageError(msg);
    if (seen.insert(msg).second) r.warnings.push_back(msg);
}

}  // namespace

void validate(const EmbeddingSet& set) {
    if (set.empty()) return;
    const auto k = set.front().code.size();
    for (const auto& e : set) {
        if (e.code.size() != k) throw DimensionMismatchError("embedding codes differ in length");
        for (double v : e.code)
            if (!std::isfinite(v)) throw NonFiniteError("embedding of subject " + std::to_string(e.subject_id) + " is not finite");
    }
}

EmbeddingSet extract_embeddings(const ModelParams& m, const std::vector<const SampleRecord*>& records, int threads) {
    EmbeddingSet out(records.size());
    const std::size_t chunks = (records.size() + kEncodeChunk - 1) / kEncodeChunk;
    auto work = [&](std::size_t first_chunk, std::size_t stride) {
        for (std::size_t c = first_chunk; c < chunks; c += stride) {
            const std::size_t lo = c * kEncodeChunk, hi = std::min(records.size(), lo + kEncodeChunk);
            std::vector<const Image*> imgs;
            for (std::size_t i = lo; i < hi; ++i) imgs.push_back(&records[i]->gei.pixels);
            auto codes = encode(m, imgs);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto* r = records[i];
                out[i] = {r->subject_id, r->view_index, r->seq_id, std::move(codes[i - lo])};
            }
        }
    };
    std::size_t n = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
    if (deterministic_mode()) n = 1;
    n = std::min(n, std::max<std::size_t>(chunks, 1));
    if (n <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work, t, n);
        for (auto& t : pool) t.join();
    }
    validate(out);
    return out;
}

EmbeddingSet extract_embeddings(const ModelParams& m, const std::vector<SampleRecord>& records, int threads) {
    std::vector<const SampleRecord*> ptrs;
    for (const auto& r : records) ptrs.push_back(&r);
    return extract_embeddings(m, ptrs, threads);
}

EmbeddingSet pixel_embeddings(const std::vector<SampleRecord>& records) {
    EmbeddingSet out;
    for (const auto& r : records) out.push_back({r.subject_id, r.view_index, r.seq_id, r.gei.pixels.data});
    validate(out);
    return out;
}

double code_distance(const Code& a, const Code& b, Distance d) {
    if (a.size() != b.size()) throw DimensionMismatchError("codes differ in length");
    if (d == Distance::Euclidean) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 1.0;
    return 1.0 - dot / std::sqrt(na * nb);
}

std::vector<int> rank_k_identify(const EmbeddingSet& gallery, const Code& probe, std::size_t k, Distance d) {
    if (gallery.empty()) throw EmptyDatasetError("rank_k_identify: empty gallery");
    std::vector<std::tuple<double, int, int>> order;
    order.reserve(gallery.size());
    for (const auto& g : gallery) order.emplace_back(code_distance(g.code, probe, d), g.subject_id, g.seq_id);
    std::sort(order.begin(), order.end());
    std::vector<int> out;
    for (const auto& [dist, subject, seq] : order) {
        if (out.size() >= k) break;
        if (std::find(out.begin(), out.end(), subject) == out.end()) out.push_back(subject);
    }
    return out;
}

void EvalReport::compute_means() {
    const bool view_rows = protocol != "uncooperative" && rank1.size() == views_deg.size();
    const std::size_t np = views_deg.size();
    probe_means.assign(np, 0.0);
    probe_means_cross_view.assign(np, 0.0);
    double sum = 0, sum_x = 0;
    std::size_t n = 0, n_x = 0;
    for (std::size_t p = 0; p < np; ++p) {
        double s = 0, sx = 0;
        std::size_t c = 0, cx = 0;
        for (std::size_t g = 0; g < rank1.size(); ++g) {
            const double v = rank1[g][p];
            if (std::isnan(v)) continue;
            s += v;
            ++c;
            if (!(view_rows && g == p)) {
                sx += v;
                ++cx;
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        probe_means[p] = c ? s / static_cast<double>(c) : nan;
        probe_means_cross_view[p] = cx ? sx / static_cast<double>(cx) : nan;
        sum += s;
        n += c;
        sum_x += sx;
        n_x += cx;
    }
    mean = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    cross_view_mean = n_x ? sum_x / static_cast<double>(n_x) : std::numeric_limits<double>::quiet_NaN();
}

EvalReport eval_cooperative(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                            const std::vector<int>& views_deg, const EvalOptions& opts) {
    validate(gallery_set);
    validate(probe_set);
    EvalReport r;
    r.protocol = "cooperative";
    r.views_deg = views_deg;
    r.options = opts;
    const int nv = static_cast<int>(views_deg.size());
    auto everyone = subjects_of(gallery_set, opts.gallery_seq);
    for (int s : subjects_of(probe_set, opts.probe_seq)) everyone.insert(s);
    if (everyone.empty()) throw EmptyDatasetError("eval_cooperative: no gallery or probe codes");

    std::set<std::string> seen;
    for (int g = 0; g < nv; ++g) {
        EmbeddingSet gallery;
        std::set<int> present;
        for (const auto& e : gallery_set)
            if (e.seq_id == opts.gallery_seq && e.view_index == g) {
                gallery.push_back(e);
                present.insert(e.subject_id);
            }
        for (int s : everyone)
            if (!present.count(s))
                note_missing(r, seen, "subject " + std::to_string(s) + " has no gallery code at view " +
                                          std::to_string(views_deg[g]));
        r.gallery_labels.push_back(std::to_string(views_deg[g]));
        std::vector<double> row;
        for (int p = 0; p < nv; ++p) {
            std::vector<const Embedding*> probes;
            std::set<int> probed;
            for (const auto& e : probe_set)
                if (e.seq_id == opts.probe_seq && e.view_index == p) {
                    probed.insert(e.subject_id);
                    if (present.count(e.subject_id)) probes.push_back(&e);
                }
            for (int s : everyone)
                if (!probed.count(s))
                    note_missing(r, seen, "subject " + std::to_string(s) + " has no probe code at view " +
                                              std::to_string(views_deg[p]));
            row.push_back(score(gallery, probes, opts.distance));
        }
        r.rank1.push_back(row);
    }
    r.compute_means();
    return r;
}

std::map<int, int> draw_gallery_views(const EmbeddingSet& gallery_set, std::uint64_t seed, int gallery_seq) {
    std::map<int, std::set<int>> views;
    for (const auto& e : gallery_set)
        if (e.seq_id == gallery_seq) views[e.subject_id].insert(e.view_index);
    Rng rng = Rng::derive(seed, {0x0C0});
    std::map<int, int> out;
    for (const auto& [subject, vs] : views) {
        const std::vector<int> list(vs.begin(), vs.end());
        out[subject] = list[rng.index(list.size())];
    }
    return out;
}

EvalReport eval_uncooperative(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                              const std::vector<int>& views_deg, std::uint64_t seed, const EvalOptions& opts) {
    validate(gallery_set);
    validate(probe_set);
    EvalReport r;
    r.protocol = "uncooperative";
    r.seed = seed;
    r.views_deg = views_deg;
    r.options = opts;
    r.gallery_draws = draw_gallery_views(gallery_set, seed, opts.gallery_seq);
    for (int s : subjects_of(probe_set, opts.probe_seq))
        if (!r.gallery_draws.count(s))
            throw CoverageError("subject " + std::to_string(s) + " has no gallery code at any view");
    if (r.gallery_draws.empty()) throw EmptyDatasetError("eval_uncooperative: empty gallery");

    EmbeddingSet gallery;
    for (const auto& e : gallery_set) {
        const auto it = r.gallery_draws.find(e.subject_id);
        if (e.seq_id == opts.gallery_seq && it != r.gallery_draws.end() && it->second == e.view_index)
            gallery.push_back(e);
    }
    r.gallery_labels = {"mixed"};
    std::vector<double> row;
    std::set<std::string> seen;
    for (int p = 0; p < static_cast<int>(views_deg.size()); ++p) {
        std::vector<const Embedding*> probes;
        for (const auto& e : probe_set)
            if (e.seq_id == opts.probe_seq && e.view_index == p) probes.push_back(&e);
        if (probes.empty())
            note_missing(r, seen, "no probe codes at view " + std::to_string(views_deg[p]));
        row.push_back(score(gallery, probes, opts.distance));
    }
    r.rank1.push_back(row);
    r.compute_means();
    return r;
}

std::vector<CurvePoint> gallery_size_curve(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                                           const std::vector<int>& views_deg, const std::vector<int>& sizes,
                                           int trials, std::uint64_t seed, const EvalOptions& opts) {
    if (trials < 1) throw InvalidArgumentError("gallery_size_curve: trials must be positive");
    auto all = subjects_of(gallery_set, opts.gallery_seq);
    for (int s : subjects_of(probe_set, opts.probe_seq)) all.insert(s);
    const std::vector<int> population(all.begin(), all.end());
    std::vector<CurvePoint> out;
    for (int size : sizes) {
        if (size < 1 || static_cast<std::size_t>(size) > population.size())
            throw InvalidArgumentError("gallery size " + std::to_string(size) + " outside [1, " +
                                       std::to_string(population.size()) + "]");
        std::vector<double> means;
        for (int t = 0; t < trials; ++t) {
            auto pick = population;
            Rng rng = Rng::derive(seed, {0xC0, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(t)});
            rng.shuffle(pick.begin(), pick.end());
            const std::set<int> chosen(pick.begin(), pick.begin() + size);
            EmbeddingSet g, p;
            for (const auto& e : gallery_set)
                if (chosen.count(e.subject_id)) g.push_back(e);
            for (const auto& e : probe_set)
                if (chosen.count(e.subject_id)) p.push_back(e);
            EvalOptions o = opts;
            o.strict = false;
            means.push_back(eval_cooperative(g, p, views_deg, o).mean);
        }
        double mean = 0, var = 0;
        for (double m : means) mean += m;
        mean /= static_cast<double>(means.size());
        for (double m : means) var += (m - mean) * (m - mean);
        out.push_back({size, mean, std::sqrt(var / static_cast<double>(means.size()))});
    }
    return out;
}

EvalReport dm_baseline(const std::vector<SampleRecord>& gallery_records, const std::vector<SampleRecord>& probe_records,
                       const std::vector<int>& views_deg, const EvalOptions& opts) {
    auto r = eval_cooperative(pixel_embeddings(gallery_records), pixel_embeddings(probe_records), views_deg, opts);
    r.protocol = "dm";
    return r;
}

std::string report_csv(const EvalReport& r) {
    std::string out = "# gallery_seq=" + std::to_string(r.options.gallery_seq) +
                      " probe_seq=" + std::to_string(r.options.probe_seq) +
                      " distance=" + (r.options.distance == Distance::Euclidean ? "euclidean" : "cosine") + "\n";
    out += "protocol,seed,gallery_view,probe_view,rank1_pct\n";
    for (std::size_t g = 0; g < r.rank1.size(); ++g)
        for (std::size_t p = 0; p < r.rank1[g].size(); ++p)
            out += r.protocol + "," + std::to_string(r.seed) + "," + r.gallery_labels[g] + "," +
                   std::to_string(r.views_deg[p]) + "," + pct(r.rank1[g][p]) + "\n";
    return out;
}

std::string report_summary(const EvalReport& r) {
    std::string out;
    out += "protocol = " + r.protocol + "\n";
    out += "seed = " + std::to_string(r.seed) + "\n";
    out += "gallery_seq = " + std::to_string(r.options.gallery_seq) + "\n";
    out += "probe_seq = " + std::to_string(r.options.probe_seq) + "\n";
    out += "mean = " + pct(r.mean) + "\n";
    out += "cross_view_mean = " + pct(r.cross_view_mean) + "\n";
    for (std::size_t p = 0; p < r.views_deg.size(); ++p) {
        out += "probe_mean." + std::to_string(r.views_deg[p]) + " = " + pct(r.probe_means[p]) + "\n";
        out += "probe_mean_cross_view." + std::to_string(r.views_deg[p]) + " = " + pct(r.probe_means_cross_view[p]) + "\n";
    }
    for (const auto& [s, v] : r.gallery_draws)
        out += "gallery_draw." + std::to_string(s) + " = " + std::to_string(r.views_deg[static_cast<std::size_t>(v)]) + "\n";
    out += "warnings = " + std::to_string(r.warnings.size()) + "\n";
    for (std::size_t i = 0; i < r.warnings.size(); ++i) out += "warning." + std::to_string(i) + " = " + r.warnings[i] + "\n";
    return out;
}

void write_report(const EvalReport& r, const std::filesystem::path& csv_path, const std::filesystem::path& summary_path) {
    for (const auto& [path, text] : {std::pair{csv_path, report_csv(r)}, std::pair{summary_path, report_summary(r)}}) {
        if (path.empty()) continue;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw UnwritablePathError("cannot write " + path.string());
        out << text;
    }
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "gallery_size,mean_rank1_pct,std_rank1_pct\n";
    for (const auto& c : curve) out += std::to_string(c.size) + "," + pct(c.mean) + "," + pct(c.stddev) + "\n";
    return out;
}

}  // namespace diggan

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diggan/dataset.hpp"
#include "diggan/network.hpp"

namespace diggan {

struct Embedding {
    int subject_id = 0;
    int view_index = 0;
    int seq_id = 0;
    Code code;
};

using EmbeddingSet = std::vector<Embedding>;

enum class Distance { Euclidean, Cosine };

// Checks uniform code length and finite values.
void validate(const EmbeddingSet& set);

// One code per record, in record order. Work is split into fixed-size
// chunks, so the result does not depend on `threads`; threads <= 0 picks the
// hardware concurrency, and DIGGAN_DETERMINISTIC=1 forces a single thread.
EmbeddingSet extract_embeddings(const ModelParams& m, const std::vector<const SampleRecord*>& records, int threads = 1);
EmbeddingSet extract_embeddings(const ModelParams& m, const std::vector<SampleRecord>& records, int threads = 1);
// Raw flattened pixels as codes (for the direct-matching baseline).
EmbeddingSet pixel_embeddings(const std::vector<SampleRecord>& records);

double code_distance(const Code& a, const Code& b, Distance d);

// Subjects of the nearest gallery codes, deduplicated in rank order, at most k.
// Ties are broken by (distance, subject_id, seq_id).
std::vector<int> rank_k_identify(const EmbeddingSet& gallery, const Code& probe, std::size_t k,
                                 Distance d = Distance::Euclidean);

struct EvalOptions {
    Distance distance = Distance::Euclidean;
    bool strict = false;  // missing coverage throws instead of being skipped
    int gallery_seq = 1;
    int probe_seq = 2;
};

struct EvalReport {
    std::string protocol;  // cooperative, uncooperative, dm
    std::uint64_t seed = 0;
    std::vector<int> views_deg;
    std::vector<std::string> gallery_labels;  // row labels: view degrees, or "mixed"
    // rank1[g][p] in percent; NaN where no probe could be scored.
    std::vector<std::vector<double>> rank1;
    std::vector<double> probe_means;              // per probe view, over all gallery rows
    std::vector<double> probe_means_cross_view;   // per probe view, identical view excluded
    double mean = 0;                              // over every scored cell
    double cross_view_mean = 0;                   // identical-view cells excluded
    std::map<int, int> gallery_draws;             // uncooperative: subject -> view index
    std::vector<std::string> warnings;
    EvalOptions options;

    // Recomputes every mean from `rank1`.
    void compute_means();
};

// Gallery rows are views: gallery = gallery_seq codes at view g, probes =
// probe_seq codes at view p. Both sets may be the same EmbeddingSet.
EvalReport eval_cooperative(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                            const std::vector<int>& views_deg, const EvalOptions& opts = {});

// One gallery row labelled "mixed": each subject's gallery view is drawn
// uniformly (seeded) from the views it has.
EvalReport eval_uncooperative(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                              const std::vector<int>& views_deg, std::uint64_t seed, const EvalOptions& opts = {});

// The per-subject draws used by eval_uncooperative.
std::map<int, int> draw_gallery_views(const EmbeddingSet& gallery_set, std::uint64_t seed, int gallery_seq = 1);

struct CurvePoint {
    int size = 0;
    double mean = 0;
    double stddev = 0;
};

// For each size, `trials` random subject subsets evaluated cooperatively;
// the statistic is the report's full-matrix mean.
std::vector<CurvePoint> gallery_size_curve(const EmbeddingSet& gallery_set, const EmbeddingSet& probe_set,
                                           const std::vector<int>& views_deg, const std::vector<int>& sizes,
                                           int trials, std::uint64_t seed, const EvalOptions& opts = {});

EvalReport dm_baseline(const std::vector<SampleRecord>& gallery_records, const std::vector<SampleRecord>& probe_records,
                       const std::vector<int>& views_deg, const EvalOptions& opts = {});

// `protocol,seed,gallery_view,probe_view,rank1_pct`, preceded by one
// `#` line naming the gallery/probe sequence assignment.
std::string report_csv(const EvalReport& r);
std::string report_summary(const EvalReport& r);
void write_report(const EvalReport& r, const std::filesystem::path& csv_path, const std::filesystem::path& summary_path);
std::string curve_csv(const std::vector<CurvePoint>& curve);
// Line plot of mean rank-1 against gallery size with +-1 std bars.
void write_curve_png(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

}  // namespace diggan

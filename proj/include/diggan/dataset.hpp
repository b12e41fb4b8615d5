#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "diggan/image.hpp"
#include "diggan/rng.hpp"

namespace diggan {

// One GEI of subject `subject_id` seen from view `view_index`.
struct SampleRecord {
    int subject_id = 0;
    int view_index = 0;
    int seq_id = 0;
    GeiImage gei;
};

// Records plus the angle list that `view_index` refers to.
struct Dataset {
    std::vector<int> views_deg;
    std::vector<SampleRecord> records;

    int n_views() const { return static_cast<int>(views_deg.size()); }
    std::vector<int> subjects() const;
    int view_index_of(int deg) const;  // -1 if absent
};

struct SplitSpec {
    std::set<int> train_subjects;
    std::set<int> test_subjects;
    std::uint64_t seed = 0;
};

struct PairSample {
    const SampleRecord* source = nullptr;  // x_i^p
    const SampleRecord* target = nullptr;  // x_i^k
    int target_view = 0;                   // k
};

struct TripletSample {
    const SampleRecord* anchor = nullptr;
    const SampleRecord* positive = nullptr;
    const SampleRecord* negative = nullptr;
};

struct AnglePretrainSample {
    const SampleRecord* record = nullptr;
    int label_view = 0;
    bool truth = false;
};

enum class PairMode {
    CrossView,  // target has a different view than the source
    Identity,   // target is the source itself
};

// Reads `<root>/manifest.csv` if present, otherwise walks
// `<root>/gei/<subject>/<view_deg>/<seq>.pgm`. Records are sorted by
// (subject, view, seq).
Dataset scan_dataset(const std::filesystem::path& root);

void write_manifest(const std::filesystem::path& path, const Dataset& ds, const std::filesystem::path& root);

SplitSpec split_train_test(const Dataset& ds, double train_fraction, std::uint64_t seed);

void write_split(const std::filesystem::path& path, const SplitSpec& split);
SplitSpec read_split(const std::filesystem::path& path);

// Restriction of a dataset to a subject set (shares the view list).
Dataset subset(const Dataset& ds, const std::set<int>& subjects);

std::vector<float> one_hot(int index, int n_views);

// Samplers. Records are drawn uniformly with replacement.
class BatchSampler {
public:
    explicit BatchSampler(const Dataset& ds);

    std::vector<PairSample> pair_batch(std::size_t batch_size, Rng& rng, PairMode mode) const;
    std::vector<TripletSample> triplet_batch(std::size_t batch_size, Rng& rng) const;
    std::vector<AnglePretrainSample> angle_pretrain_batch(std::size_t n, Rng& rng) const;

    const Dataset& dataset() const { return *ds_; }

private:
    const Dataset* ds_;
    std::vector<int> subjects_;
    // Per subject: record indices, and record indices grouped by view.
    std::vector<std::vector<std::size_t>> by_subject_;
    std::map<int, std::size_t> slot_;  // subject id -> index into subjects_
};

// Free-function forms of the samplers (build a BatchSampler per call).
std::vector<PairSample> sample_pair_batch(const Dataset& ds, std::size_t batch_size, Rng& rng,
                                          PairMode mode = PairMode::CrossView);
std::vector<TripletSample> sample_triplet_batch(const Dataset& ds, std::size_t batch_size, Rng& rng);
std::vector<AnglePretrainSample> make_angle_pretrain_batch(const Dataset& ds, std::size_t n, Rng& rng);

}  // namespace diggan

#include "diggan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "diggan/errors.hpp"

namespace fs = std::filesystem;

namespace diggan {

namespace {

int parse_field(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw LayoutError("expected an integer in " + context + ", got '" + s + "'");
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

struct RawEntry {
    int subject, view_deg, seq;
    fs::path path;
};

Dataset build(std::vector<RawEntry> entries) {
    if (entries.empty()) throw EmptyDatasetError("dataset contains no GEIs");
    std::set<int> views;
    for (const auto& e : entries) views.insert(e.view_deg);
    Dataset ds;
    ds.views_deg.assign(views.begin(), views.end());
    std::sort(entries.begin(), entries.end(), [](const RawEntry& a, const RawEntry& b) {
        return std::tie(a.subject, a.view_deg, a.seq) < std::tie(b.subject, b.view_deg, b.seq);
    });
    ds.records.reserve(entries.size());
    for (const auto& e : entries) {
        SampleRecord r;
        r.subject_id = e.subject;
        r.view_index = ds.view_index_of(e.view_deg);
        r.seq_id = e.seq;
        r.gei = load_gei(e.path);
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::vector<RawEntry> read_manifest(const fs::path& root) {
    std::ifstream in(root / "manifest.csv");
    std::string line;
    if (!std::getline(in, line)) throw LayoutError("empty manifest in " + root.string());
    const auto header = split_csv(line);
    if (header != std::vector<std::string>{"subject_id", "view_deg", "seq_id", "gei_path"})
        throw LayoutError("unexpected manifest header: " + line);
    std::vector<RawEntry> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        const std::string ctx = "manifest line " + std::to_string(lineno);
        if (f.size() != 4) throw LayoutError(ctx + " has " + std::to_string(f.size()) + " fields");
        fs::path p = f[3];
        if (p.is_relative()) p = root / p;
        out.push_back({parse_field(f[0], ctx), parse_field(f[1], ctx), parse_field(f[2], ctx), p});
    }
    return out;
}

std::vector<RawEntry> walk_layout(const fs::path& gei_root) {
    std::vector<RawEntry> out;
    for (const auto& subj : fs::directory_iterator(gei_root)) {
        if (!subj.is_directory()) throw LayoutError("unexpected file " + subj.path().string());
        const int sid = parse_field(subj.path().filename().string(), subj.path().string());
        for (const auto& view : fs::directory_iterator(subj.path())) {
            if (!view.is_directory()) throw LayoutError("unexpected file " + view.path().string());
            const int deg = parse_field(view.path().filename().string(), view.path().string());
            for (const auto& seq : fs::directory_iterator(view.path())) {
                if (seq.path().extension() != ".pgm") throw LayoutError("unexpected file " + seq.path().string());
                out.push_back({sid, deg, parse_field(seq.path().stem().string(), seq.path().string()), seq.path()});
            }
        }
    }
    return out;
}

}  // namespace

std::vector<int> Dataset::subjects() const {
    std::set<int> s;
    for (const auto& r : records) s.insert(r.subject_id);
    return {s.begin(), s.end()};
}

int Dataset::view_index_of(int deg) const {
    auto it = std::find(views_deg.begin(), views_deg.end(), deg);
    return it == views_deg.end() ? -1 : static_cast<int>(it - views_deg.begin());
}

Dataset scan_dataset(const fs::path& root) {
    if (fs::is_regular_file(root / "manifest.csv")) return build(read_manifest(root));
    if (fs::is_directory(root / "gei")) return build(walk_layout(root / "gei"));
    throw LayoutError(root.string() + " has neither manifest.csv nor a gei/ directory");
}

void write_manifest(const fs::path& path, const Dataset& ds, const fs::path& root) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UnwritablePathError("cannot write " + path.string());
    out << "subject_id,view_deg,seq_id,gei_path\n";
    for (const auto& r : ds.records) {
        fs::path p = r.gei.meta;
        if (!root.empty() && p.is_absolute()) p = p.lexically_relative(root);
        out << r.subject_id << ',' << ds.views_deg[r.view_index] << ',' << r.seq_id << ',' << p.generic_string()
            << '\n';
    }
}

SplitSpec split_train_test(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    auto subjects = ds.subjects();
    if (subjects.size() < 2) throw InvalidArgumentError("a train/test split needs at least 2 subjects");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgumentError("train fraction must lie in (0,1)");
    Rng rng = Rng::derive(seed, {0x5917});
    rng.shuffle(subjects.begin(), subjects.end());
    const auto n = static_cast<long>(subjects.size());
    const long n_train = std::clamp(std::lround(train_fraction * n), 1L, n - 1);
    SplitSpec split;
    split.seed = seed;
    split.train_subjects.insert(subjects.begin(), subjects.begin() + n_train);
    split.test_subjects.insert(subjects.begin() + n_train, subjects.end());
    return split;
}

void write_split(const fs::path& path, const SplitSpec& split) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UnwritablePathError("cannot write " + path.string());
    out << "subject_id,role\n";
    std::map<int, const char*> rows;
    for (int s : split.train_subjects) rows[s] = "train";
    for (int s : split.test_subjects) rows[s] = "test";
    for (const auto& [s, role] : rows) out << s << ',' << role << '\n';
}

SplitSpec read_split(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"subject_id", "role"})
        throw LayoutError("bad split file header in " + path.string());
    SplitSpec split;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 2) throw LayoutError("bad split row: " + line);
        const int s = parse_field(f[0], path.string());
        if (f[1] == "train")
            split.train_subjects.insert(s);
        else if (f[1] == "test")
            split.test_subjects.insert(s);
        else
            throw LayoutError("unknown split role '" + f[1] + "'");
    }
    return split;
}

Dataset subset(const Dataset& ds, const std::set<int>& subjects) {
    Dataset out;
    out.views_deg = ds.views_deg;
    for (const auto& r : ds.records)
        if (subjects.count(r.subject_id)) out.records.push_back(r);
    return out;
}

std::vector<float> one_hot(int index, int n_views) {
    if (index < 0 || index >= n_views) throw InvalidArgumentError("view index out of range");
    std::vector<float> v(n_views, 0.0f);
    v[index] = 1.0f;
    return v;
}

BatchSampler::BatchSampler(const Dataset& ds) : ds_(&ds) {
    if (ds.records.empty()) throw EmptyDatasetError("cannot sample from an empty dataset");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.records.size(); ++i) groups[ds.records[i].subject_id].push_back(i);
    for (auto& [s, idx] : groups) {
        slot_[s] = subjects_.size();
        subjects_.push_back(s);
        by_subject_.push_back(std::move(idx));
    }
}

std::vector<PairSample> BatchSampler::pair_batch(std::size_t batch_size, Rng& rng, PairMode mode) const {
    const auto& recs = ds_->records;
    std::vector<PairSample> out;
    out.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const auto& src = recs[rng.index(recs.size())];
        if (mode == PairMode::Identity) {
            out.push_back({&src, &src, src.view_index});
            continue;
        }
        std::vector<std::size_t> candidates;
        for (auto i : by_subject_[slot_.at(src.subject_id)])
            if (recs[i].view_index != src.view_index) candidates.push_back(i);
        if (candidates.empty())
            throw InvalidArgumentError("subject " + std::to_string(src.subject_id) +
                                       " has a single view; cross-view pairs are impossible");
        const auto& tgt = recs[candidates[rng.index(candidates.size())]];
        out.push_back({&src, &tgt, tgt.view_index});
    }
    return out;
}

std::vector<TripletSample> BatchSampler::triplet_batch(std::size_t batch_size, Rng& rng) const {
    if (subjects_.size() < 2) throw InvalidArgumentError("triplets need at least 2 subjects");
    const auto& recs = ds_->records;
    std::vector<TripletSample> out;
    out.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t s = rng.index(subjects_.size());
        const auto& mine = by_subject_[s];
        const auto& anchor = recs[mine[rng.index(mine.size())]];

        std::vector<std::size_t> cross, same;
        for (auto i : mine) {
            if (&recs[i] == &anchor) continue;
            (recs[i].view_index != anchor.view_index ? cross : same).push_back(i);
        }
        const SampleRecord* positive = &anchor;
        if (!cross.empty())
            positive = &recs[cross[rng.index(cross.size())]];
        else if (!same.empty())
            positive = &recs[same[rng.index(same.size())]];

        std::size_t other = rng.index(subjects_.size() - 1);
        if (other >= s) ++other;
        const auto& theirs = by_subject_[other];
        out.push_back({&anchor, positive, &recs[theirs[rng.index(theirs.size())]]});
    }
    return out;
}

std::vector<AnglePretrainSample> BatchSampler::angle_pretrain_batch(std::size_t n, Rng& rng) const {
    if (n % 2 != 0) throw InvalidArgumentError("angle pretraining batch size must be even");
    const int nv = ds_->n_views();
    if (nv < 2) throw InvalidArgumentError("angle pretraining needs at least 2 views");
    const auto& recs = ds_->records;
    std::vector<AnglePretrainSample> out;
    out.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
        const auto& r = recs[rng.index(recs.size())];
        if (b < n / 2) {
            out.push_back({&r, r.view_index, true});
        } else {
            int wrong = static_cast<int>(rng.index(nv - 1));
            if (wrong >= r.view_index) ++wrong;
            out.push_back({&r, wrong, false});
        }
    }
    return out;
}

std::vector<PairSample> sample_pair_batch(const Dataset& ds, std::size_t batch_size, Rng& rng, PairMode mode) {
    return BatchSampler(ds).pair_batch(batch_size, rng, mode);
}

std::vector<TripletSample> sample_triplet_batch(const Dataset& ds, std::size_t batch_size, Rng& rng) {
    return BatchSampler(ds).triplet_batch(batch_size, rng);
}

std::vector<AnglePretrainSample> make_angle_pretrain_batch(const Dataset& ds, std::size_t n, Rng& rng) {
    return BatchSampler(ds).angle_pretrain_batch(n, rng);
}

}  // namespace diggan

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diggan/dataset.hpp"
#include "diggan/evaluator.hpp"
#include "diggan/network.hpp"

namespace diggan {

// View vector for `target_deg`: the one-hot of a declared view, or (in
// experimental mode) the convex blend of the two declared views around it.
ViewVector view_vector_for(const std::vector<int>& views_deg, double target_deg, bool experimental = false);

GeiImage generate_view(const ModelParams& m, const GeiImage& probe, const std::vector<int>& views_deg,
                       double target_deg, bool experimental = false);
std::vector<GeiImage> generate_all_views(const ModelParams& m, const GeiImage& probe, const std::vector<int>& views_deg,
                                         const std::vector<double>& targets_deg, bool experimental = false);

struct GridTile {
    int row = 0;
    int column = 0;
    int subject = 0;
    std::string view;  // degrees, or "input"
    std::string kind;  // generated | ground-truth
};

struct EvidenceGrid {
    Image image;
    int rows = 0;
    int columns = 0;
    std::vector<GridTile> tiles;
    bool experimental = false;
};

// Sidecar CSV `row,column,subject,view,kind`; experimental grids carry a
// leading `# experimental` line.
std::string grid_sidecar_csv(const EvidenceGrid& g);
void write_grid(const EvidenceGrid& g, const std::filesystem::path& pgm_path, const std::filesystem::path& csv_path);

// One row: the input GEI followed by its generation at every target view.
EvidenceGrid all_views_grid(const ModelParams& m, const SampleRecord& probe, const std::vector<int>& views_deg,
                            const std::vector<double>& targets_deg, bool experimental = false);

struct ConsistencyResult {
    EvidenceGrid grid;
    std::vector<int> ranked_subjects;
    // Generated images per grid row (row 0 is the probe), one per target view.
    std::vector<std::vector<Image>> generated;
};

// Probe row plus one row per rank-k retrieved subject; every row shows the
// subject's GEI and its generation at each target view.
ConsistencyResult consistency_grid(const ModelParams& m, const SampleRecord& probe,
                                   const std::vector<SampleRecord>& gallery, std::size_t k,
                                   const std::vector<int>& views_deg, const std::vector<double>& targets_deg,
                                   Distance d = Distance::Euclidean);

}  // namespace diggan

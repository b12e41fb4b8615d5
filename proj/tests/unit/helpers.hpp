#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "diggan/rng.hpp"
#include "diggan/synth.hpp"

namespace testutil {

// Fresh directory under the system temp dir, named after the running test.
inline std::filesystem::path scratch_dir(const std::string& tag = "") {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = std::string("diggan_") + info->test_suite_name() + "_" + info->name() + tag;
    for (auto& c : name)
        if (c == '/') c = '_';
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every regular file under `root`, keyed by relative path, with contents.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
    return out;
}

inline diggan::Mask random_mask(diggan::Rng& rng, int h, int w, double p_on = 0.5) {
    diggan::Mask m(h, w);
    for (auto& v : m.data) v = rng.uniform() < p_on ? 1 : 0;
    return m;
}

inline diggan::SynthDatasetSpec small_spec(int subjects = 6, std::uint64_t seed = 3) {
    diggan::SynthDatasetSpec s;
    s.n_subjects = subjects;
    s.frames_per_seq = 16;
    s.seed = seed;
    s.write_silhouettes = false;
    return s;
}

}  // namespace testutil

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace diggan {

// Flat `key = value` configuration. Lines starting with '#' are comments.
// Later assignments override earlier ones.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<string>");
    static Config load(const std::filesystem::path& path);

    // Applies a single "key=value" override.
    void apply_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void erase(const std::string& key) { values_.erase(key); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    // Keys in sorted order, one `key = value` line each.
    std::string to_text() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::string format_double(double v);
std::string join_ints(const std::vector<int>& v);

}  // namespace diggan

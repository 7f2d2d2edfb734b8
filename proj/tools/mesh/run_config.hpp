#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mesh::cli {

/// Flat "section.key" -> value map. Getters record the value they return,
/// defaults included, so the manifest captures the fully resolved run.
class RunConfig {
public:
    static RunConfig from_ini(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    /// Parses "section.key=value".
    void set_assignment(const std::string& assignment);
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) const;
    std::string required(const std::string& key) const;
    double real(const std::string& key, double fallback) const;
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

std::string sha256_file(const std::filesystem::path& path);
std::string format_real(double v);

}  // namespace mesh::cli

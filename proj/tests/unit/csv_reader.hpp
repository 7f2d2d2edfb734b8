#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace mesh::test {

/// Plain comma split (fixtures hold no quoted fields); header row skipped.
inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, bool skip_header = true) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    if (skip_header) std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        rows.push_back(std::move(f));
    }
    return rows;
}

}  // namespace mesh::test

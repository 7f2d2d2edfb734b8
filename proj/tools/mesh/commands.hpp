#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mesh/run_config.hpp"

namespace mesh::cli {

struct CommandContext {
    RunConfig& cfg;
    std::filesystem::path out_dir;
    std::uint64_t seed = 1;
    std::ostream& out;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;

    /// Writes `content` under the run directory and records it as an output.
    void write(const std::string& name, const std::string& content);
    std::filesystem::path output_path(const std::string& name);
};

// Each returns the process exit code.
int cmd_summarize(CommandContext& ctx);
int cmd_fit(CommandContext& ctx);
int cmd_compare(CommandContext& ctx);
int cmd_mvp(CommandContext& ctx);
int cmd_pairs(CommandContext& ctx);
int cmd_gnet(CommandContext& ctx);
int cmd_simulate(CommandContext& ctx);
int cmd_validate(CommandContext& ctx);

}  // namespace mesh::cli

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cexrepair {

struct ProcessResult {
    bool spawned = false;
    int exit_code = -1;
    bool timed_out = false;
    std::string output; // stdout and stderr interleaved
    double wall_time = 0.0;
    std::string spawn_error;
};

/// Runs argv[0] (PATH lookup) with merged output capture; the process group is killed on timeout.
ProcessResult run_process(const std::vector<std::string> &argv, double timeout_s,
                          const std::optional<std::filesystem::path> &cwd = std::nullopt,
                          const std::vector<std::string> &unset_env = {});

/// Absolute path of an executable found directly or on PATH.
std::optional<std::filesystem::path> find_executable(const std::string &name);

} // namespace cexrepair

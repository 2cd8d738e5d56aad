#pragma once

#include "dfal/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace dfal {

/// Exit statuses shared by every command.
enum ExitStatus : int { exit_ok = 0, exit_runtime = 1, exit_config = 2 };

struct CommandOptions {
    std::filesystem::path config;
    /// Output root; overrides DFAL_OUT_DIR, which overrides output.dir.
    std::optional<std::filesystem::path> out;
    std::string slice = "all";
    double alpha = 0.05;
    unsigned threads = 1;
    std::ostream* log = nullptr; // defaults to std::cerr
};

inline constexpr const char* out_dir_env = "DFAL_OUT_DIR";

/// Output root after applying --out, then DFAL_OUT_DIR, then output.dir.
std::filesystem::path output_root(const RunConfig& cfg, const CommandOptions& opts);

/// <output_root>/<config_fingerprint> for run; other commands append their
/// own name below it.
std::filesystem::path run_directory(const RunConfig& cfg, const CommandOptions& opts);

/// Loads and validates the config; every failure is a ConfigError.
RunConfig load_checked_config(const std::filesystem::path& path);

int cmd_run(const CommandOptions& opts);
int cmd_compare(const std::filesystem::path& results_dir, const CommandOptions& opts);
int cmd_geometry(const CommandOptions& opts);
int cmd_shift(const CommandOptions& opts);
int cmd_contraction(const CommandOptions& opts);
int cmd_timing(const CommandOptions& opts);

} // namespace dfal

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace voyagecast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (synth, train, evaluate, serve, cluster, replay).
/// `args` excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace voyagecast::cli

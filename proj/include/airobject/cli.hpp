#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace airobject {

/// Runs one `airobject` invocation. `args` excludes the program name.
/// Returns the process exit code: 0 success, 1 usage error, 2 data error,
/// 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a 64-bit hash of a file's bytes, as 16 lowercase hex digits.
std::string fnv1a64_file(const std::filesystem::path& path);

}  // namespace airobject

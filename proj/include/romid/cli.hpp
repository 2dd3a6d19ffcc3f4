#pragma once

// Command-line front end: dry-sim, identify, rom-run, compare, eig.

#include <string>
#include <vector>

namespace romid::cli {

/// Parses and runs one command; returns the process exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

/// 64-bit FNV-1a of a string, as hex; used to fingerprint configurations.
std::string fingerprint(const std::string& text);

}  // namespace romid::cli

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mcdok {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand (curate, train, predict, evaluate, compare, baseline).
/// `args` excludes the program name. Returns 0 on success, 1 on validation
/// errors or bad usage, 2 on I/O errors.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args);

}  // namespace mcdok

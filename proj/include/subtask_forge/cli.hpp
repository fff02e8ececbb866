#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace subtask_forge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `subtask_forge` tool. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subtask_forge::cli

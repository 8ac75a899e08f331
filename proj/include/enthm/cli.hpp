#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace enthm::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitTheft = 2;

/// Entry point for the `enthm` tool: detect, inject, eval, simulate, synth.
/// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace enthm::cli

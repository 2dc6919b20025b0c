#pragma once

#include <iosfwd>

namespace slotcast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAdvisory = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitIo = 74;

// Subcommands: analyze, synth, train, predict, advise, evaluate.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slotcast::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace toporag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

// toporag {parse|split|train|embed|retrieve|run|eval} [options]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toporag

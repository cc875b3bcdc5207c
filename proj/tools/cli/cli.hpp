#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace how2::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `how2` invocation. args[0] is the program name. Failures print a
/// one-line JSON object {"error": <category>, "message": ...} to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace how2::cli

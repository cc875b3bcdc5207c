#include "how2/version.hpp"

#ifndef HOW2_VERSION
#define HOW2_VERSION "0.0.0"
#endif

namespace how2 {

std::string_view version() noexcept { return HOW2_VERSION; }

}  // namespace how2

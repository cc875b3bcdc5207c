#pragma once

#include <string_view>

namespace how2 {

std::string_view version() noexcept;

}  // namespace how2

#pragma once

namespace dupforge {

inline constexpr char const* version = "0.3.0";

}  // namespace dupforge

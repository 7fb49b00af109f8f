#pragma once

namespace bjlab {

inline constexpr const char* version = "0.1.0";

}  // namespace bjlab

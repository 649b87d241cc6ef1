#pragma once

namespace latnet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace latnet

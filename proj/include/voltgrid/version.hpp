#pragma once

namespace voltgrid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace voltgrid

#pragma once

namespace rexrank {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rexrank

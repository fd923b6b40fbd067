#pragma once

namespace dhif {

inline constexpr const char* kToolName = "dhif";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dhif

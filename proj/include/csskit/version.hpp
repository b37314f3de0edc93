#pragma once

namespace csskit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace csskit

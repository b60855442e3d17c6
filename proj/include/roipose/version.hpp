#pragma once

namespace roipose {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace roipose

#pragma once

namespace rkm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rkm

#pragma once

namespace judgekit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace judgekit

#pragma once

namespace kcsm {

inline constexpr const char* version = "0.1.0";

} // namespace kcsm

#pragma once

namespace scaledreg {

inline constexpr const char* kVersion = "0.1.0";

} // namespace scaledreg

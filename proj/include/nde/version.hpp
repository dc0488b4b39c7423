#pragma once

namespace nde {
inline constexpr const char* kVersion = "0.1.0";
}

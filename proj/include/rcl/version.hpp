#pragma once

namespace rcl {
inline constexpr const char* kVersion = "0.1.0";
}

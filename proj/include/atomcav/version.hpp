#pragma once

namespace atomcav {
inline constexpr const char* kVersion = "0.1.0";
}

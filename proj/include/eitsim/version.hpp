#pragma once

namespace eitsim {
inline constexpr const char* kVersion = "0.1.0";
}

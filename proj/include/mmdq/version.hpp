#pragma once

namespace mmdq {
inline constexpr const char* kVersion = "0.1.0";
}

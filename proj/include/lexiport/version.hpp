#pragma once

namespace lexiport {
inline constexpr const char* kToolVersion = "0.1.0";
}

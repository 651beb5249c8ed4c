#pragma once

namespace backoff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace backoff

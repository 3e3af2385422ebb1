#pragma once

namespace casunext {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace casunext

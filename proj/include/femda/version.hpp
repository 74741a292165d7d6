#pragma once

namespace femda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace femda

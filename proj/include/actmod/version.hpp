#pragma once

namespace actmod {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace actmod

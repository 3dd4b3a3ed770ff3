#pragma once

namespace qoctl {
inline constexpr const char* kVersion = "0.1.0";
}

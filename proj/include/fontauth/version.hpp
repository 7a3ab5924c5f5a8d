#pragma once

namespace fontauth {
inline constexpr const char* kToolVersion = "0.1.0";
}

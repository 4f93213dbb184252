#pragma once

namespace auq {

inline constexpr const char* kVersion = "0.1.0";

}

#pragma once

namespace nndm {
inline constexpr const char* kVersionString = "0.1.0";
}

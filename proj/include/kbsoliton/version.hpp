#pragma once

namespace kb {

inline constexpr const char* version = "1.0.0";

}

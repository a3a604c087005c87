#pragma once

namespace emo3d {

inline constexpr const char* kVersion = "0.1.0";

} // namespace emo3d

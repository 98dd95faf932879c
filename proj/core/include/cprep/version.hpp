#pragma once

namespace cprep {

/// Library version recorded in run manifests; keep in step with the CMake
/// project version.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace cprep

#pragma once

namespace wesper {

inline constexpr const char* kVersion = "0.1.0";

// Random source recorded in output manifests: a fully specified engine plus
// fully specified transforms, so runs reproduce across builds of this library.
inline constexpr const char* kRngAlgorithm = "mt19937_64+box-muller+marsaglia-tsang";

}  // namespace wesper

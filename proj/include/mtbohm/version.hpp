#ifndef MTBOHM_VERSION_HPP
#define MTBOHM_VERSION_HPP

namespace mtbohm {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

} // namespace mtbohm

#endif

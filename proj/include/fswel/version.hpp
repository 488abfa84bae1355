#ifndef FSWEL_VERSION_HPP
#define FSWEL_VERSION_HPP

namespace fswel {

inline constexpr const char* kVersion = "0.1.0";

}

#endif

#ifndef KPZSYNC_VERSION_HPP
#define KPZSYNC_VERSION_HPP

namespace kpzsync {

inline constexpr const char* artifact_version = "0.1.0";

}

#endif

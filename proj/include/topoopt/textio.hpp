#pragma once

#include <cstdio>
#include <string>

namespace topoopt {

// 17 significant digits: doubles round-trip exactly, so text outputs can be
// compared byte-for-byte.
inline std::string g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace topoopt

#pragma once

#include <charconv>
#include <string>

#include "grace/error.hpp"

namespace grace::num {

// Shortest round-trip formatting; keeps artifacts byte-stable across runs.
inline std::string to_string(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        fail("NumberParse", "bad numeric field '" + s + "' in " + context);
    }
    return v;
}

}  // namespace grace::num

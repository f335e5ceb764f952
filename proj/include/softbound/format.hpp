#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace softbound {

/// Shortest round-trip decimal form of a double; locale-free and
/// deterministic, so emitted CSV/JSON is byte-stable.
inline std::string format_double(double v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace softbound

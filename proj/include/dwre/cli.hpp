#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace dwre::cli {

// Exit codes: 0 success, 1 validation error (including bad arguments), 2 cap exceeded.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace dwre::cli

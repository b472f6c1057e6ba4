#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace softdistill {

// Shortest decimal form that round-trips to the same double (std::to_chars).
// Used everywhere a float reaches a text file so outputs are byte-stable.
std::string format_double(double v);

// FNV-1a over the bytes of `text`.
std::uint64_t hash_string(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace softdistill

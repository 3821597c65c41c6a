#pragma once

#include <string>

#include "sptlaw/types.hpp"

namespace sptlaw {

/// Parses a token count from an integer literal or an SI-suffixed string:
/// K/M/B/T mean 1e3/1e6/1e9/1e12. "1.5B" is exact (1,500,000,000);
/// a value that is not a whole number of tokens is a FormatError.
TokenCount parse_token_count(const std::string& text);

/// Renders with the largest suffix that divides the value evenly,
/// falling back to plain digits ("200B", "1500M", "1234567").
std::string format_token_count(TokenCount t);

}  // namespace sptlaw

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace commscape {

// Lowercases, strips URLs, markup and punctuation, splits on whitespace.
// Deterministic and locale-free: only ASCII is case-folded; bytes >= 0x80
// are kept verbatim so non-Latin words survive intact. Whitespace chunks
// containing a URL are dropped whole. Empty output is permitted.
std::vector<std::string> tokenize(std::string_view body);

}  // namespace commscape

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lexiport {

// Character n-grams of a token, lengths n_min..n_max counted in code points.
// A word-initial token is wrapped as "<token>"; a continuation token (prefix
// stripped) as "token>" since it is word-internal. With markers off neither
// marker is added. The fully wrapped form is included when its length is in
// range. Duplicates are dropped, first occurrence wins; order is by start
// position, then length.
std::vector<std::string> extract_ngrams(std::string_view token, std::size_t n_min,
                                        std::size_t n_max,
                                        std::string_view continuation_prefix = "##",
                                        bool markers = true);

}  // namespace lexiport

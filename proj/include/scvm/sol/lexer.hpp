#pragma once

#include "scvm/core/types.hpp"

#include <string_view>
#include <vector>

namespace scvm::sol {

struct LexResult {
    TokenStream tokens;
    /// Comment spans, kept apart from the token stream.
    std::vector<Span> comments;
};

/// Lexes Solidity source. Throws LexError on invalid UTF-8, unterminated
/// strings or block comments, and characters outside the language.
LexResult tokenize_solidity(std::string_view source);

bool is_keyword(std::string_view word);

} // namespace scvm::sol

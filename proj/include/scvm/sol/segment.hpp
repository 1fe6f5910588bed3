#pragma once

#include "scvm/core/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace scvm::sol {

enum class FunctionKind { Function, Constructor, Fallback, Receive };
enum class Visibility { Public, External, Internal, Private, Unspecified };
enum class Mutability { NonPayable, Payable, View, Pure };

std::string_view to_string(FunctionKind kind);
std::string_view to_string(Visibility visibility);

/// A storage write or value transfer observed inside a function body.
struct Effect {
    enum class Kind { StateWrite, ValueTransfer };
    Kind kind;
    /// Token index of the written variable or of the transfer member (`transfer`, `call`, `selfdestruct`).
    std::size_t token;
    /// State variable name for writes, receiver text for transfers.
    std::string target;
    /// Write keyed as `x[msg.sender]`, or value sent to `msg.sender`.
    bool caller_scoped = false;
};

struct FunctionSpan {
    std::string name;
    std::string contract;
    FunctionKind kind = FunctionKind::Function;
    Visibility visibility = Visibility::Unspecified;
    Mutability mutability = Mutability::NonPayable;
    std::vector<std::string> modifiers;
    std::vector<std::string> parameters;
    /// From the declaring keyword to the closing brace.
    Span decl_span;
    /// Declaring keyword up to (excluding) the opening brace.
    Span header_span;
    /// Opening to closing brace, inclusive.
    Span body_span;
    /// Token indices of the opening and closing braces.
    std::size_t body_open = 0;
    std::size_t body_close = 0;
    bool mutates_state = false;
    std::vector<Effect> effects;
};

struct ContractLayout {
    std::vector<FunctionSpan> functions;
    /// Writable storage variables (constants and immutables excluded), across all contracts in the unit.
    std::vector<std::string> state_variables;
    /// Import paths, as written.
    std::vector<std::string> imports;
    /// Library names appearing in `using X for ...` directives.
    std::vector<std::string> using_libraries;
};

/// First token of the receiver expression of the member access whose `.` is at `dot`,
/// e.g. `payable(owner)` in `payable(owner).transfer(x)`.
std::size_t receiver_start(const TokenStream& tokens, std::size_t dot);

/// Function segmentation over a token stream. Bodiless declarations
/// (interfaces, abstract functions) are not reported.
/// Throws StructureError on unbalanced braces, carrying the last open brace span.
std::vector<FunctionSpan> segment_functions(const TokenStream& tokens);

/// Segmentation plus the contract-level facts the rule matchers need.
ContractLayout analyze_layout(const TokenStream& tokens);

} // namespace scvm::sol

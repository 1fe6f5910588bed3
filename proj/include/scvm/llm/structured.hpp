#pragma once

#include "scvm/llm/provider.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace scvm::llm {

enum class FieldType { String, Number, Boolean, Array, Object, Any };

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::Any;
};

/// Required top-level fields of one agent's reply object.
struct Schema {
    std::vector<FieldSpec> required;
    /// Comma-separated field names, for repair prompts.
    std::string describe() const;
};

/// No usable object in a reply. Carries the reply text verbatim.
class ExtractionError : public Error {
public:
    ExtractionError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw_text() const { return raw_; }

private:
    std::string raw_;
};

/// Object found but a required field is missing or mistyped.
class SchemaError : public ExtractionError {
public:
    SchemaError(const std::string& what, std::string raw, std::string field)
        : ExtractionError(what, std::move(raw)), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// First balanced `{...}` in the text that parses as a JSON object, validated against the schema.
nlohmann::json extract_structured(const std::string& response, const Schema& schema);

struct StructuredReply {
    nlohmann::json value;
    /// Every exchange made, including repair attempts.
    std::vector<ChatExchange> exchanges;
};

/// Asks, extracts, and on failure re-asks up to `repair_attempts` times with a repair prompt.
/// Throws the last ExtractionError when every attempt fails. Provider errors propagate.
StructuredReply ask_structured(const Client& client, const std::string& role, const std::string& prompt,
                               const Schema& schema, int repair_attempts = 1);

/// Prompt used for the repair attempt.
std::string repair_prompt(const std::string& original_prompt, const std::string& error, const Schema& schema);

} // namespace scvm::llm

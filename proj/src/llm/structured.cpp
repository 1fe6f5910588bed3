#include "scvm/llm/structured.hpp"

namespace scvm::llm {

using nlohmann::json;

namespace {

std::string_view type_name(FieldType t)
{
    switch (t) {
    case FieldType::String: return "string";
    case FieldType::Number: return "number";
    case FieldType::Boolean: return "boolean";
    case FieldType::Array: return "array";
    case FieldType::Object: return "object";
    case FieldType::Any: return "any";
    }
    return "any";
}

bool has_type(const json& v, FieldType t)
{
    switch (t) {
    case FieldType::String: return v.is_string();
    case FieldType::Number: return v.is_number();
    case FieldType::Boolean: return v.is_boolean();
    case FieldType::Array: return v.is_array();
    case FieldType::Object: return v.is_object();
    case FieldType::Any: return true;
    }
    return false;
}

// End of the balanced object starting at `open`, honoring string literals; npos if unbalanced.
std::size_t balanced_end(const std::string& s, std::size_t open)
{
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}' && --depth == 0)
            return i;
    }
    return std::string::npos;
}

} // namespace

std::string Schema::describe() const
{
    std::string out;
    for (const auto& f : required) {
        if (!out.empty())
            out += ", ";
        out += f.name + " (" + std::string(type_name(f.type)) + ")";
    }
    return out;
}

json extract_structured(const std::string& response, const Schema& schema)
{
    for (auto open = response.find('{'); open != std::string::npos; open = response.find('{', open + 1)) {
        auto close = balanced_end(response, open);
        if (close == std::string::npos)
            continue;
        json obj = json::parse(response.begin() + static_cast<std::ptrdiff_t>(open),
                               response.begin() + static_cast<std::ptrdiff_t>(close) + 1, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            continue;
        for (const auto& f : schema.required) {
            if (!obj.contains(f.name))
                throw SchemaError("missing required field: " + f.name, response, f.name);
            if (!has_type(obj[f.name], f.type))
                throw SchemaError("field " + f.name + " must be a " + std::string(type_name(f.type)), response,
                                  f.name);
        }
        return obj;
    }
    throw ExtractionError("no structured object found in model response", response);
}

std::string repair_prompt(const std::string& original_prompt, const std::string& error, const Schema& schema)
{
    return original_prompt + "\n### Repair\nYour previous reply could not be used (" + error +
           "). Re-emit your answer as a single valid JSON object with the fields: " + schema.describe() + ".\n";
}

StructuredReply ask_structured(const Client& client, const std::string& role, const std::string& prompt,
                               const Schema& schema, int repair_attempts)
{
    StructuredReply reply;
    std::string current = prompt;
    for (int attempt = 0;; ++attempt) {
        reply.exchanges.push_back(client.ask(role, current));
        try {
            reply.value = extract_structured(reply.exchanges.back().response, schema);
            return reply;
        } catch (const ExtractionError& e) {
            if (attempt >= repair_attempts)
                throw;
            current = repair_prompt(prompt, e.what(), schema);
        }
    }
}

} // namespace scvm::llm

#include "scvm/core/finding.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

namespace scvm {

namespace {

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

} // namespace

const std::vector<VulnerabilityClass>& known_classes()
{
    static const std::vector<VulnerabilityClass> classes = {
        {"Reentrancy", "SWC-107"},
        {"Integer Overflow/Underflow", "SWC-101"},
        {"Unprotected Function", "SWC-105"},
        {"tx.origin Authentication", "SWC-115"},
        {"Unchecked Low-Level Call Return", "SWC-104"},
        {"Timestamp Dependence", "SWC-116"},
        {"Unprotected selfdestruct", "SWC-106"},
        {"Delegatecall to Untrusted Callee", "SWC-112"},
        {"Denial of Service", "SWC-113"},
        {"Front-Running", "SWC-114"},
        {"Weak Randomness", "SWC-120"},
        {"Signature Replay", "SWC-121"},
    };
    return classes;
}

VulnerabilityClass resolve_class(std::string_view name)
{
    for (const auto& c : known_classes()) {
        if (iequals(c.name, name) || (c.swc_id && iequals(*c.swc_id, name)))
            return c;
    }
    return {std::string(name), std::nullopt};
}

std::string_view to_string(Channel channel)
{
    switch (channel) {
    case Channel::Static:
        return "static";
    case Channel::Retrieval:
        return "retrieval";
    case Channel::Model:
        return "model";
    }
    return "?";
}

Channel channel_from_string(std::string_view text)
{
    if (text == "static")
        return Channel::Static;
    if (text == "retrieval")
        return Channel::Retrieval;
    if (text == "model")
        return Channel::Model;
    throw Error("unknown channel: " + std::string(text));
}

std::string_view to_string(Verdict verdict)
{
    return verdict == Verdict::Vulnerable ? "vulnerable" : "safe";
}

Verdict verdict_from_string(std::string_view text)
{
    if (iequals(text, "vulnerable"))
        return Verdict::Vulnerable;
    if (iequals(text, "safe"))
        return Verdict::Safe;
    throw Error("unknown verdict: " + std::string(text));
}

bool same_identity(const Finding& a, const Finding& b)
{
    return a.vclass.name == b.vclass.name && a.location.function == b.location.function;
}

namespace {

auto location_key(const Finding& f)
{
    return std::tie(f.location.span.begin, f.location.span.end, f.vclass.name, f.location.function);
}

// Strict preference used when two findings share an identity.
bool preferred(const Finding& a, const Finding& b)
{
    if (a.confidence != b.confidence)
        return a.confidence > b.confidence;
    if (a.location.span != b.location.span)
        return a.location.span < b.location.span;
    if (a.channel != b.channel)
        return a.channel < b.channel;
    return a.evidence < b.evidence;
}

} // namespace

std::vector<Finding> merge_findings(const std::vector<std::vector<Finding>>& lists)
{
    std::vector<Finding> kept;
    const std::string* contract = nullptr;
    for (const auto& list : lists) {
        for (const auto& f : list) {
            if (contract == nullptr)
                contract = &f.contract_id;
            else if (*contract != f.contract_id)
                throw Error("merge_findings: findings reference different contracts ('" + *contract + "' and '" +
                            f.contract_id + "')");
            auto it = std::find_if(kept.begin(), kept.end(), [&](const Finding& k) { return same_identity(k, f); });
            if (it == kept.end())
                kept.push_back(f);
            else if (preferred(f, *it))
                *it = f;
        }
    }
    std::sort(kept.begin(), kept.end(), [](const Finding& a, const Finding& b) { return location_key(a) < location_key(b); });
    return kept;
}

std::vector<Finding> merge_findings(const std::vector<Finding>& list)
{
    return merge_findings(std::vector<std::vector<Finding>>{list});
}

ChannelResult make_channel_result(Channel channel, double score, std::vector<Finding> findings, double threshold)
{
    ChannelResult r;
    r.channel = channel;
    r.score = score;
    r.verdict = score >= threshold ? Verdict::Vulnerable : Verdict::Safe;
    r.findings = std::move(findings);
    return r;
}

void to_json(nlohmann::json& j, const VulnerabilityClass& c)
{
    j = nlohmann::json{{"name", c.name}, {"swc_id", c.swc_id ? nlohmann::json(*c.swc_id) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, VulnerabilityClass& c)
{
    c.name = j.at("name").get<std::string>();
    if (auto it = j.find("swc_id"); it != j.end() && !it->is_null())
        c.swc_id = it->get<std::string>();
    else
        c.swc_id.reset();
}

void to_json(nlohmann::json& j, const Finding& f)
{
    j = nlohmann::json{
        {"contract", f.contract_id},
        {"class", f.vclass},
        {"span", {f.location.span.begin, f.location.span.end}},
        {"function", f.location.function},
        {"evidence", f.evidence},
        {"channel", to_string(f.channel)},
        {"confidence", f.confidence},
    };
}

void from_json(const nlohmann::json& j, Finding& f)
{
    f.contract_id = j.at("contract").get<std::string>();
    f.vclass = j.at("class").get<VulnerabilityClass>();
    const auto& span = j.at("span");
    f.location.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    f.location.function = j.at("function").get<std::string>();
    f.evidence = j.at("evidence").get<std::string>();
    f.channel = channel_from_string(j.at("channel").get<std::string>());
    f.confidence = j.at("confidence").get<double>();
}

void to_json(nlohmann::json& j, const ChannelResult& r)
{
    j = nlohmann::json{
        {"channel", to_string(r.channel)},
        {"verdict", to_string(r.verdict)},
        {"score", r.score},
        {"findings", r.findings},
    };
}

void from_json(const nlohmann::json& j, ChannelResult& r)
{
    r.channel = channel_from_string(j.at("channel").get<std::string>());
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.score = j.at("score").get<double>();
    r.findings = j.at("findings").get<std::vector<Finding>>();
}

} // namespace scvm

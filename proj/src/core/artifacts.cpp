#include "scvm/core/artifacts.hpp"

#include <algorithm>

namespace scvm {

bool RepairSuggestion::has_all_fields() const
{
    return !vulnerability_name.empty() && !cause_analysis.empty() && !impact_assessment.empty() &&
           !repair_steps.empty() && !preventive_measures.empty();
}

int& RiskDistribution::at(RiskLevel level)
{
    switch (level) {
    case RiskLevel::Critical:
        return critical;
    case RiskLevel::High:
        return high;
    case RiskLevel::Medium:
        return medium;
    case RiskLevel::Low:
        break;
    }
    return low;
}

int RiskDistribution::at(RiskLevel level) const
{
    return const_cast<RiskDistribution&>(*this).at(level);
}

RiskDistribution distribution_of(const std::vector<RiskAssignment>& assignments)
{
    RiskDistribution d;
    for (const auto& a : assignments)
        ++d.at(a.level);
    return d;
}

bool is_consistent(const VerificationResult& result, const Patch& patch)
{
    if (!result.passed)
        return true;
    if (!result.new_issues.empty())
        return false;
    return std::all_of(patch.addressed_findings.begin(), patch.addressed_findings.end(), [&](const Finding& f) {
        return std::any_of(result.eliminated.begin(), result.eliminated.end(),
                           [&](const Finding& e) { return same_identity(e, f); });
    });
}

void AuditReport::validate() const
{
    if (sections.size() != kReportSectionTitles.size())
        throw Error("audit report must have exactly " + std::to_string(kReportSectionTitles.size()) +
                    " sections, found " + std::to_string(sections.size()));
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (sections[i].title != kReportSectionTitles[i])
            throw Error("audit report section " + std::to_string(i + 1) + " is '" + sections[i].title +
                        "', expected '" + std::string(kReportSectionTitles[i]) + "'");
    }
}

std::string AuditReport::to_markdown() const
{
    std::string out = "# Smart Contract Audit Report\n";
    for (std::size_t i = 0; i < sections.size(); ++i) {
        out += "\n## " + std::to_string(i + 1) + ". " + sections[i].title + "\n\n";
        out += sections[i].body;
        if (!sections[i].body.empty() && sections[i].body.back() != '\n')
            out += '\n';
    }
    return out;
}

nlohmann::json AuditReport::to_json() const
{
    nlohmann::json secs = nlohmann::json::array();
    for (const auto& s : sections)
        secs.push_back({{"title", s.title}, {"body", s.body}});
    return {{"sections", secs}, {"payload", machine_payload}};
}

AuditReport AuditReport::from_json(const nlohmann::json& j)
{
    AuditReport r;
    for (const auto& s : j.at("sections"))
        r.sections.push_back({s.at("title").get<std::string>(), s.at("body").get<std::string>()});
    r.machine_payload = j.at("payload");
    return r;
}

void to_json(nlohmann::json& j, const RepairSuggestion& s)
{
    j = nlohmann::json{
        {"vulnerability_name", s.vulnerability_name},
        {"cause_analysis", s.cause_analysis},
        {"impact_assessment", s.impact_assessment},
        {"repair_steps", s.repair_steps},
        {"preventive_measures", s.preventive_measures},
        {"target", s.target},
        {"complete", s.complete},
    };
}

void from_json(const nlohmann::json& j, RepairSuggestion& s)
{
    s.vulnerability_name = j.at("vulnerability_name").get<std::string>();
    s.cause_analysis = j.at("cause_analysis").get<std::string>();
    s.impact_assessment = j.at("impact_assessment").get<std::string>();
    s.repair_steps = j.at("repair_steps").get<std::vector<std::string>>();
    s.preventive_measures = j.at("preventive_measures").get<std::vector<std::string>>();
    s.target = j.at("target").get<Finding>();
    s.complete = j.at("complete").get<bool>();
}

void to_json(nlohmann::json& j, const RiskAssignment& a)
{
    j = nlohmann::json{{"finding", a.finding}, {"level", to_string(a.level)}, {"defaulted", a.defaulted}};
}

void to_json(nlohmann::json& j, const RiskDistribution& d)
{
    j = nlohmann::json{{"Critical", d.critical}, {"High", d.high}, {"Medium", d.medium}, {"Low", d.low}};
}

void to_json(nlohmann::json& j, const Patch& p)
{
    j = nlohmann::json{
        {"original", p.original_id},
        {"repaired_source", p.repaired_source},
        {"addressed_findings", p.addressed_findings},
        {"rationale", p.rationale},
    };
}

void to_json(nlohmann::json& j, const VerificationResult& v)
{
    j = nlohmann::json{
        {"passed", v.passed},
        {"eliminated", v.eliminated},
        {"new_issues", v.new_issues},
        {"verifier_model", v.verifier_model},
    };
}

} // namespace scvm

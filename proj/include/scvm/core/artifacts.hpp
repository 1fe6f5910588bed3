#pragma once

#include "scvm/core/finding.hpp"
#include "scvm/core/risk.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace scvm {

struct RepairSuggestion {
    std::string vulnerability_name;
    std::string cause_analysis;
    std::string impact_assessment;
    std::vector<std::string> repair_steps;
    std::vector<std::string> preventive_measures;
    Finding target;
    bool complete = false;

    /// True when all five content fields are non-empty.
    bool has_all_fields() const;
};

struct RiskAssignment {
    Finding finding;
    RiskLevel level = RiskLevel::High;
    /// Set when the model output was unusable and the level fell back to High.
    bool defaulted = false;
};

struct RiskDistribution {
    int critical = 0;
    int high = 0;
    int medium = 0;
    int low = 0;

    int& at(RiskLevel level);
    int at(RiskLevel level) const;
    friend bool operator==(const RiskDistribution&, const RiskDistribution&) = default;
};

RiskDistribution distribution_of(const std::vector<RiskAssignment>& assignments);

struct Patch {
    std::string original_id;
    std::string repaired_source;
    std::vector<Finding> addressed_findings;
    std::string rationale;
};

struct VerificationResult {
    bool passed = false;
    std::vector<Finding> eliminated;
    std::vector<Finding> new_issues;
    std::string verifier_model;
};

/// Checks the passed => (no new issues and every addressed finding eliminated) rule.
bool is_consistent(const VerificationResult& result, const Patch& patch);

struct ReportSection {
    std::string title;
    std::string body;
};

inline constexpr std::array<std::string_view, 7> kReportSectionTitles = {
    "Contract Basic Information Overview",
    "Executive Summary",
    "Audit Methodology Explanation",
    "Vulnerability Discovery Summary",
    "In-Depth Analysis Report",
    "Improvement Suggestions",
    "Compliance Disclaimer",
};

struct AuditReport {
    std::vector<ReportSection> sections;
    nlohmann::json machine_payload;

    /// Throws Error unless there are exactly seven sections with the canonical titles in order.
    void validate() const;
    std::string to_markdown() const;
    nlohmann::json to_json() const;
    static AuditReport from_json(const nlohmann::json& j);
};

void to_json(nlohmann::json& j, const RepairSuggestion& s);
void from_json(const nlohmann::json& j, RepairSuggestion& s);
void to_json(nlohmann::json& j, const RiskAssignment& a);
void to_json(nlohmann::json& j, const RiskDistribution& d);
void to_json(nlohmann::json& j, const Patch& p);
void to_json(nlohmann::json& j, const VerificationResult& v);

} // namespace scvm

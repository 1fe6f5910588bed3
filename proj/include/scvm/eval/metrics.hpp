#pragma once

#include "scvm/core/finding.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace scvm::eval {

/// Counts with "vulnerable" as the positive class.
struct ConfusionMatrix {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    long total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

using LabeledVerdicts = std::vector<std::pair<std::string, Verdict>>;

/// Pairs predictions with gold labels by id. Throws Error on differing id sets or duplicates.
ConfusionMatrix confusion(const LabeledVerdicts& predictions, const LabeledVerdicts& gold);

struct MetricsReport {
    std::string label;
    ConfusionMatrix cm;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
    /// Metrics whose denominator was zero (reported as 0).
    std::vector<std::string> degenerate;

    bool is_degenerate(std::string_view metric) const;
};

MetricsReport metrics(const ConfusionMatrix& cm, std::string label = {});

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const MetricsReport& m);

} // namespace scvm::eval

#include "scvm/eval/metrics.hpp"

#include <algorithm>
#include <map>

namespace scvm::eval {

ConfusionMatrix confusion(const LabeledVerdicts& predictions, const LabeledVerdicts& gold)
{
    if (predictions.size() != gold.size())
        throw Error("predictions and gold labels differ in length");
    std::map<std::string, Verdict> truth;
    for (const auto& [id, v] : gold) {
        if (!truth.emplace(id, v).second)
            throw Error("duplicate gold id: " + id);
    }
    ConfusionMatrix cm;
    std::map<std::string, bool> seen;
    for (const auto& [id, pred] : predictions) {
        auto it = truth.find(id);
        if (it == truth.end())
            throw Error("prediction for unknown id: " + id);
        if (seen[id])
            throw Error("duplicate prediction id: " + id);
        seen[id] = true;
        const bool p = pred == Verdict::Vulnerable;
        const bool g = it->second == Verdict::Vulnerable;
        if (p && g)
            ++cm.tp;
        else if (p)
            ++cm.fp;
        else if (g)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

bool MetricsReport::is_degenerate(std::string_view metric) const
{
    return std::find(degenerate.begin(), degenerate.end(), metric) != degenerate.end();
}

MetricsReport metrics(const ConfusionMatrix& cm, std::string label)
{
    MetricsReport m;
    m.label = std::move(label);
    m.cm = cm;
    auto ratio = [&](long num, long den, const char* name) {
        if (den == 0) {
            m.degenerate.emplace_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
    m.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    m.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
        m.degenerate.emplace_back("f1");
    m.fpr = ratio(cm.fp, cm.fp + cm.tn, "fpr");
    return m;
}

void to_json(nlohmann::json& j, const ConfusionMatrix& cm)
{
    j = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

void to_json(nlohmann::json& j, const MetricsReport& m)
{
    j = {{"variant", m.label},     {"f1", m.f1},   {"recall", m.recall}, {"precision", m.precision},
         {"accuracy", m.accuracy}, {"fpr", m.fpr}, {"confusion", m.cm},  {"degenerate", m.degenerate}};
}

} // namespace scvm::eval

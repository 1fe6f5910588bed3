#include "scvm/agents/fusion.hpp"

#include <algorithm>

namespace scvm::agents {

using nlohmann::json;

const ChannelResult* FusedVerdict::channel(Channel c) const
{
    for (const auto& r : channels) {
        if (r.channel == c)
            return &r;
    }
    return nullptr;
}

double weighted_score(double s_model, double s_static, double s_retrieval, const FusionWeights& w)
{
    return w.model * s_model + w.static_analysis * s_static + w.retrieval * s_retrieval;
}

Verdict majority(const std::vector<Verdict>& votes)
{
    auto yes = std::count(votes.begin(), votes.end(), Verdict::Vulnerable);
    return 2 * static_cast<std::size_t>(yes) > votes.size() ? Verdict::Vulnerable : Verdict::Safe;
}

FusedVerdict fuse(std::vector<ChannelResult> channels, DetectMode mode, const FusionWeights& weights,
                  double threshold)
{
    std::sort(channels.begin(), channels.end(),
              [](const ChannelResult& a, const ChannelResult& b) { return a.channel < b.channel; });
    FusedVerdict out;
    out.mode = mode;
    out.threshold = threshold;
    out.weights = weights;
    out.channels = std::move(channels);
    if (mode == DetectMode::Voting) {
        std::vector<Verdict> votes;
        for (const auto& c : out.channels)
            votes.push_back(c.verdict);
        out.verdict = majority(votes);
        auto yes = std::count(votes.begin(), votes.end(), Verdict::Vulnerable);
        out.score = votes.empty() ? 0.0 : static_cast<double>(yes) / static_cast<double>(votes.size());
        return out;
    }
    double s[3] = {0.0, 0.0, 0.0};
    for (const auto& c : out.channels)
        s[static_cast<int>(c.channel)] = c.score;
    const double score = weighted_score(s[static_cast<int>(Channel::Model)], s[static_cast<int>(Channel::Static)],
                                        s[static_cast<int>(Channel::Retrieval)], weights);
    out.score = std::clamp(score, 0.0, 1.0);
    out.verdict = out.score >= threshold ? Verdict::Vulnerable : Verdict::Safe;
    return out;
}

void to_json(json& j, const FusedVerdict& v)
{
    j = {{"verdict", to_string(v.verdict)},
         {"score", v.score},
         {"mode", to_string(v.mode)},
         {"threshold", v.threshold},
         {"weights", {{"model", v.weights.model}, {"static", v.weights.static_analysis}, {"retrieval", v.weights.retrieval}}},
         {"channels", v.channels}};
}

void from_json(const json& j, FusedVerdict& v)
{
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    v.score = j.at("score").get<double>();
    v.mode = mode_from_string(j.at("mode").get<std::string>());
    v.threshold = j.at("threshold").get<double>();
    v.weights.model = j.at("weights").at("model").get<double>();
    v.weights.static_analysis = j.at("weights").at("static").get<double>();
    v.weights.retrieval = j.at("weights").at("retrieval").get<double>();
    v.channels = j.at("channels").get<std::vector<ChannelResult>>();
}

} // namespace scvm::agents

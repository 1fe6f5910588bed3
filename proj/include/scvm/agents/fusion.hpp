#pragma once

#include "scvm/agents/config.hpp"
#include "scvm/core/finding.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace scvm::agents {

struct FusedVerdict {
    Verdict verdict = Verdict::Safe;
    double score = 0.0;
    DetectMode mode = DetectMode::Weighted;
    /// Results of the channels that ran, in the order static, retrieval, model.
    std::vector<ChannelResult> channels;
    double threshold = kDefaultChannelThreshold;
    FusionWeights weights;

    const ChannelResult* channel(Channel c) const;
};

/// w_model*s_model + w_static*s_static + w_retrieval*s_retrieval.
double weighted_score(double s_model, double s_static, double s_retrieval, const FusionWeights& w);

/// Strict majority of vulnerable votes.
Verdict majority(const std::vector<Verdict>& votes);

/// Weighted and enriched modes threshold the weighted score; voting mode takes the
/// majority of channel verdicts and reports the vulnerable vote share as the score.
/// Channels absent from `channels` contribute zero weight and no vote.
FusedVerdict fuse(std::vector<ChannelResult> channels, DetectMode mode, const FusionWeights& weights,
                  double threshold);

void to_json(nlohmann::json& j, const FusedVerdict& v);
void from_json(const nlohmann::json& j, FusedVerdict& v);

} // namespace scvm::agents

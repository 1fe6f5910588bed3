#include "scvm/sol/scanner.hpp"

#include <algorithm>

namespace scvm::sol {

namespace {

constexpr std::size_t kMaxEvidence = 160;

// Trimmed source line containing `offset`.
std::string evidence_line(const std::string& source, std::size_t offset)
{
    auto begin = source.rfind('\n', offset == 0 ? 0 : offset - 1);
    begin = begin == std::string::npos ? 0 : begin + 1;
    auto end = source.find('\n', offset);
    if (end == std::string::npos)
        end = source.size();
    auto line = source.substr(begin, end - begin);
    auto first = line.find_first_not_of(" \t");
    auto last = line.find_last_not_of(" \t");
    if (first == std::string::npos)
        return {};
    line = line.substr(first, last - first + 1);
    if (line.size() > kMaxEvidence)
        line = line.substr(0, kMaxEvidence - 3) + "...";
    return line;
}

} // namespace

std::vector<Finding> scan(const SourceContract& contract, const RuleSet& rules)
{
    if (rules.empty())
        throw Error("scan requires a non-empty ruleset");
    auto layout = analyze_layout(contract.tokens());
    const auto& tokens = contract.tokens();
    std::vector<Finding> raw;
    for (const auto& fn : layout.functions) {
        MatchContext ctx{contract, layout, fn};
        for (const auto& rule : rules) {
            auto outcome = rule.matcher->evaluate(ctx);
            if (!outcome.matched)
                continue;
            Finding f;
            f.contract_id = contract.id();
            f.vclass = rule.vclass;
            f.location.function = fn.name;
            f.location.span = outcome.anchor ? tokens[*outcome.anchor].span : fn.header_span;
            f.evidence = evidence_line(contract.source(), f.location.span.begin);
            f.channel = Channel::Static;
            f.confidence = rule.default_confidence;
            raw.push_back(std::move(f));
        }
    }
    return merge_findings(raw);
}

ChannelResult static_channel(const SourceContract& contract, const RuleSet& rules)
{
    auto findings = scan(contract, rules);
    double score = 0.0;
    for (const auto& f : findings)
        score = std::max(score, f.confidence);
    ChannelResult r;
    r.channel = Channel::Static;
    r.verdict = findings.empty() ? Verdict::Safe : Verdict::Vulnerable;
    r.score = score;
    r.findings = std::move(findings);
    return r;
}

} // namespace scvm::sol

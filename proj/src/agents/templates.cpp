#include "scvm/agents/pipeline.hpp"

namespace scvm::agents {

namespace {

constexpr const char* kDetectorRolePlay =
    "You are a senior smart contract security auditor specialising in Solidity.";
constexpr const char* kDetectorTask =
    "Decide whether the contract below contains an exploitable vulnerability. Consider access control, "
    "reentrancy, integer arithmetic, unchecked low-level calls, delegatecall targets, randomness and "
    "time dependence.";
constexpr const char* kDetectorOutput =
    "Reply with a single JSON object and nothing else:\n"
    "{{\"verdict\": \"vulnerable\" or \"safe\", \"score\": probability in [0, 1] that the contract is vulnerable, "
    "\"findings\": [{{\"class\": vulnerability class, \"function\": function name, \"evidence\": offending line}}]}}";
constexpr const char* kDetectorBody = "Contract {contract_id}:\n```solidity\n{code}\n```";

} // namespace

const llm::PromptTemplate& detector_template(bool enriched)
{
    static const llm::PromptTemplate plain{kDetectorRolePlay, kDetectorTask, kDetectorOutput,
                                           "No external context is supplied. Rely on your own expertise.",
                                           kDetectorBody};
    static const llm::PromptTemplate rich{
        kDetectorRolePlay, kDetectorTask, kDetectorOutput,
        "Similar audited contracts:\n{similar_contracts}\n\nSecurity knowledge:\n{references}", kDetectorBody};
    return enriched ? rich : plain;
}

const llm::PromptTemplate& advisor_template()
{
    static const llm::PromptTemplate t{
        "You are a smart contract security consultant.",
        "Explain the root cause of the reported vulnerability, its impact, and how to repair and prevent it.",
        "Reply with a single JSON object:\n"
        "{{\"vulnerability_name\": name, \"cause_analysis\": root cause, \"impact_assessment\": what an attacker "
        "gains, \"repair_steps\": [ordered steps], \"preventive_measures\": [practices]}}",
        "Reference material:\n{references}",
        "Reported vulnerability: {vulnerability} in {function}\nEvidence: {evidence}\n\n```solidity\n{code}\n```"};
    return t;
}

const llm::PromptTemplate& assessor_template()
{
    static const llm::PromptTemplate t{
        "You are a risk analyst for smart contract audits.",
        "Assign a risk level to the vulnerability from its exploitability and impact.",
        "Reply with a single JSON object:\n"
        "{{\"level\": \"Critical\", \"High\", \"Medium\" or \"Low\", \"justification\": one sentence}}",
        "Root cause: {cause}\nImpact: {impact}",
        "Vulnerability: {vulnerability} in {function}\nEvidence: {evidence}"};
    return t;
}

const llm::PromptTemplate& fixer_template()
{
    static const llm::PromptTemplate t{
        "You are a Solidity engineer who repairs vulnerable contracts with minimal changes.",
        "Repair the vulnerabilities in the given priority order. Keep the contract interface and unrelated "
        "behaviour unchanged.",
        "Reply with a single JSON object:\n"
        "{{\"repaired_source\": the complete repaired contract, \"rationale\": summary of the changes}}",
        "Repairs in priority order:\n{suggestions}",
        "```solidity\n{code}\n```"};
    return t;
}

const llm::PromptTemplate& verifier_template()
{
    static const llm::PromptTemplate t{
        "You are an independent auditor reviewing a proposed patch.",
        "Check that every listed vulnerability is eliminated and that the patch introduces no new issue.",
        "Reply with a single JSON object:\n"
        "{{\"passed\": true or false, \"remaining\": [classes still present], "
        "\"new_issues\": [{{\"class\": vulnerability class, \"function\": function name, \"evidence\": line}}]}}",
        "Vulnerabilities addressed by the patch:\n{addressed}",
        "Original:\n```solidity\n{original}\n```\n\nPatched:\n```solidity\n{patched}\n```"};
    return t;
}

} // namespace scvm::agents

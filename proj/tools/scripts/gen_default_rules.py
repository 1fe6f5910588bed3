#!/usr/bin/env python3
"""Regenerates data/rules/default.jsonl."""
import json
import pathlib

ALLOW = ["onlyOwner", "onlyAdmin", "onlyRole", "onlyGovernance", "onlyAuthorized", "onlyOperator",
         "onlyMinter", "onlyManager", "onlyController", "auth", "requiresAuth"]
GUARDS = {"any": [
    {"sequence": ["require", "(", "msg", ".", "sender", ["==", "!="]]},
    {"sequence": ["require", "(", "*", "==", "msg", ".", "sender"]},
    {"sequence": ["if", "(", "msg", ".", "sender", "!="]},
    {"sequence": ["if", "(", "*", "!=", "msg", ".", "sender"]},
    {"sequence": ["require", "(", "hasRole", "("]},
    {"sequence": ["_checkOwner", "("]},
]}
CMP = ["==", "!=", "<", ">", "<=", ">=", "%"]
ARITH = ["+", "-", "*", "**", "+=", "-=", "*=", "++", "--"]


def rule(rule_id, cls, swc, description, confidence, matcher):
    return {"rule_id": rule_id, "class": cls, "swc_id": swc, "description": description,
            "confidence": confidence, "matcher": matcher}


RULES = [
    rule("SCVM-REENTRANCY", "Reentrancy", "SWC-107",
         "Value-bearing external call (.call{value:}, .send, .transfer) precedes a storage write in the same function.",
         0.8, {"before": {"first": {"effect": "value_transfer"}, "then": {"effect": "state_write"}}}),
    rule("SCVM-INTEGER-OVERFLOW", "Integer Overflow/Underflow", "SWC-101",
         "Unchecked integer arithmetic under a compiler older than 0.8.0 without SafeMath.",
         0.7, {"all": [{"pragma_below": "0.8.0"}, {"not": {"imports": "SafeMath"}}, {"sequence": [ARITH]}]}),
    rule("SCVM-UNPROTECTED-FUNCTION", "Unprotected Function", "SWC-105",
         "Public or external function changes shared state or moves value without an access modifier or msg.sender guard.",
         0.9, {"all": [{"kind": ["function"]}, {"visibility": ["public", "external", "unspecified"]},
                       {"mutates_state": True}, {"caller_scoped_effects": False},
                       {"not": {"has_modifier": ALLOW}}, {"not": GUARDS}]}),
    rule("SCVM-TX-ORIGIN", "tx.origin Authentication", "SWC-115",
         "tx.origin is compared against an address for authorization.",
         0.9, {"all": [{"any": [{"sequence": ["tx", ".", "origin", ["==", "!="]]},
                                {"sequence": [["==", "!="], "tx", ".", "origin"]}]},
                       {"not": {"any": [{"sequence": ["tx", ".", "origin", "==", "msg", ".", "sender"]},
                                        {"sequence": ["msg", ".", "sender", "==", "tx", ".", "origin"]}]}}]}),
    rule("SCVM-UNCHECKED-CALL", "Unchecked Low-Level Call Return", "SWC-104",
         "Return value of a low-level call is discarded.",
         0.8, {"unchecked_call": ["call", "send", "delegatecall", "staticcall"]}),
    rule("SCVM-TIMESTAMP", "Timestamp Dependence", "SWC-116",
         "block.timestamp or now feeds a comparison or modulo.",
         0.7, {"any": [{"sequence": ["block", ".", "timestamp", CMP]}, {"sequence": [CMP, "block", ".", "timestamp"]},
                       {"sequence": ["now", CMP]}, {"sequence": [CMP, "now"]}]}),
    rule("SCVM-SELFDESTRUCT", "Unprotected selfdestruct", "SWC-106",
         "selfdestruct reachable from a public entry point without access control.",
         0.9, {"all": [{"visibility": ["public", "external", "unspecified"]},
                       {"sequence": [["selfdestruct", "suicide"], "("]},
                       {"not": {"has_modifier": ALLOW}}, {"not": GUARDS}]}),
    rule("SCVM-DELEGATECALL-PARAM", "Delegatecall to Untrusted Callee", "SWC-112",
         "delegatecall target is derived from a function parameter without access control.",
         0.9, {"all": [{"call_on_parameter": ["delegatecall"]}, {"not": {"has_modifier": ALLOW}}, {"not": GUARDS}]}),
]

if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parents[2] / "data" / "rules" / "default.jsonl"
    with out.open("w") as f:
        f.write("# Default pattern library: one JSON rule per line. Format: docs/rules.md\n")
        for r in RULES:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")

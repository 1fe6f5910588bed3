#!/usr/bin/env python3
"""Generate the 40-contract ablation fixture under tests/data/eval/.

Every dataset contract carries ten marker constants. Its five reference documents in
refs.jsonl share 10, 8, 6, 4 and 2 of those markers, which fixes their retrieval
rank; their labels then fix the rank-weighted retrieval score. Detector replies are
scripted per family, so each channel contributes a known signal:

  family  n   gold        model  static rule          retrieval labels
  A       8   vulnerable  0.90   fires                VVVSS (0.80)
  C       6   vulnerable  0.48   none                 VVVVS (0.93)
  D       3   vulnerable  0.45   Unprotected Function VVSSS (0.60)
  B      16   safe        0.10   none                 SSSSS (0.00)
  F       2   safe        0.75   none                 SSSSS (0.00)
  G       2   vulnerable  0.20   none                 SVSSS (0.27)
  H       3   safe        0.10   Timestamp (0.7)      SSSSS (0.00)

With weights (0.7, 0.1, 0.2) and threshold 0.5 this gives F1 0.8947 for W,
0.8000 without static analysis and 0.6875 without retrieval.
"""

import json
import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "..", "tests", "data", "eval")

FAMILIES = {
    "A": dict(n=8, gold="vulnerable", model=0.90, enriched=0.93, labels="VVVSS"),
    "C": dict(n=6, gold="vulnerable", model=0.48, enriched=0.62, labels="VVVVS"),
    "D": dict(n=3, gold="vulnerable", model=0.45, enriched=0.55, labels="VVSSS"),
    "B": dict(n=16, gold="safe", model=0.10, enriched=0.08, labels="SSSSS"),
    "F": dict(n=2, gold="safe", model=0.75, enriched=0.40, labels="SSSSS"),
    "G": dict(n=2, gold="vulnerable", model=0.20, enriched=0.30, labels="SVSSS"),
    "H": dict(n=3, gold="safe", model=0.10, enriched=0.10, labels="SSSSS"),
}

# Bodies that make the static channel fire (A) with the class they exhibit.
A_BODIES = [
    ("Reentrancy", """    mapping(address => uint256) public balances;

    function withdraw() external {
        uint256 amount = balances[msg.sender];
        (bool ok, ) = msg.sender.call{value: amount}("");
        require(ok);
        balances[msg.sender] = 0;
    }
"""),
    ("tx.origin Authentication", """    address public owner;

    function sweep(address payable to) external {
        require(tx.origin == owner);
        to.transfer(address(this).balance);
    }
"""),
    ("Unprotected selfdestruct", """    address public owner;

    function close() external {
        selfdestruct(payable(msg.sender));
    }
"""),
    ("Delegatecall to Untrusted Callee", """    address public owner;

    function forward(address target, bytes calldata data) external {
        (bool ok, ) = target.delegatecall(data);
        require(ok);
    }
"""),
    ("Unchecked Low-Level Call Return", """    address public owner;

    modifier onlyOwner() {
        require(msg.sender == owner);
        _;
    }

    function pay(address payable to, uint256 amount) external onlyOwner {
        to.call{value: amount}("");
    }
"""),
    ("Reentrancy", """    mapping(address => uint256) public credit;

    function claim(uint256 amount) external {
        require(credit[msg.sender] >= amount);
        (bool sent, ) = msg.sender.call{value: amount}("");
        require(sent);
        credit[msg.sender] -= amount;
    }
"""),
    ("Unprotected Function", """    address public owner;

    function setOwner(address next) external {
        owner = next;
    }
"""),
    ("Unprotected selfdestruct", """    address public admin;

    function shutdown(address payable to) public {
        selfdestruct(to);
    }
"""),
]

C_BODY = """    address public owner;
    uint256 public price;

    modifier onlyOwner() {
        _;
    }

    function setPrice(uint256 next) external onlyOwner {
        price = next;
    }
"""

D_BODY = """    uint256 public rate;

    function setRate(uint256 next) external {
        rate = next;
    }
"""

B_BODY = """    address public owner;
    mapping(bytes32 => uint256) private values;

    modifier onlyOwner() {
        require(msg.sender == owner);
        _;
    }

    constructor() {
        owner = msg.sender;
    }

    function put(bytes32 key, uint256 value) external onlyOwner {
        values[key] = value;
    }

    function get(bytes32 key) external view returns (uint256) {
        return values[key];
    }
"""

F_BODY = """    mapping(address => uint256) public balances;

    function withdraw() external {
        uint256 amount = balances[msg.sender];
        balances[msg.sender] = 0;
        (bool ok, ) = msg.sender.call{value: amount}("");
        require(ok, "transfer failed");
    }
"""

G_BODY = """    address public owner;
    bytes32 public answerHash;

    modifier onlyOwner() {
        require(msg.sender == owner);
        _;
    }

    function solve(string calldata answer) external onlyOwner {
        require(keccak256(bytes(answer)) == answerHash);
        answerHash = bytes32(0);
    }
"""

H_BODY = """    address public owner;
    uint256 public deadline;

    modifier onlyOwner() {
        require(msg.sender == owner);
        _;
    }

    function extend(uint256 extra) external onlyOwner {
        require(block.timestamp < deadline, "expired");
        deadline += extra;
    }
"""


def markers(cid):
    return [f"Q{cid}m{j:02d}" for j in range(1, 11)]


def marker_block(names):
    return "".join(f"    uint256 private constant {m} = 1;\n" for m in names)


def main():
    os.makedirs(os.path.join(OUT, "contracts"), exist_ok=True)
    dataset, refs, rules = [], [], []
    index = 0
    a_iter = iter(A_BODIES)
    for family, spec in FAMILIES.items():
        for i in range(spec["n"]):
            index += 1
            cid = f"e{index:02d}"
            name = f"Fixture{family}{cid.upper()}"
            if family == "A":
                cls, body = next(a_iter)
            else:
                cls, body = {
                    "C": ("Unprotected Function", C_BODY),
                    "D": ("Unprotected Function", D_BODY),
                    "B": (None, B_BODY),
                    "F": (None, F_BODY),
                    "G": ("Front-Running", G_BODY),
                    "H": (None, H_BODY),
                }[family]
            mk = markers(cid)
            source = f"pragma solidity ^0.8.0;\n\ncontract {name} {{\n{marker_block(mk)}\n{body}}}\n"
            path = os.path.join("contracts", f"{cid}.sol")
            with open(os.path.join(OUT, path), "w") as f:
                f.write(source)
            vulnerable = spec["gold"] == "vulnerable"
            dataset.append({"id": cid, "source_path": path, "label": spec["gold"],
                            "classes": [cls] if vulnerable else [],
                            "split": "validation" if index % 4 == 0 else "test", "family": family})
            for rank, label in enumerate(spec["labels"], start=1):
                shared = mk[: 12 - 2 * rank]
                ref_vuln = label == "V"
                refs.append({"id": f"ref-{cid}-{rank}", "label": "vulnerable" if ref_vuln else "safe",
                             "classes": [cls or "Unprotected Function"] if ref_vuln else [],
                             "source": f"contract Ref{cid}R{rank} {{\n{marker_block(shared)}}}\n"})
            findings = []
            if spec["model"] >= 0.5:
                findings = [{"class": cls or "Reentrancy", "function": "", "evidence": "", "confidence": spec["model"]}]
            for enriched, score in ((False, spec["model"]), (True, spec["enriched"])):
                rule = {"name": f"{cid}-detect{'-enriched' if enriched else ''}", "role": "detector",
                        "contains": [f"contract {name} "],
                        "response": {"verdict": "vulnerable" if score >= 0.5 else "safe", "score": score,
                                     "findings": findings if score >= 0.5 else []}}
                if enriched:
                    rule["contains"].append("Similar audited contracts:")
                else:
                    rule["absent"] = ["Similar audited contracts:"]
                rules.append(rule)

    with open(os.path.join(OUT, "dataset.jsonl"), "w") as f:
        f.write("# 40-contract ablation fixture; regenerate with tools/scripts/make_eval_fixture.py\n")
        for d in dataset:
            f.write(json.dumps(d) + "\n")
    with open(os.path.join(OUT, "refs.jsonl"), "w") as f:
        for r in refs:
            f.write(json.dumps(r) + "\n")
    with open(os.path.join(OUT, "responder.json"), "w") as f:
        json.dump({"rules": rules}, f, indent=1)
        f.write("\n")
    config = {
        "mode": "weighted",
        "weights": {"model": 0.7, "static": 0.1, "retrieval": 0.2},
        "threshold": 0.5,
        "k": 5,
        "providers": {
            "detector": {"kind": "mock", "model": "scvm-detector-mock", "transcript": "transcript.jsonl"},
            "base": {"kind": "mock", "model": "scvm-base-mock", "transcript": "transcript.jsonl"},
            "verifier": {"kind": "mock", "model": "scvm-verifier-mock", "transcript": "transcript.jsonl"},
        },
        "corpus": "refs.jsonl",
        "kb_dir": "../../../data/kb",
        "output_dir": "scvm-out",
    }
    with open(os.path.join(OUT, "config.json"), "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")
    if not os.path.exists(os.path.join(OUT, "transcript.jsonl")):
        open(os.path.join(OUT, "transcript.jsonl"), "w").close()


if __name__ == "__main__":
    main()

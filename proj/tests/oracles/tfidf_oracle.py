#!/usr/bin/env python3
"""Brute-force TF-IDF oracle.

Generates the fixture corpora under tests/data/retrieval and freezes the expected
idf tables, document weights, pairwise cosines and top-5 neighbor lists.
Written independently of the C++ index: regex tokenizer, dense dict arithmetic,
full sort over all pairs.
"""
import json
import math
import random
import re
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "retrieval"

STRIP = re.compile(r'//[^\n]*|/\*.*?\*/|"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'', re.S)
WORD = re.compile(r"[A-Za-z0-9]+")

NAMES = ["withdraw", "deposit", "transfer_from", "preSign", "claimReward", "setOwner", "mint", "burn",
         "stake", "unstake", "vote", "execute", "settle", "bid", "refund", "pause", "upgradeTo", "swap"]
STATE = ["balances", "owner", "totalSupply", "rewards", "stakes", "votes", "orders", "paused", "admin", "nonces"]
STMTS = [
    "require(msg.sender == {s}, \"not allowed\");",
    "{s}[msg.sender] += amount;",
    "{s}[msg.sender] -= amount;",
    "(bool ok, ) = msg.sender.call{{value: amount}}(\"\");",
    "payable(msg.sender).transfer(amount);",
    "if (block.timestamp > deadline) {{ {s} = 0; }}",
    "emit Updated({s}, amount);",
    "uint256 fee = amount * 3 / 1000;",
    "delete {s}[user];",
    "require(tx.origin == {s});",
    "// TODO: check {s} overflow here",
    "/* legacy {s} path */ {s} = amount;",
]


def tokenize(src):
    return [w.lower() for w in WORD.findall(STRIP.sub(" ", src))]


def make_contract(rng, idx):
    lines = ["pragma solidity ^0.{}.{};".format(rng.choice([6, 7, 8]), rng.randint(0, 12)),
             "contract C{} {{".format(idx)]
    for s in rng.sample(STATE, rng.randint(1, 4)):
        lines.append("    mapping(address => uint256) public {};".format(s))
    for _ in range(rng.randint(1, 4)):
        name = rng.choice(NAMES)
        lines.append("    function {}(uint256 amount) external {{".format(name))
        for _ in range(rng.randint(1, 5)):
            lines.append("        " + rng.choice(STMTS).format(s=rng.choice(STATE)))
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def make_corpus(n, seed):
    rng = random.Random(seed)
    docs = []
    for i in range(n):
        label = "vulnerable" if rng.random() < 0.45 else "safe"
        classes = rng.sample(["Reentrancy", "Unprotected Function", "Timestamp Dependence",
                              "Integer Overflow/Underflow"], rng.randint(1, 2)) if label == "vulnerable" else []
        docs.append({"id": "d{:03d}".format(i), "source": make_contract(rng, i), "label": label, "classes": classes})
    # exact duplicates under different ids exercise the id tie-break
    for j in range(min(3, n // 5)):
        src = docs[j]
        docs.append({"id": "z{:03d}".format(j), "source": src["source"], "label": src["label"],
                     "classes": src["classes"]})
    # an empty document is retained as a zero vector
    docs.append({"id": "empty", "source": "// nothing here\n", "label": "safe", "classes": []})
    return docs


def idf_table(token_lists):
    n = len(token_lists)
    df = {}
    for toks in token_lists:
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    return {t: math.log((1 + n) / (1 + c)) + 1 for t, c in df.items()}


def vectorize(toks, idf):
    if not toks:
        return {}
    counts = {}
    for t in toks:
        counts[t] = counts.get(t, 0) + 1
    raw = {t: (c / len(toks)) * idf[t] for t, c in counts.items() if t in idf}
    norm = math.sqrt(sum(v * v for v in raw.values()))
    return {t: v / norm for t, v in raw.items()} if norm > 0 else {}


def cos(a, b):
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0 or nb == 0:
        return 0.0
    return sum(a[t] * b.get(t, 0.0) for t in a) / (na * nb)


def rank_prob(labels):
    m = len(labels)
    if m == 0:
        return 0.0
    total = m * (m + 1) / 2
    return sum((m + 1 - i) / total for i, lab in enumerate(labels, start=1) if lab == "vulnerable")


def build(n, seed):
    docs = make_corpus(n, seed)
    toks = [tokenize(d["source"]) for d in docs]
    idf = idf_table(toks)
    vecs = [vectorize(t, idf) for t in toks]
    queries = []
    for qi, d in enumerate(docs):
        scored = [(cos(vecs[qi], vecs[j]), docs[j]["id"], docs[j]["label"])
                  for j in range(len(docs)) if docs[j]["id"] != d["id"]]
        scored.sort(key=lambda x: (-x[0], x[1]))
        top = scored[:5]
        queries.append({"id": d["id"], "top5": [[i, s] for s, i, _ in top],
                        "probability": rank_prob([lab for _, _, lab in top])})
    pairs = []
    rng = random.Random(seed + 1)
    for _ in range(40):
        a, b = rng.randrange(len(docs)), rng.randrange(len(docs))
        pairs.append([docs[a]["id"], docs[b]["id"], cos(vecs[a], vecs[b])])
    stride = 1 if n <= 50 else 10
    weights = {docs[i]["id"]: vecs[i] for i in range(0, len(docs), stride)}
    weights["empty"] = {}
    # sample tokenizations let the C++ side check the tokenizer against this one
    tokens = {docs[i]["id"]: toks[i] for i in range(0, len(docs), max(1, len(docs) // 5))}
    return docs, {"documents": len(docs), "idf": idf, "weights": weights, "cosines": pairs,
                  "queries": queries, "tokens": tokens}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for n, seed in ((10, 101), (50, 202), (200, 303)):
        docs, expected = build(n, seed)
        with open(OUT / "corpus_{}.jsonl".format(n), "w") as f:
            for d in docs:
                f.write(json.dumps(d, sort_keys=True) + "\n")
        with open(OUT / "expected_{}.json".format(n), "w") as f:
            json.dump(expected, f, sort_keys=True, indent=1)
            f.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Fill a mock transcript by replaying an scvm command until no prompt is unanswered.

Each pass runs the command with --record-misses, answers every missed prompt from
the responder rules and appends the answers to the transcript. Repair prompts are
left unanswered unless a rule sets "repair": true.

Responder file:
  {"rules": [{"name": "...", "role": "detector", "contains": ["..."], "absent": ["..."],
              "response": {... JSON object ...} | "raw text", "repair": false}]}
String values of the form "@file:relative/path" are replaced by that file's content.
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile

REPAIR_MARKER = "\n### Repair\n"


def expand(value, base):
    if isinstance(value, str) and value.startswith("@file:"):
        with open(os.path.join(base, value[len("@file:"):]), encoding="utf-8") as f:
            return f.read()
    if isinstance(value, dict):
        return {k: expand(v, base) for k, v in value.items()}
    if isinstance(value, list):
        return [expand(v, base) for v in value]
    return value


def render(response):
    if isinstance(response, str):
        return response
    return "```json\n" + json.dumps(response, indent=2) + "\n```"


def pick(rules, role, prompt):
    is_repair = REPAIR_MARKER in prompt
    for rule in rules:
        if rule["role"] != role or is_repair and not rule.get("repair", False):
            continue
        if all(s in prompt for s in rule.get("contains", [])) and not any(s in prompt for s in rule.get("absent", [])):
            return rule
    return None


def load_keys(path):
    keys = set()
    if os.path.exists(path):
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    rec = json.loads(line)
                    keys.add((rec["role"], rec["fingerprint"]))
    return keys


def prune(args, command):
    """Drops entries the final run no longer asks for (answers to superseded prompts)."""
    with tempfile.TemporaryDirectory() as tmp:
        log = os.path.join(tmp, "exchanges.jsonl")
        subprocess.run([args.scvm, *command, "--exchange-log", log], stdout=subprocess.DEVNULL,
                       stderr=subprocess.DEVNULL, check=False)
        used = set()
        if os.path.exists(log):
            with open(log, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        rec = json.loads(line)
                        used.add((rec["role"], rec["fingerprint"]))
    with open(args.transcript, encoding="utf-8") as f:
        records = [json.loads(line) for line in f if line.strip()]
    kept = [r for r in records if (r["role"], r["fingerprint"]) in used]
    kept.sort(key=lambda r: (r["role"], r["fingerprint"]))
    with open(args.transcript, "w", encoding="utf-8") as f:
        for r in kept:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    if len(kept) != len(records):
        print(f"pruned {len(records) - len(kept)} unused response(s)")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scvm", required=True, help="scvm executable")
    ap.add_argument("--responder", required=True)
    ap.add_argument("--transcript", required=True)
    ap.add_argument("--max-passes", type=int, default=12)
    ap.add_argument("command", nargs=argparse.REMAINDER, help="-- followed by scvm arguments")
    args = ap.parse_args()
    command = args.command[1:] if args.command[:1] == ["--"] else args.command

    base = os.path.dirname(os.path.abspath(args.responder))
    with open(args.responder, encoding="utf-8") as f:
        rules = [expand(r, base) for r in json.load(f)["rules"]]
    known = load_keys(args.transcript)

    for n in range(1, args.max_passes + 1):
        with tempfile.TemporaryDirectory() as tmp:
            misses_path = os.path.join(tmp, "misses.jsonl")
            subprocess.run([args.scvm, *command, "--record-misses", misses_path], stdout=subprocess.DEVNULL,
                           stderr=subprocess.DEVNULL, check=False)
            misses = []
            if os.path.exists(misses_path):
                with open(misses_path, encoding="utf-8") as f:
                    misses = [json.loads(line) for line in f if line.strip()]
        added = []
        unmatched = 0
        for m in misses:
            key = (m["role"], m["fingerprint"])
            if key in known:
                continue
            rule = pick(rules, m["role"], m["prompt"])
            if rule is None:
                if REPAIR_MARKER not in m["prompt"]:
                    unmatched += 1
                    print(f"no rule for {m['role']} prompt:\n{m['prompt'][:400]}\n", file=sys.stderr)
                continue
            known.add(key)
            added.append({"role": m["role"], "fingerprint": m["fingerprint"], "rule": rule.get("name", ""),
                          "response": render(rule["response"])})
        if unmatched:
            print(f"pass {n}: {unmatched} prompt(s) matched no rule", file=sys.stderr)
            return 1
        if not added:
            prune(args, command)
            print(f"transcript complete after {n - 1} pass(es)")
            return 0
        with open(args.transcript, "a", encoding="utf-8") as f:
            for rec in sorted(added, key=lambda r: (r["role"], r["fingerprint"])):
                f.write(json.dumps(rec, sort_keys=True) + "\n")
        print(f"pass {n}: added {len(added)} response(s)")
    print("gave up: prompts keep changing", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())

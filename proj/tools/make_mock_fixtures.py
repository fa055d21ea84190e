#!/usr/bin/env python3
"""Regenerate the mock backend fixtures for the pilot corpus.

Builds every (record, shot) prompt with the prefcon CLI, then writes a
response per prompt digest. Responses are derived from the gold constraints
with deterministic, setting-dependent distortions so the offline run yields
non-trivial scores.
"""

import argparse
import hashlib
import json
import re
import subprocess
import sys

SHOTS = ["0s", "1s", "fs"]
# Probability-like thresholds (out of 100) of distorting one constraint.
NOISE = {"0s": 70, "1s": 40, "fs": 15}


def pick(*parts):
    h = hashlib.sha256("|".join(parts).encode()).digest()
    return int.from_bytes(h[:4], "big")


def wrong_condition(c):
    head, cond = c.split(" ∀ ", 1)
    if cond == "t":
        return head + " ∀ t ≥ 08:00"
    return head + " ∀ t"


def wrong_value(c):
    if c.startswith("s_t = 1"):
        return c.replace("s_t = 1", "s_t = 0", 1)
    if c.startswith("s_t = 0"):
        return c.replace("s_t = 0", "s_t = 1", 1)
    m = re.match(r"h_t = (\d+)", c)
    return c.replace(m.group(0), "h_t = %d" % (int(m.group(1)) + 5), 1)


def ascii_style(c):
    return c.replace("∀", "forall").replace("≤", "<=").replace("≥", ">=")


def wrong_minutes(c):
    return re.sub(r"(\d\d):(\d\d)", lambda m: "%d:%02d" % ((int(m.group(1)) + 1) % 24, int(m.group(2))), c, count=1)


def distort(c, record_id, shot, i):
    roll = pick(record_id, shot, str(i)) % 100
    if roll >= NOISE[shot]:
        return c if pick(record_id, shot, str(i), "style") % 3 else ascii_style(c)
    kind = pick(record_id, shot, str(i), "kind") % 4
    return [wrong_condition, wrong_value, wrong_minutes, lambda x: wrong_value(wrong_condition(x))][kind](c)


def respond(record, shot):
    lines = [distort(c, record["id"], shot, i) for i, c in enumerate(record["constraints"])]
    style = pick(record["id"], shot, "wrap") % 4
    if shot == "0s" and style == 0:
        return "Ecco i vincoli richiesti: " + "; ".join("$" + l + "$" for l in lines)
    if shot == "0s" and style == 1:
        # truncated by the generation cap
        text = "Vincoli: " + " ".join(lines)
        return text[: max(12, len(text) - 6)]
    if style == 2:
        return "\n".join("`" + l + "`" for l in lines)
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--prefcon", required=True, help="path to the prefcon binary")
    ap.add_argument("--data", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", default="0")
    ap.add_argument("--template", default="it-v1")
    ap.add_argument("--templates-dir")
    args = ap.parse_args()

    records = [json.loads(l) for l in open(args.data, encoding="utf-8") if l.strip()]
    fixtures = {}
    for r in records:
        for shot in SHOTS:
            cmd = [args.prefcon, "prompt", "--json", "--data", args.data, "--record", r["id"],
                   "--shot", shot, "--seed", args.seed, "--template", args.template]
            if args.templates_dir:
                cmd += ["--templates-dir", args.templates_dir]
            out = subprocess.run(cmd, check=True, capture_output=True, text=True).stdout
            fixtures[json.loads(out)["prompt_digest"]] = respond(r, shot)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(fixtures, f, ensure_ascii=False, indent=1, sort_keys=True)
        f.write("\n")
    print("wrote %d fixtures to %s" % (len(fixtures), args.out), file=sys.stderr)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Stand-in zkVM toolchain for adapter tests.

prove:  fake_zkvm.py prove --program-image IMG --spec SPEC --issued-at T --proof-out OUT INPUT
lie:    like prove, but reports a different category
verify: fake_zkvm.py verify --program-image IMG --program-digest HEX --journal J --proof P
"""
import hashlib
import json
import sys

BANDS = [(0, 5, "conservative"), (6, 10, "steady_growth"), (11, 15, "balanced"), (16, 20, "aggressive")]
VERSION = "risk-trait-inference/0.1.0"


def flags(argv):
    opts, rest = {}, []
    it = iter(argv)
    for a in it:
        if a.startswith("--"):
            opts[a[2:]] = next(it)
        else:
            rest.append(a)
    return opts, rest


def canonical(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


def tag(image_digest, journal_bytes):
    return hashlib.sha256(b"FAKE\x1e" + image_digest + b"\x1e" + journal_bytes).digest()


def prove(opts, rest, lie=False):
    spec = json.load(open(opts["spec"]))
    answers = json.load(open(rest[0]))["answers"]
    score = sum(q["option_points"][a] for q, a in zip(spec["questions"], answers))
    category = next(c for lo, hi, c in BANDS if lo <= score <= hi)
    canon = spec["version"].encode() + b"\x1e"
    for q in spec["questions"]:
        canon += q["text"].encode() + b"".join(b"\x1f" + o.encode() for o in q["options"]) + b"\x1e"
    if lie:
        category = "aggressive" if category != "aggressive" else "conservative"
    journal = {
        "category": category,
        "issued_at": int(opts["issued-at"]),
        "program_version": VERSION,
        "spec_digest": hashlib.sha256(VERSION.encode() + b"\x1e" + canon).hexdigest(),
    }
    image = hashlib.sha256(open(opts["program-image"], "rb").read()).digest()
    open(opts["proof-out"], "wb").write(tag(image, canonical(journal)))
    print(json.dumps(journal))


def verify(opts, _rest):
    image = hashlib.sha256(open(opts["program-image"], "rb").read()).digest()
    if image.hex() != opts["program-digest"]:
        return 1
    journal = open(opts["journal"], "rb").read()
    proof = open(opts["proof"], "rb").read()
    return 0 if proof == tag(image, journal) else 1


if __name__ == "__main__":
    mode, argv = sys.argv[1], sys.argv[2:]
    opts, rest = flags(argv)
    if mode in ("prove", "lie"):
        prove(opts, rest, lie=mode == "lie")
    else:
        sys.exit(verify(opts, rest))

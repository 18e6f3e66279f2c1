"""How often the interpolation pipeline succeeds on random provable implications.

Failures are expected only when a binary rule sees interpolant pairs at
different components on its two premises (see README).
"""

import argparse
import json
from collections import Counter
from dataclasses import asdict, dataclass

from nestedigl.calculus import check_proof
from nestedigl.corpus import random_proofs
from nestedigl.formula import to_text
from nestedigl.interpolate import InterpolationError, lyndon_interpolant, signature_ok


@dataclass
class Config:
    seed: int = 0
    count: int = 200
    depth: int = 3
    modes: tuple[str, ...] = ("meet", "join")


def run(cfg: Config) -> dict:
    items = random_proofs(cfg.seed, cfg.count, depth=cfg.depth)
    ok = Counter()
    failed = Counter()
    examples = []
    for it in items:
        if it.proof.rule.rule != "impR" or it.proof.conclusion.children:
            continue
        f = it.proof.conclusion.con[0]
        for mode in cfg.modes:
            try:
                i, pa, pb = lyndon_interpolant(it.proof, it.axioms, mode=mode)
                check_proof(pa, it.axioms)
                check_proof(pb, it.axioms)
                assert signature_ok(i, f.left, f.right)
                ok[mode] += 1
            except InterpolationError as e:
                failed[mode] += 1
                if len(examples) < 5:
                    examples.append({"goal": to_text(f), "mode": mode, "reason": str(e)[:120]})
    return {"config": asdict(cfg), "proofs": len(items), "ok": dict(ok), "failed": dict(failed),
            "examples": examples}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--depth", type=int, default=3)
    a = ap.parse_args()
    print(json.dumps(run(Config(a.seed, a.count, a.depth)), indent=2))


if __name__ == "__main__":
    main()

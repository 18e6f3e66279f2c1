"""Cut elimination over generated cut instances: reduction cases, depth, size growth."""

import argparse
import json
import time
from collections import Counter
from dataclasses import asdict, dataclass

from nestedigl.calculus import check_proof
from nestedigl.corpus import cut_instances
from nestedigl.transform import CutMonitor, eliminate_cut


@dataclass
class Config:
    seed: int = 11
    count: int = 100


def run(cfg: Config) -> dict:
    cases = Counter()
    depth = 0
    growth = []
    violations = 0
    t = time.perf_counter()
    instances = cut_instances(cfg.seed, cfg.count)
    for c in instances:
        mon = CutMonitor()
        out = eliminate_cut(c.left, c.right, c.at, c.formula, c.axioms, mon)
        check_proof(out, c.axioms)
        cases.update(mon.cases)
        depth = max(depth, mon.max_depth)
        violations += len(mon.violations)
        growth.append(out.size / (c.left.size + c.right.size))
    return {
        "config": asdict(cfg),
        "instances": len(instances),
        "seconds": round(time.perf_counter() - t, 2),
        "max_depth": depth,
        "measure_violations": violations,
        "mean_size_ratio": round(sum(growth) / max(1, len(growth)), 3),
        "max_size_ratio": round(max(growth, default=0), 3),
        "cases": dict(cases.most_common()),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--count", type=int, default=100)
    a = ap.parse_args()
    print(json.dumps(run(Config(a.seed, a.count)), indent=2))


if __name__ == "__main__":
    main()

"""Regenerate tests/data/b1_random_hits.json.

Feeds one million uniformly random 64-byte inputs to the chunkfmt target
and counts how many trip bug B1.  The point of the fixture is the base rate:
random inputs essentially never reach B1, so any B1 found by a campaign is
attributable to the campaign, not to luck.

Usage: python3 tools/b1_fixture.py [rng_seed]
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from structfuzz.targets import C_BUG_B1, TargetCrash, chunkfmt

SAMPLES = 1_000_000
INPUT_LEN = 64


def main():
    rng_seed = int(sys.argv[1]) if len(sys.argv) > 1 else 20240611
    rng = random.Random(rng_seed)
    hits = 0
    for _ in range(SAMPLES):
        trace = {}
        try:
            chunkfmt(rng.randbytes(INPUT_LEN), trace)
        except TargetCrash:
            if C_BUG_B1 in trace:
                hits += 1
    out = {
        "rng_seed": rng_seed,
        "samples": SAMPLES,
        "input_len": INPUT_LEN,
        "b1_hits": hits,
        "command": f"python3 tools/b1_fixture.py {rng_seed}",
    }
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "b1_random_hits.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=1) + "\n", encoding="utf-8")
    print(json.dumps(out))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerate tests/fixtures/pattern_fixture.json.

The expected numbers are computed HERE, from the closed-form Wilson score
interval and the Newcombe hybrid composition, written out independently of
the package (this script imports nothing from it). The accompanying
pattern_fixture.md walks through the same arithmetic by hand.

Fixture design (thresholds fixed at p25=-0.1, p75=+0.1, boundaries Stable):

  diagnostic      mixed offsets; losses -0.3,-0.2,-0.15,0.0,+0.2,+0.3
                  wins -0.2,-0.1,0.0,+0.1,+0.15,+0.25
                  -> loss D/S/I = 3/1/2, win D/S/I = 1/3/2
  prognostic      losses all +0.2 (Increase), wins all -0.2 (Decrease)
  motivational,
  community,
  engagement      all offsets 0.0 (Stable everywhere)

Two orgs with 3 wins + 3 losses each, so per-org balancing keeps every
instance no matter the seed and the counts above are deterministic.
"""

import json
import math
from pathlib import Path

Z = 1.959963984540054  # two-sided 95% normal quantile

FRAMES = ("diagnostic", "prognostic", "motivational", "community", "engagement")

# per-frame offsets per instance, in fixed (org, index) order
LOSS_O = {
    "diagnostic": [-0.3, 0.0, 0.2, -0.2, -0.15, 0.3],
    "prognostic": [0.2] * 6,
}
WIN_O = {
    "diagnostic": [-0.2, -0.1, 0.15, 0.0, 0.1, 0.25],
    "prognostic": [-0.2] * 6,
}
for f in ("motivational", "community", "engagement"):
    LOSS_O[f] = [0.0] * 6
    WIN_O[f] = [0.0] * 6

THRESHOLDS = {f: (-0.1, 0.1) for f in FRAMES}


def classify(o, p25, p75):
    if o < p25:
        return "decrease"
    if o > p75:
        return "increase"
    return "stable"


def wilson(k, n):
    p = k / n
    denom = 1 + Z * Z / n
    center = (p + Z * Z / (2 * n)) / denom
    half = (Z / denom) * math.sqrt(p * (1 - p) / n + Z * Z / (4 * n * n))
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


def newcombe(k1, n1, k2, n2):
    p1, p2 = k1 / n1, k2 / n2
    l1, u1 = wilson(k1, n1)
    l2, u2 = wilson(k2, n2)
    d = p1 - p2
    lo = d - math.sqrt((p1 - l1) ** 2 + (u2 - p2) ** 2)
    hi = d + math.sqrt((u1 - p1) ** 2 + (p2 - l2) ** 2)
    return d, lo, hi


def main() -> None:
    instances = []
    for oi, org in enumerate(("org-a", "org-b")):
        for j in range(3):
            idx = oi * 3 + j
            instances.append(
                {
                    "case_id": f"{org}-loss-{j}",
                    "org": org,
                    "outcome": "loss",
                    "o": {f: LOSS_O[f][idx] for f in FRAMES},
                }
            )
            instances.append(
                {
                    "case_id": f"{org}-win-{j}",
                    "org": org,
                    "outcome": "win",
                    "o": {f: WIN_O[f][idx] for f in FRAMES},
                }
            )

    cells = []
    for f in FRAMES:
        loss_pats = [classify(o, *THRESHOLDS[f]) for o in LOSS_O[f]]
        win_pats = [classify(o, *THRESHOLDS[f]) for o in WIN_O[f]]
        for pat in ("decrease", "stable", "increase"):
            k_loss = loss_pats.count(pat)
            k_win = win_pats.count(pat)
            d, lo, hi = newcombe(k_loss, 6, k_win, 6)
            cells.append(
                {
                    "frame": f,
                    "pattern": pat,
                    "k_loss": k_loss,
                    "n_loss": 6,
                    "k_win": k_win,
                    "n_win": 6,
                    "prop_loss": k_loss / 6,
                    "prop_win": k_win / 6,
                    "diff": d,
                    "ci_low": lo,
                    "ci_high": hi,
                    "significant": lo > 0 or hi < 0,
                }
            )

    out = {
        "thresholds": {f: list(THRESHOLDS[f]) for f in FRAMES},
        "alpha": 0.05,
        "instances": instances,
        "expected_cells": cells,
    }
    path = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "pattern_fixture.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")
    sig = [(c["frame"], c["pattern"]) for c in cells if c["significant"]]
    print(f"wrote {path}")
    print(f"significant cells: {sig}")


if __name__ == "__main__":
    main()

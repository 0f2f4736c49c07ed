#!/usr/bin/env python3
"""Regenerate the bundled sample dataset under data/sample.

The sample is a small synthetic corpus (6 orgs, 4 elections each, one year of
posts) with a known usage shift before won elections, plus the lexicon,
registry, and run config needed to drive the full pipeline. Everything is
seeded, so rerunning this script reproduces the files byte for byte.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from framestudy.ingest import Outcome
from framestudy.synth import (
    Effect,
    ScenarioConfig,
    default_lexicon,
    generate_scenario,
    write_scenario,
)

OUT = Path(__file__).resolve().parents[1] / "data" / "sample"

STRUCTURES = ("craft", "industrial")


def main() -> None:
    config = ScenarioConfig(
        n_orgs=6,
        n_days=365,
        cases_per_org=4,
        daily_rate=1.5,
        win_fraction=0.5,
        effects=(
            Effect(Outcome.WIN, "diagnostic", (-7, -3), 0.15),
            Effect(Outcome.WIN, "community", (-7, -3), 0.10),
        ),
        seed=1234,
    )
    scenario = generate_scenario(config, text_mode="phrases")
    write_scenario(scenario, OUT, strip_labels=True)

    (OUT / "lexicon.json").write_text(
        json.dumps(default_lexicon(), indent=2, sort_keys=True) + "\n"
    )

    with open(OUT / "orgs.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("canonical_id,full_name,structure\n")
        for i in range(config.n_orgs):
            fh.write(
                f"org-{i:02d},Allied Workers Local {100 + i},{STRUCTURES[i % 2]}\n"
            )

    (OUT / "run.cfg").write_text(
        "# inputs (paths relative to the repository root)\n"
        "posts = data/sample/posts.jsonl\n"
        "elections = data/sample/elections.csv\n"
        "rules = data/sample/rules.jsonl\n"
        "lexicon = data/sample/lexicon.json\n"
        "registry = data/sample/orgs.csv\n"
        "out = out\n"
        "\n"
        "# analysis settings\n"
        "seed = 7\n"
        "window_days = 5\n"
        "pre = -7 -3\n"
        "post = 3 7\n"
        "baseline_span = 18\n"
        "alpha = 0.05\n"
        "baseline_seeds = 5\n"
        "robustness_seeds = 20\n"
    )
    n_posts = len(scenario.posts)
    print(f"wrote sample dataset to {OUT} ({n_posts} posts)")


if __name__ == "__main__":
    main()

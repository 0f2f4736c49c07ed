"""Command-line front end wiring all modules into reproducible runs.

Every subcommand writes its artifacts plus a manifest.json recording the
effective configuration, the base seed, input digests, and the tool version,
so a run can be reproduced exactly from the manifest. Output files contain no
timestamps, floats are written with repr() for lossless round-trips, and all
aggregation is sorted, so identical (config, inputs, seed) produce
byte-identical outputs at any thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace

from . import __version__
from .analysis import (
    baseline_frame_distribution,
    hierarchical_cluster,
    load_registry,
    pre_election_comparison,
    prepost_pattern_table,
    robustness_run,
    union_deviation_matrix,
)
from .eventstudy import (
    WindowSpec,
    build_instances,
    classify_instances,
    write_instances_csv,
)
from .frames import (
    FRAMES,
    attach_labels,
    classify_lexicon,
    frame_coverage,
    load_labels,
    load_lexicon,
)
from .ingest import (
    Outcome,
    derive_outcomes,
    load_posts,
    load_rules,
    normalize_cases,
    parse_elections,
    write_posts,
)
from .parallel import parallel_map
from .synth import Effect, ScenarioConfig, generate_scenario, write_scenario
from .timeseries import daily_counts, roll


@dataclass
class RunConfig:
    elections: str | None = None
    posts: str | None = None
    rules: str | None = None
    lexicon: str | None = None
    labels: str | None = None
    registry: str | None = None
    out: str = "out"
    window_days: int = 5
    pre: tuple = (-7, -3)
    post: tuple = (3, 7)
    baseline_span: int = 18
    alpha: float = 0.05
    baseline_seeds: int = 5
    robustness_seeds: int = 20
    seed: int = 0
    pooled: bool = False
    cap_percentile: float = 90.0
    consensus: float = 0.8

    def window_spec(self) -> WindowSpec:
        return WindowSpec(
            pre=tuple(self.pre), post=tuple(self.post), baseline_span=self.baseline_span
        )


def _parse_pair(raw: str) -> tuple:
    parts = raw.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {raw!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


_COERCE = {
    "window_days": int,
    "baseline_span": int,
    "baseline_seeds": int,
    "robustness_seeds": int,
    "seed": int,
    "alpha": float,
    "cap_percentile": float,
    "consensus": float,
    "pre": _parse_pair,
    "post": _parse_pair,
    "pooled": _parse_bool,
}


def load_config_file(path) -> dict:
    """Parse a key=value config file; # starts a comment, blank lines skipped."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{n}: unknown config key {key!r}")
            out[key] = _COERCE.get(key, str)(value)
    return out


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = replace(cfg, **load_config_file(args.config))
    overrides = {}
    for name in (
        "elections",
        "posts",
        "rules",
        "lexicon",
        "labels",
        "registry",
        "out",
        "window_days",
        "baseline_span",
        "alpha",
        "seed",
        "cap_percentile",
        "consensus",
    ):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    for name in ("pre", "post"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = tuple(v)
    if getattr(args, "pooled", False):
        overrides["pooled"] = True
    if getattr(args, "seeds", None) is not None:
        overrides["baseline_seeds"] = args.seeds
        overrides["robustness_seeds"] = args.seeds
    return replace(cfg, **overrides)


# -- serialization helpers -----------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(cfg: RunConfig, subcommand: str) -> None:
    inputs = {}
    for name in ("elections", "posts", "rules", "lexicon", "labels", "registry"):
        path = getattr(cfg, name)
        if path and os.path.exists(path):
            inputs[name] = {"path": path, "sha256": _sha256(path)}
    manifest = {
        "version": __version__,
        "subcommand": subcommand,
        "seed": cfg.seed,
        # out is where this manifest itself lives; echoing it would make
        # otherwise-identical runs differ by output directory alone
        "config": {
            f.name: (list(v) if isinstance(v := getattr(cfg, f.name), tuple) else v)
            for f in fields(cfg)
            if f.name != "out"
        },
        "inputs": inputs,
    }
    _write_json(os.path.join(cfg.out, "manifest.json"), manifest)


# -- pipeline stages -----------------------------------------------------------


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        raise ValueError(f"missing required input path(s): {', '.join(missing)}")
    for n in names:
        path = getattr(cfg, n)
        if not os.path.exists(path):
            raise FileNotFoundError(f"{n} file not found: {path}")


def _load_cases(cfg: RunConfig):
    parsed = parse_elections(cfg.elections)
    unmatched = []
    cases = parsed.cases
    if cfg.rules:
        rules = load_rules(cfg.rules)
        cases, unmatched = normalize_cases(cases, rules)
    return parsed, cases, unmatched


def _tracked_orgs(cfg: RunConfig, posts) -> set:
    if cfg.registry:
        return set(load_registry(cfg.registry))
    return {p.org for p in posts}


def _labeled_posts(cfg: RunConfig):
    result = load_posts(cfg.posts)
    posts = result.posts
    if cfg.labels:
        labels = load_labels(cfg.labels)
        posts, report = attach_labels(posts, labels)
        posts = [p for p in posts if p.labels is not None]
    elif cfg.lexicon:
        lexicon = load_lexicon(cfg.lexicon)
        labeled = parallel_map(
            lambda chunk: [replace(p, labels=classify_lexicon(p, lexicon)) for p in chunk],
            _chunks(posts, 512),
        )
        posts = [p for chunk in labeled for p in chunk]
    else:
        posts = [p for p in posts if p.labels is not None]
    if not posts:
        raise ValueError("no labeled posts available")
    return posts, result.rejects


def _chunks(items, size):
    items = list(items)
    return [items[i : i + size] for i in range(0, len(items), size)]


def _posts_by_org(posts) -> dict:
    groups: dict[str, list] = {}
    for p in posts:
        groups.setdefault(p.org, []).append(p)
    return groups


def _rolled_series(posts, window_days: int) -> dict:
    groups = _posts_by_org(posts)
    orgs = sorted(groups)
    rolled = parallel_map(
        lambda org: roll(daily_counts(groups[org], org), window_days), orgs
    )
    return dict(zip(orgs, rolled))


def _instances(cfg: RunConfig, posts, window_days: int | None = None):
    """Posts + elections -> classified event-study instances."""
    _, cases, _ = _load_cases(cfg)
    tracked = _tracked_orgs(cfg, posts)
    outcomes = [o for c in cases for o in derive_outcomes(c, tracked)]
    series = _rolled_series(posts, window_days or cfg.window_days)
    instances, dropped = build_instances(series, outcomes, cfg.window_spec())
    thresholds = classify_instances(instances)
    return instances, dropped, thresholds


# -- subcommands ----------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> None:
    _require(cfg, "elections")
    parsed, cases, unmatched = _load_cases(cfg)
    tracked = None
    if cfg.registry:
        tracked = set(load_registry(cfg.registry))
    _write_csv(
        os.path.join(cfg.out, "cases.csv"),
        ["case_id", "election_date", "participants", "winner"],
        [
            (c.case_id, c.election_date.isoformat(), ";".join(c.participants), c.winner_raw or "")
            for c in cases
        ],
    )
    outcome_rows = []
    for c in cases:
        for o in derive_outcomes(c, tracked if tracked is not None else set(c.participants)):
            outcome_rows.append(
                (o.case_id, o.org, o.outcome.value, o.election_date.isoformat())
            )
    _write_csv(
        os.path.join(cfg.out, "outcomes.csv"),
        ["case_id", "org", "outcome", "election_date"],
        outcome_rows,
    )
    _write_csv(
        os.path.join(cfg.out, "rejects.csv"),
        ["reason", "line", "case_id"],
        [(r.reason, r.line if r.line is not None else "", r.case_id or "") for r in parsed.rejects],
    )
    _write_csv(
        os.path.join(cfg.out, "unmatched.csv"),
        ["raw"],
        [(u.raw,) for u in unmatched],
    )


def cmd_label(cfg: RunConfig) -> None:
    _require(cfg, "posts")
    if not cfg.labels and not cfg.lexicon:
        raise ValueError("label needs either a labels file or a lexicon")
    posts, _ = _labeled_posts(cfg)
    write_posts(posts, os.path.join(cfg.out, "labeled_posts.jsonl"))
    cov = frame_coverage(posts)
    _write_csv(
        os.path.join(cfg.out, "coverage.csv"),
        ["metric", "value"],
        [("total", cov.n_total), ("labeled", cov.n_labeled), ("any_frame", cov.n_any_frame)]
        + [(f, cov.per_frame[f]) for f in FRAMES],
    )


def cmd_baseline(cfg: RunConfig) -> None:
    _require(cfg, "posts")
    posts, _ = _labeled_posts(cfg)
    dist = baseline_frame_distribution(
        _posts_by_org(posts), n_seeds=cfg.baseline_seeds, base_seed=cfg.seed
    )
    _write_csv(
        os.path.join(cfg.out, "baseline_distribution.csv"),
        ["frame", "median", "n_seeds", "floor"],
        [(f, dist.median[f], dist.n_seeds, dist.floor) for f in FRAMES],
    )


def cmd_cluster(cfg: RunConfig) -> None:
    _require(cfg, "posts")
    posts, _ = _labeled_posts(cfg)
    groups = _posts_by_org(posts)
    dist = baseline_frame_distribution(groups, n_seeds=cfg.baseline_seeds, base_seed=cfg.seed)
    registry = load_registry(cfg.registry) if cfg.registry else None
    matrix = union_deviation_matrix(groups, dist, registry)
    merges, leaf_order = hierarchical_cluster(matrix)
    _write_csv(
        os.path.join(cfg.out, "deviation_matrix.csv"),
        ["org", "structure", *FRAMES],
        [
            (
                org,
                matrix.structure.get(org, ""),
                *[matrix.values[r, k] for k in range(len(FRAMES))],
            )
            for r, org in enumerate(matrix.orgs)
        ],
    )
    dendrogram = {
        "leaves": matrix.orgs,
        "leaf_order": leaf_order,
        "merges": [
            {"left": m.left, "right": m.right, "distance": m.distance, "size": m.size}
            for m in merges
        ],
    }
    _write_json(os.path.join(cfg.out, "dendrogram.json"), dendrogram)
    _write_json(
        os.path.join(cfg.out, "plot_deviation.json"),
        {
            "orgs": matrix.orgs,
            "frames": list(matrix.frames),
            "values": [
                [None if math.isnan(v) else v for v in row] for row in matrix.values.tolist()
            ],
            "structure": matrix.structure,
            "undefined_frames": matrix.undefined_frames,
            "dendrogram": dendrogram,
        },
    )


def cmd_eventstudy(cfg: RunConfig) -> None:
    _require(cfg, "posts", "elections")
    posts, _ = _labeled_posts(cfg)
    instances, dropped, thresholds = _instances(cfg, posts)
    write_instances_csv(instances, os.path.join(cfg.out, "instances.csv"))
    _write_csv(
        os.path.join(cfg.out, "dropped.csv"),
        ["case_id", "org", "outcome", "reason"],
        [(d.case_id, d.org, d.outcome.value, d.reason) for d in dropped],
    )
    _write_csv(
        os.path.join(cfg.out, "thresholds.csv"),
        ["frame", "p25", "p75"],
        [
            (f, *(thresholds[f] if thresholds[f] is not None else (None, None)))
            for f in FRAMES
        ],
    )


def cmd_compare_pre(cfg: RunConfig) -> None:
    _require(cfg, "posts", "elections")
    posts, _ = _labeled_posts(cfg)
    instances, _, _ = _instances(cfg, posts)
    rows = pre_election_comparison(instances, base_seed=cfg.seed, pooled=cfg.pooled)
    _write_csv(
        os.path.join(cfg.out, "pre_election.csv"),
        [
            "frame",
            "n_loss",
            "n_win",
            "mean_loss",
            "mean_win",
            "ci_loss_low",
            "ci_loss_high",
            "ci_win_low",
            "ci_win_high",
            "t",
            "df",
            "p",
            "stars",
        ],
        [
            (
                c.frame,
                c.n_loss,
                c.n_win,
                c.mean_loss,
                c.mean_win,
                c.ci_loss[0],
                c.ci_loss[1],
                c.ci_win[0],
                c.ci_win[1],
                c.test.t,
                c.test.df,
                c.test.p,
                c.stars,
            )
            for c in rows
        ],
    )
    _write_json(
        os.path.join(cfg.out, "plot_pre_election.json"),
        [
            {
                "frame": c.frame,
                "mean_loss": c.mean_loss,
                "mean_win": c.mean_win,
                "ci_loss": list(c.ci_loss),
                "ci_win": list(c.ci_win),
                "p": c.test.p,
                "stars": c.stars,
            }
            for c in rows
        ],
    )


def _pattern_rows(table):
    rows = []
    for cell in table.cells:
        ci_low = cell.ci.lower if cell.ci is not None else None
        ci_high = cell.ci.upper if cell.ci is not None else None
        rows.append(
            (
                cell.frame,
                cell.pattern.value,
                cell.k_loss,
                cell.n_loss,
                cell.k_win,
                cell.n_win,
                cell.prop_loss,
                cell.prop_win,
                cell.diff,
                ci_low,
                ci_high,
                cell.significant,
            )
        )
    return rows


def cmd_patterns(cfg: RunConfig) -> None:
    _require(cfg, "posts", "elections")
    posts, _ = _labeled_posts(cfg)
    instances, _, thresholds = _instances(cfg, posts)
    table = prepost_pattern_table(instances, thresholds, base_seed=cfg.seed, alpha=cfg.alpha)
    _write_csv(
        os.path.join(cfg.out, "pattern_table.csv"),
        [
            "frame",
            "pattern",
            "k_loss",
            "n_loss",
            "k_win",
            "n_win",
            "prop_loss",
            "prop_win",
            "diff",
            "ci_low",
            "ci_high",
            "significant",
        ],
        _pattern_rows(table),
    )
    _write_json(
        os.path.join(cfg.out, "plot_patterns.json"),
        [
            {
                "frame": cell.frame,
                "pattern": cell.pattern.value,
                "diff": cell.diff,
                "ci": [cell.ci.lower, cell.ci.upper] if cell.ci is not None else None,
                "significant": cell.significant,
            }
            for cell in table.cells
        ],
    )


def cmd_robustness(cfg: RunConfig, mode: str) -> None:
    _require(cfg, "posts", "elections")
    posts, _ = _labeled_posts(cfg)
    instances, _, _ = _instances(cfg, posts)

    def rebuild(window_days: int):
        rebuilt, _, _ = _instances(cfg, posts, window_days=window_days)
        return rebuilt

    result = robustness_run(
        mode,
        instances=instances,
        rebuild=rebuild,
        n_seeds=cfg.robustness_seeds,
        base_seed=cfg.seed,
        cap_q=cfg.cap_percentile,
        alpha=cfg.alpha,
        consensus_threshold=cfg.consensus,
        pooled=cfg.pooled,
    )
    rows = []
    for f in FRAMES:
        s = result.summaries[f]
        for level in sorted(s.frac_significant, reverse=True):
            rows.append(
                (
                    f,
                    level,
                    s.frac_significant[level],
                    s.median_t,
                    s.median_p,
                    s.t_range[0],
                    s.t_range[1],
                )
            )
    _write_csv(
        os.path.join(cfg.out, "robustness_summary.csv"),
        ["frame", "level", "frac_significant", "median_t", "median_p", "t_min", "t_max"],
        rows,
    )
    _write_csv(
        os.path.join(cfg.out, "robustness_consensus.csv"),
        ["frame", "pattern", "mean_diff", "frac_significant", "consensus"],
        [
            (c.frame, c.pattern.value, c.mean_diff, c.frac_significant, c.consensus)
            for c in result.consensus_cells
        ],
    )


def cmd_synth(cfg: RunConfig, args) -> None:
    effects = []
    for spec in args.effect or []:
        parts = spec.split(":")
        if len(parts) != 5:
            raise ValueError(
                f"effect must be outcome:frame:day_lo:day_hi:delta, got {spec!r}"
            )
        effects.append(
            Effect(
                outcome=Outcome(parts[0]),
                frame=parts[1],
                days=(int(parts[2]), int(parts[3])),
                delta=float(parts[4]),
            )
        )
    scenario = generate_scenario(
        ScenarioConfig(
            n_orgs=args.orgs,
            n_days=args.days,
            cases_per_org=args.cases,
            daily_rate=args.rate,
            win_fraction=args.win_fraction,
            effects=tuple(effects),
            seed=cfg.seed,
            correlated=args.correlated,
        ),
        text_mode=args.text_mode,
    )
    write_scenario(scenario, cfg.out, strip_labels=args.strip_labels)


def cmd_all(cfg: RunConfig) -> None:
    cmd_ingest(cfg)
    cmd_label(cfg)
    labeled = replace(cfg, posts=os.path.join(cfg.out, "labeled_posts.jsonl"), lexicon=None, labels=None)
    cmd_baseline(labeled)
    cmd_cluster(labeled)
    cmd_eventstudy(labeled)
    cmd_compare_pre(labeled)
    cmd_patterns(labeled)
    cmd_robustness(labeled, "multi_seed_balance")


# -- entry point -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--elections")
    p.add_argument("--posts")
    p.add_argument("--rules")
    p.add_argument("--lexicon")
    p.add_argument("--labels")
    p.add_argument("--registry")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--window-days", dest="window_days", type=int)
    p.add_argument("--pre", nargs=2, type=int, metavar=("LO", "HI"))
    p.add_argument("--post", nargs=2, type=int, metavar=("LO", "HI"))
    p.add_argument("--baseline-span", dest="baseline_span", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seeds", type=int, help="seed count for the subcommand's mode")
    p.add_argument("--cap-percentile", dest="cap_percentile", type=float)
    p.add_argument("--consensus", type=float)
    p.add_argument("--pooled", action="store_true", help="pooled-variance t-test")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framestudy",
        description="Event-study analytics for discourse-frame usage around election outcomes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in (
        "ingest",
        "label",
        "baseline",
        "eventstudy",
        "compare-pre",
        "patterns",
        "cluster",
        "all",
    ):
        _add_common(sub.add_parser(name))
    p = sub.add_parser("robustness")
    _add_common(p)
    p.add_argument(
        "--mode",
        choices=("multi_seed_balance", "cap90_then_balance", "window_variant"),
        default="multi_seed_balance",
    )
    p = sub.add_parser("synth")
    _add_common(p)
    p.add_argument("--orgs", type=int, default=6)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--cases", type=int, default=4)
    p.add_argument("--rate", type=float, default=2.0)
    p.add_argument("--win-fraction", dest="win_fraction", type=float, default=0.5)
    p.add_argument(
        "--effect",
        action="append",
        help="outcome:frame:day_lo:day_hi:delta, repeatable",
    )
    p.add_argument("--correlated", type=float, default=0.0)
    p.add_argument("--text-mode", dest="text_mode", choices=("phrases", "placeholder"), default="phrases")
    p.add_argument("--strip-labels", dest="strip_labels", action="store_true")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "label": cmd_label,
    "baseline": cmd_baseline,
    "cluster": cmd_cluster,
    "eventstudy": cmd_eventstudy,
    "compare-pre": cmd_compare_pre,
    "patterns": cmd_patterns,
    "all": cmd_all,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        # validate window geometry up front so bad configs fail fast
        cfg.window_spec()
        if cfg.window_days < 1 or cfg.window_days % 2 == 0:
            raise ValueError(f"window_days must be odd and positive, got {cfg.window_days}")
        os.makedirs(cfg.out, exist_ok=True)
        if args.subcommand == "robustness":
            cmd_robustness(cfg, args.mode)
        elif args.subcommand == "synth":
            cmd_synth(cfg, args)
        else:
            _COMMANDS[args.subcommand](cfg)
        write_manifest(cfg, args.subcommand)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

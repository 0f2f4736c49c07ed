"""Result products: baseline frame distribution, per-org deviation matrix with
clustering, pre-election group comparison, pre/post pattern table, and the
multi-seed robustness runners.

Sampling conventions shared by every product: orgs are processed in sorted
order, each org draws from its own named substream, and posts are indexed in
post_id order, so results are independent of input order and thread count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .eventstudy import Pattern, classify_change
from .frames import FRAMES
from .ingest import Outcome
from .stats import (
    SeedSummary,
    TTestResult,
    balanced_sample,
    cap_to_percentile,
    derive_seed,
    multi_seed_summary,
    newcombe_diff_ci,
    percentile,
    rng_stream,
    seed_consensus,
    welch_t_test,
)

_Z975 = NormalDist().inv_cdf(0.975)

STAR_LEVELS = ((0.001, "★★★"), (0.01, "★★"), (0.05, "★"))


def star_level(p: float) -> str:
    for level, stars in STAR_LEVELS:
        if p < level:
            return stars
    return ""


# -- registry ----------------------------------------------------------------


@dataclass(frozen=True)
class OrgInfo:
    canonical_id: str
    full_name: str
    structure: str


def load_registry(path) -> dict[str, OrgInfo]:
    """Read the org registry CSV: canonical_id,full_name,structure."""
    out: dict[str, OrgInfo] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"canonical_id", "full_name", "structure"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"registry must have columns {sorted(required)}")
        for row in reader:
            cid = row["canonical_id"].strip()
            if not cid:
                continue
            if cid in out:
                raise ValueError(f"duplicate registry entry {cid!r}")
            out[cid] = OrgInfo(cid, row["full_name"].strip(), row["structure"].strip())
    return out


# -- baseline distribution ----------------------------------------------------


@dataclass(frozen=True)
class BaselineDistribution:
    median: dict[str, float]
    n_seeds: int
    floor: int


def _labeled_by_org(posts_by_org: dict) -> dict:
    out = {}
    for org in sorted(posts_by_org):
        labeled = sorted(
            (p for p in posts_by_org[org] if p.labels is not None),
            key=lambda p: p.post_id,
        )
        out[org] = labeled
    return out


def baseline_frame_distribution(
    posts_by_org: dict, n_seeds: int = 5, base_seed: int = 0
) -> BaselineDistribution:
    """Down-sample every org to the smallest org's post count and pool.

    Per seed, each org contributes `floor` labeled posts drawn without
    replacement (posts indexed in post_id order, per-org substream
    (base_seed, "baseline", seed_index, org)); the pooled per-frame
    proportion is computed per seed and the per-frame median across seeds
    reported.
    """
    groups = _labeled_by_org(posts_by_org)
    if not groups:
        raise ValueError("no orgs")
    empty = [org for org, posts in groups.items() if not posts]
    if empty:
        raise ValueError(f"orgs without labeled posts: {empty}")
    floor = min(len(posts) for posts in groups.values())
    per_seed: dict[str, list[float]] = {f: [] for f in FRAMES}
    for s in range(n_seeds):
        frame_hits = {f: 0 for f in FRAMES}
        n_sampled = 0
        for org, posts in groups.items():
            rng = rng_stream(base_seed, "baseline", s, org)
            idx = rng.choice(len(posts), size=floor, replace=False)
            for i in idx:
                labels = posts[i].labels
                n_sampled += 1
                for f in FRAMES:
                    if labels.get(f):
                        frame_hits[f] += 1
        for f in FRAMES:
            per_seed[f].append(frame_hits[f] / n_sampled)
    return BaselineDistribution(
        median={f: percentile(per_seed[f], 50.0) for f in FRAMES},
        n_seeds=n_seeds,
        floor=floor,
    )


# -- deviation matrix and clustering -------------------------------------------


@dataclass
class DeviationMatrix:
    orgs: list[str]
    frames: tuple[str, ...]
    values: np.ndarray
    structure: dict[str, str]
    undefined_frames: list[str]


def union_deviation_matrix(
    posts_by_org: dict, baseline: BaselineDistribution, registry: dict | None = None
) -> DeviationMatrix:
    """Percent difference of each org's frame share over the median baseline.

    entry(org, f) = 100 * (share - baseline_f) / baseline_f, computed on the
    org's full labeled corpus. Frames whose baseline is 0 yield undefined
    (nan) entries and are reported in undefined_frames.
    """
    groups = _labeled_by_org(posts_by_org)
    orgs = sorted(groups)
    values = np.full((len(orgs), len(FRAMES)), np.nan)
    undefined = [f for f in FRAMES if baseline.median[f] == 0.0]
    for r, org in enumerate(orgs):
        posts = groups[org]
        if not posts:
            raise ValueError(f"org {org!r} has no labeled posts")
        n = len(posts)
        for k, f in enumerate(FRAMES):
            if f in undefined:
                continue
            share = sum(1 for p in posts if p.labels.get(f)) / n
            b = baseline.median[f]
            values[r, k] = 100.0 * (share - b) / b
    structure = {}
    if registry:
        structure = {org: registry[org].structure for org in orgs if org in registry}
    return DeviationMatrix(
        orgs=orgs,
        frames=FRAMES,
        values=values,
        structure=structure,
        undefined_frames=undefined,
    )


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    distance: float
    size: int


def hierarchical_cluster(matrix: DeviationMatrix) -> tuple[list[Merge], list[str]]:
    """Agglomerative clustering of orgs: Euclidean distance, average linkage.

    Leaves are numbered 0..n-1 in sorted-org order; merge k creates cluster
    n+k. Ties break on the lexicographically smallest org contained in each
    cluster, and the leaf order comes from a recursive traversal that visits
    the lexicographically earlier child first. Frames with undefined entries
    are excluded from the distance.
    """
    orgs = matrix.orgs
    n = len(orgs)
    if n == 0:
        raise ValueError("empty matrix")
    cols = [k for k in range(len(matrix.frames)) if not np.any(np.isnan(matrix.values[:, k]))]
    rows = matrix.values[:, cols]

    # cluster id -> (representative org, size, centroid-free member list)
    rep = {i: orgs[i] for i in range(n)}
    size = {i: 1 for i in range(n)}
    children: dict[int, tuple[int, int]] = {}
    dist: dict[tuple[int, int], float] = {}
    active = set(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(math.dist(rows[i], rows[j]))

    merges: list[Merge] = []
    next_id = n
    while len(active) > 1:
        best = None
        for (i, j), d in dist.items():
            ra, rb = sorted((rep[i], rep[j]))
            key = (d, ra, rb)
            if best is None or key < best[0]:
                best = (key, (i, j))
        (d, _, _), (i, j) = best
        left, right = (i, j) if rep[i] <= rep[j] else (j, i)
        new = next_id
        next_id += 1
        merges.append(Merge(left=left, right=right, distance=d, size=size[i] + size[j]))
        children[new] = (left, right)
        rep[new] = min(rep[i], rep[j])
        size[new] = size[i] + size[j]
        active.discard(i)
        active.discard(j)
        for k in list(active):
            a, b = (min(i, k), max(i, k)), (min(j, k), max(j, k))
            d_new = (size[i] * dist.pop(a) + size[j] * dist.pop(b)) / (size[i] + size[j])
            dist[(k, new)] = d_new
        dist.pop((i, j))
        active.add(new)

    def leaves(node: int) -> list[str]:
        if node < n:
            return [orgs[node]]
        left, right = children[node]
        return leaves(left) + leaves(right)

    root = next(iter(active))
    return merges, leaves(root)


# -- pre-election comparison ---------------------------------------------------


@dataclass(frozen=True)
class FrameComparison:
    frame: str
    n_loss: int
    n_win: int
    mean_loss: float
    mean_win: float
    ci_loss: tuple[float, float]
    ci_win: tuple[float, float]
    test: TTestResult
    stars: str


def _normal_ci(values) -> tuple[float, float]:
    # normal-approximation CI (mean +/- z * SE); bootstrap not implemented
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return (mean, mean)
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    half = _Z975 * math.sqrt(var / n)
    return (mean - half, mean + half)


def pre_election_comparison(
    instances, base_seed: int, *, pooled: bool = False
) -> list[FrameComparison]:
    """Loss-vs-win comparison of detrended pre-election usage, per frame.

    Instances are balanced per org before testing; the t statistic is signed
    loss minus win. Group CIs are normal-approximation intervals.
    """
    balanced = balanced_sample(instances, seed=base_seed)
    out = []
    for f in FRAMES:
        loss = [
            i.frames[f].u_b_d
            for i in balanced
            if i.outcome == Outcome.LOSS and i.frames[f].u_b_d is not None
        ]
        win = [
            i.frames[f].u_b_d
            for i in balanced
            if i.outcome == Outcome.WIN and i.frames[f].u_b_d is not None
        ]
        if not loss or not win:
            raise ValueError(f"empty group for frame {f} after balancing")
        try:
            test = welch_t_test(loss, win, pooled=pooled)
        except ValueError as e:
            raise ValueError(f"frame {f}: {e}") from e
        out.append(
            FrameComparison(
                frame=f,
                n_loss=len(loss),
                n_win=len(win),
                mean_loss=test.mean_a,
                mean_win=test.mean_b,
                ci_loss=_normal_ci(loss),
                ci_win=_normal_ci(win),
                test=test,
                stars=star_level(test.p),
            )
        )
    return out


# -- pre/post pattern table ----------------------------------------------------

TABLE_PATTERNS = (Pattern.DECREASE, Pattern.STABLE, Pattern.INCREASE)


@dataclass(frozen=True)
class PatternCell:
    frame: str
    pattern: Pattern
    k_loss: int
    n_loss: int
    k_win: int
    n_win: int
    prop_loss: float | None
    prop_win: float | None
    diff: float | None
    ci: object
    significant: bool


@dataclass(frozen=True)
class PatternTable:
    cells: tuple
    unclassified: dict
    alpha: float


def prepost_pattern_table(
    instances, thresholds: dict | None, base_seed: int, *, alpha: float = 0.05
) -> PatternTable:
    """Losing-minus-winning share of each change pattern, with Newcombe CIs.

    Instances are balanced per org first. Patterns must already be assigned
    unless per-frame (p25, p75) thresholds are supplied, in which case any
    missing pattern is classified here. Unclassified instances are excluded
    from denominators and counted in `unclassified` keyed by (frame, outcome).
    """
    balanced = balanced_sample(instances, seed=base_seed)

    def pattern_of(inst, f):
        p = inst.frames[f].pattern
        if p is None:
            if thresholds is None or thresholds.get(f) is None:
                raise ValueError(f"instance {inst.case_id!r} unclassified for {f}")
            p25, p75 = thresholds[f]
            p = classify_change(inst.frames[f].o, p25, p75)
        return p

    cells = []
    unclassified: dict = {}
    for f in FRAMES:
        counts = {
            Outcome.LOSS: {p: 0 for p in TABLE_PATTERNS},
            Outcome.WIN: {p: 0 for p in TABLE_PATTERNS},
        }
        skipped = {Outcome.LOSS: 0, Outcome.WIN: 0}
        for inst in balanced:
            p = pattern_of(inst, f)
            if p == Pattern.UNCLASSIFIED:
                skipped[inst.outcome] += 1
            else:
                counts[inst.outcome][p] += 1
        n_loss = sum(counts[Outcome.LOSS].values())
        n_win = sum(counts[Outcome.WIN].values())
        unclassified[(f, Outcome.LOSS)] = skipped[Outcome.LOSS]
        unclassified[(f, Outcome.WIN)] = skipped[Outcome.WIN]
        for p in TABLE_PATTERNS:
            k_loss = counts[Outcome.LOSS][p]
            k_win = counts[Outcome.WIN][p]
            if n_loss == 0 or n_win == 0:
                cells.append(
                    PatternCell(f, p, k_loss, n_loss, k_win, n_win, None, None, None, None, False)
                )
                continue
            ci = newcombe_diff_ci(k_loss, n_loss, k_win, n_win, alpha)
            cells.append(
                PatternCell(
                    frame=f,
                    pattern=p,
                    k_loss=k_loss,
                    n_loss=n_loss,
                    k_win=k_win,
                    n_win=n_win,
                    prop_loss=k_loss / n_loss,
                    prop_win=k_win / n_win,
                    diff=ci.d,
                    ci=ci,
                    significant=ci.significant,
                )
            )
    return PatternTable(cells=tuple(cells), unclassified=unclassified, alpha=alpha)


# -- robustness ----------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusCell:
    frame: str
    pattern: Pattern
    mean_diff: float | None
    frac_significant: float
    consensus: bool


@dataclass(frozen=True)
class RobustnessResult:
    mode: str
    n_seeds: int
    summaries: dict[str, SeedSummary]
    consensus_cells: tuple
    window_days: int | None = None


ROBUSTNESS_MODES = ("multi_seed_balance", "cap90_then_balance", "window_variant")


def robustness_run(
    mode: str,
    instances=None,
    rebuild=None,
    *,
    n_seeds: int = 20,
    base_seed: int = 0,
    cap_q: float = 90.0,
    alpha: float = 0.05,
    levels=(0.05, 0.01, 0.001),
    consensus_threshold: float = 0.8,
    pooled: bool = False,
) -> RobustnessResult:
    """Rerun the comparison and pattern table across seeds and aggregate.

    Modes: multi_seed_balance resamples the balanced set per seed;
    cap90_then_balance first caps per-org case counts at the cap_q percentile;
    window_variant rebuilds instances at a 3-day rolling window via the
    supplied rebuild(window_days) callable, then resamples per seed. A failure
    in any seed aborts the whole run with that seed identified.
    """
    if mode not in ROBUSTNESS_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    window_days = None
    if mode == "window_variant":
        if rebuild is None:
            raise ValueError("window_variant mode needs a rebuild callable")
        window_days = 3
        instances = rebuild(window_days)
    if instances is None:
        raise ValueError("instances required")

    per_frame_tests: dict[str, list[TTestResult]] = {f: [] for f in FRAMES}
    cell_flags: dict[tuple[str, Pattern], list[bool]] = {
        (f, p): [] for f in FRAMES for p in TABLE_PATTERNS
    }
    cell_diffs: dict[tuple[str, Pattern], list[float]] = {
        (f, p): [] for f in FRAMES for p in TABLE_PATTERNS
    }
    for i in range(n_seeds):
        seed_i = derive_seed(base_seed, "robustness", i)
        try:
            sample = instances
            if mode == "cap90_then_balance":
                sample = cap_to_percentile(instances, cap_q, seed_i)
            comparisons = pre_election_comparison(sample, base_seed=seed_i, pooled=pooled)
            table = prepost_pattern_table(sample, None, base_seed=seed_i, alpha=alpha)
        except Exception as e:
            raise RuntimeError(f"robustness seed {i} failed: {e}") from e
        for c in comparisons:
            per_frame_tests[c.frame].append(c.test)
        for cell in table.cells:
            cell_flags[(cell.frame, cell.pattern)].append(cell.significant)
            if cell.diff is not None:
                cell_diffs[(cell.frame, cell.pattern)].append(cell.diff)

    summaries = {f: multi_seed_summary(per_frame_tests[f], levels=levels) for f in FRAMES}
    cells = []
    for f in FRAMES:
        for p in TABLE_PATTERNS:
            flags = cell_flags[(f, p)]
            diffs = cell_diffs[(f, p)]
            cells.append(
                ConsensusCell(
                    frame=f,
                    pattern=p,
                    mean_diff=(math.fsum(diffs) / len(diffs)) if diffs else None,
                    frac_significant=sum(flags) / len(flags) if flags else 0.0,
                    consensus=seed_consensus(flags, consensus_threshold),
                )
            )
    return RobustnessResult(
        mode=mode,
        n_seeds=n_seeds,
        summaries=summaries,
        consensus_cells=tuple(cells),
        window_days=window_days,
    )

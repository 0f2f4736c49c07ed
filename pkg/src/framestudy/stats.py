"""Statistical primitives and seeded resampling machinery.

The t-distribution tail probability is computed from a regularized incomplete
beta function (continued fraction) so results do not depend on an external
statistics library; tests validate it against numerical integration.

All sampling draws from named substreams derived by hashing
(base_seed, task key...), so results are independent of iteration order and
safe to parallelize.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

_NORMAL = NormalDist()


def derive_seed(base_seed: int, *keys) -> int:
    """Stable 63-bit seed for (base_seed, keys), identical across platforms."""
    token = "\x1f".join(str(k) for k in (base_seed, *keys))
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def rng_stream(base_seed: int, *keys) -> np.random.Generator:
    """Named, seedable generator; substreams for distinct keys are independent."""
    token = "\x1f".join(str(k) for k in (base_seed, *keys))
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "big")))


# -- t distribution ----------------------------------------------------------

_BETA_EPS = 3e-16
_BETA_FPMIN = 1e-300
_BETA_MAX_ITER = 400


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    # Lentz's algorithm for the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability 2 P(T_df > |t|)."""
    if df <= 0:
        raise ValueError("df must be positive")
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    half_tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - half_tail if t >= 0 else half_tail


def t_ppf(q: float, df: float) -> float:
    """Inverse t CDF by bisection on t_cdf."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_ppf(1.0 - q, df)
    hi = 1.0
    while t_cdf(hi, df) < q:
        hi *= 2.0
        if hi > 1e12:
            break
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- tests and intervals -----------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float
    mean_a: float
    mean_b: float
    ci_a: tuple[float, float]
    ci_b: tuple[float, float]
    n_a: int
    n_b: int


def _mean_var(sample):
    n = len(sample)
    mean = math.fsum(sample) / n
    var = math.fsum((x - mean) ** 2 for x in sample) / (n - 1)
    return mean, var


def _group_ci(mean: float, var: float, n: int) -> tuple[float, float]:
    if var == 0.0:
        return (mean, mean)
    half = t_ppf(0.975, n - 1) * math.sqrt(var / n)
    return (mean - half, mean + half)


def welch_t_test(a, b, *, pooled: bool = False) -> TTestResult:
    """Two-sample t-test for a difference in means (Welch by default).

    ``pooled=True`` switches to the equal-variance variant for sensitivity
    checks. Each sample needs at least two values and the two variances must
    not both be zero.
    """
    a = list(a)
    b = list(b)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 values")
    mean_a, var_a = _mean_var(a)
    mean_b, var_b = _mean_var(b)
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("zero variance in both groups")
    na, nb = len(a), len(b)
    if pooled:
        sp2 = ((na - 1) * var_a + (nb - 1) * var_b) / (na + nb - 2)
        se = math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
        df = float(na + nb - 2)
    else:
        va_n = var_a / na
        vb_n = var_b / nb
        se = math.sqrt(va_n + vb_n)
        df = (va_n + vb_n) ** 2 / (
            va_n**2 / (na - 1) + vb_n**2 / (nb - 1)
        )
    t = (mean_a - mean_b) / se
    return TTestResult(
        t=t,
        df=df,
        p=t_two_sided_p(t, df),
        mean_a=mean_a,
        mean_b=mean_b,
        ci_a=_group_ci(mean_a, var_a, na),
        ci_b=_group_ci(mean_b, var_b, nb),
        n_a=na,
        n_b=nb,
    )


def wilson_interval(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion at level 1 - alpha."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= k <= n:
        raise ValueError("k must be in [0, n]")
    z = _NORMAL.inv_cdf(1.0 - alpha / 2.0)
    p_hat = k / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2.0 * n)) / denom
    margin = (z / denom) * math.sqrt(
        p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)
    )
    # exact in real arithmetic at the boundary counts; avoid last-ulp residue
    lower = 0.0 if k == 0 else max(0.0, center - margin)
    upper = 1.0 if k == n else min(1.0, center + margin)
    return (lower, upper)


@dataclass(frozen=True)
class PropDiffCI:
    d: float
    lower: float
    upper: float
    alpha: float

    @property
    def significant(self) -> bool:
        return self.lower > 0.0 or self.upper < 0.0


def newcombe_diff_ci(k1: int, n1: int, k2: int, n2: int, alpha: float = 0.05) -> PropDiffCI:
    """Hybrid score interval for p1 - p2 built from the two Wilson intervals."""
    if n1 < 1 or n2 < 1:
        raise ValueError("both groups need at least 1 trial")
    p1 = k1 / n1
    p2 = k2 / n2
    l1, u1 = wilson_interval(k1, n1, alpha)
    l2, u2 = wilson_interval(k2, n2, alpha)
    d = p1 - p2
    lower = d - math.sqrt((p1 - l1) ** 2 + (u2 - p2) ** 2)
    upper = d + math.sqrt((u1 - p1) ** 2 + (p2 - l2) ** 2)
    return PropDiffCI(d=d, lower=lower, upper=upper, alpha=alpha)


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile: h = (n-1) q / 100 on the sorted sample."""
    vals = sorted(values)
    if not vals:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 100.0:
        raise ValueError("q must be in [0, 100]")
    h = (len(vals) - 1) * q / 100.0
    lo = math.floor(h)
    frac = h - lo
    if frac == 0.0:
        return float(vals[lo])
    return float(vals[lo] + frac * (vals[lo + 1] - vals[lo]))


# -- resampling --------------------------------------------------------------


def _by_org(instances):
    groups: dict[str, list] = {}
    for inst in instances:
        groups.setdefault(inst.org, []).append(inst)
    return groups


def _sorted_key(inst):
    return (inst.case_id, inst.outcome)


def balanced_sample(instances, seed: int):
    """Per organization, keep an equal number of wins and losses.

    m = min(#wins, #losses); m wins and m losses are drawn uniformly without
    replacement from a per-org substream, so the draw for one org does not
    depend on any other org or on input order.
    """
    from .ingest import Outcome

    out = []
    for org in sorted(_by_org(instances)):
        group = _by_org(instances)[org]
        wins = sorted((i for i in group if i.outcome == Outcome.WIN), key=_sorted_key)
        losses = sorted((i for i in group if i.outcome == Outcome.LOSS), key=_sorted_key)
        m = min(len(wins), len(losses))
        if m == 0:
            continue
        rng = rng_stream(seed, "balance", org)
        win_idx = sorted(rng.choice(len(wins), size=m, replace=False).tolist())
        loss_idx = sorted(rng.choice(len(losses), size=m, replace=False).tolist())
        out.extend(wins[i] for i in win_idx)
        out.extend(losses[i] for i in loss_idx)
    return out


def cap_to_percentile(instances, q: float = 90.0, seed: int = 0):
    """Down-sample over-represented orgs to the q-th percentile of case counts.

    The cap is computed over per-org totals (wins and losses jointly); orgs
    above it keep floor(cap) cases drawn uniformly from a per-org substream.
    """
    groups = _by_org(instances)
    if not groups:
        return []
    cap = percentile([len(g) for g in groups.values()], q)
    keep_n = math.floor(cap)
    out = []
    for org in sorted(groups):
        group = sorted(groups[org], key=_sorted_key)
        if len(group) <= cap:
            out.extend(group)
            continue
        rng = rng_stream(seed, "cap", org)
        idx = sorted(rng.choice(len(group), size=keep_n, replace=False).tolist())
        out.extend(group[i] for i in idx)
    return out


@dataclass(frozen=True)
class SeedSummary:
    n_seeds: int
    frac_significant: dict[float, float]
    median_t: float
    median_p: float
    t_range: tuple[float, float]


def multi_seed_summary(results, levels=(0.05, 0.01, 0.001)) -> SeedSummary:
    """Aggregate per-seed t-test results: significance fractions, medians, range."""
    results = list(results)
    if not results:
        raise ValueError("no per-seed results")
    ts = [r.t for r in results]
    ps = [r.p for r in results]
    return SeedSummary(
        n_seeds=len(results),
        frac_significant={
            lvl: sum(1 for p in ps if p < lvl) / len(ps) for lvl in levels
        },
        median_t=percentile(ts, 50.0),
        median_p=percentile(ps, 50.0),
        t_range=(min(ts), max(ts)),
    )


def seed_consensus(flags, threshold: float = 0.8) -> bool:
    """True when at least `threshold` of the seeds were significant (inclusive)."""
    flags = list(flags)
    if not flags:
        return False
    return sum(map(bool, flags)) / len(flags) >= threshold

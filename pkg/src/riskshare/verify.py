"""Independent verification: randomized dominance, brute force, Monte Carlo.

Nothing here reuses the closed-form machinery it checks.  Samplers draw
feasible allocations (comonotonic slicings, noise projected onto the sum
constraint, randomized tail structures), welfare is evaluated by plain
sorted dot products against spectral weight tables, and the brute-force
search enumerates a value grid exhaustively on tiny instances.  All
randomness flows from a single seed, so reports reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import distortion as dst
from .allocate import AgentSpec, Allocation, median_interval
from .distortion import _frac
from .errors import ParamOutOfRange, TooLarge
from .infconv import InfconvResult, Regime
from .riskmetric import DiscreteRv, distortion_weights

__all__ = [
    "VerificationReport",
    "sample_allocations",
    "dominance_check",
    "pareto_check",
    "bruteforce_infconv",
    "monte_carlo_choquet",
]

MAX_WITNESSES = 5
CHUNK = 2048
MAX_BRUTEFORCE_POINTS = 20_000_000


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of a randomized check; zero violations means the bound held."""

    trials: int
    violations: int
    worst_gap: float
    witnesses: tuple[Allocation, ...]

    def to_text(self) -> str:
        lines = [
            f"trials\t{self.trials}",
            f"violations\t{self.violations}",
            f"worst_gap\t{self.worst_gap:.12g}",
            f"witnesses\t{len(self.witnesses)}",
        ]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "worst_gap": self.worst_gap,
            "witnesses": len(self.witnesses),
        }


def _exact_allocation(X: DiscreteRv, free_rows: np.ndarray) -> Allocation:
    """Allocation from float rows for agents 0..n-2; the last row closes the sum."""
    rows = [tuple(Fraction(float(v)) for v in r) for r in free_rows]
    last = tuple(
        _frac(X.values[s]) - sum((r[s] for r in rows), Fraction(0)) for s in range(X.n)
    )
    return Allocation(tuple(rows) + (last,), X)


def _tail_frame(X: DiscreteRv, alphas: Sequence[Fraction]):
    alpha = sum(alphas, Fraction(0))
    beta = min(alpha, Fraction(1, 2))
    k = beta * X.n
    if k.denominator != 1 or any((a * beta / alpha * X.n).denominator != 1 for a in alphas if alpha):
        raise ParamOutOfRange("tail sampler needs grid-compatible levels")
    k = int(k)
    order = sorted(range(X.n), key=lambda s: (_frac(X.values[s]), s))
    bottom, top = order[:k], order[X.n - k :] if k else []
    sizes = [int(a * beta / alpha * X.n) if alpha else 0 for a in alphas]
    return top, bottom, sizes


def sample_allocations(
    X: DiscreteRv,
    n: int,
    mode: str,
    count: int,
    seed: int,
    alphas: Sequence | None = None,
    lams: Sequence | None = None,
) -> Iterator[Allocation]:
    """Draw feasible allocations of X for n agents.

    mode "comonotonic": random increasing slicings of the marginal gaps.
    mode "unconstrained": independent noise, last agent takes the remainder.
    mode "tail_randomized": randomized tail partitions, split constants and
    middle weights around the tail-allocation family (needs ``alphas``).
    Deterministic for a fixed seed.
    """
    if count < 1:
        raise ParamOutOfRange("count must be at least 1")
    rng = np.random.default_rng(seed)
    fvals = [_frac(v) for v in X.values]

    if mode == "comonotonic":
        distinct = sorted(set(fvals))
        gaps = np.array([float(b - a) for a, b in zip(distinct, distinct[1:])])
        pos = {v: k for k, v in enumerate(distinct)}
        state_rank = np.array([pos[v] for v in fvals])
        for _ in range(count):
            base = rng.dirichlet(np.ones(n)) * float(distinct[0])
            w = rng.dirichlet(np.ones(n), size=len(gaps))
            f = base[None, :] + np.vstack(
                [np.zeros(n), np.cumsum(w * gaps[:, None], axis=0)]
            )
            rows = f[state_rank, :].T
            yield _exact_allocation(X, rows[: n - 1])
    elif mode == "unconstrained":
        lo, hi = min(fvals), max(fvals)
        scale = float(hi - lo) or 1.0
        for _ in range(count):
            rows = rng.normal(0.0, scale, size=(n - 1, X.n))
            yield _exact_allocation(X, rows)
    elif mode == "tail_randomized":
        if alphas is None:
            raise ParamOutOfRange("tail_randomized sampling needs the agents' levels")
        alphas = [_frac(a) for a in alphas]
        lams = [Fraction(1)] * n if lams is None else [_frac(l) for l in lams]
        top, bottom, sizes = _tail_frame(X, alphas)
        in_tail = set(top) | set(bottom)
        lo_med, hi_med = median_interval(X)
        lam_min = min(lams)
        remark_a = [Fraction(1 if lams[i] == lam_min else 0) for i in range(n)]
        remark_a = [a / sum(remark_a) for a in remark_a]
        for _ in range(count):
            c = lo_med + Fraction(float(rng.random())) * (hi_med - lo_med)
            if rng.random() < 0.5:
                a_w = list(remark_a)
            else:
                raw = [Fraction(float(x)) for x in rng.dirichlet(np.ones(n))]
                a_w = raw[:-1] + [1 - sum(raw[:-1], Fraction(0))]
            raw_c = [Fraction(float(x)) for x in rng.dirichlet(np.ones(n))]
            cs = [r * c for r in raw_c[:-1]]
            cs.append(c - sum(cs, Fraction(0)))
            tperm = list(rng.permutation(len(top))) if top else []
            bperm = list(rng.permutation(len(bottom))) if bottom else []
            parts = []
            off = 0
            owner = {}
            for i in range(n):
                for k in range(off, off + sizes[i]):
                    owner[top[tperm[k]]] = i
                    owner[bottom[bperm[k]]] = i
                off += sizes[i]
            for i in range(n):
                row = []
                for s in range(X.n):
                    dev = fvals[s] - c
                    if s in in_tail:
                        row.append((dev if owner.get(s) == i else 0) + cs[i])
                    else:
                        row.append(a_w[i] * dev + cs[i])
                parts.append(tuple(row))
            yield Allocation(tuple(parts), X)
    else:
        raise ParamOutOfRange(f"unknown sampling mode {mode!r}")


def _weight_tables(agents: Sequence[AgentSpec], n_states: int) -> np.ndarray:
    return np.stack(
        [float(ag.weight) * distortion_weights(ag.distortion, n_states) for ag in agents]
    )


def _welfare_matrix(parts: np.ndarray, tables: np.ndarray) -> np.ndarray:
    """Aggregate welfare of stacked samples: parts is (trials, n, N)."""
    desc = -np.sort(-parts, axis=-1)
    return np.einsum("tik,ik->t", desc, tables)


def _simplex(rng, shape):
    """Uniform simplex samples over the last axis."""
    g = rng.standard_exponential(shape)
    return g / g.sum(axis=-1, keepdims=True)


def _comonotonic_chunks(X, n, count, rng, tables):
    """Yield (welfare, witness_fn) for random increasing slicings.

    Slicing weights are already ordered along the value grid, so welfare
    reduces to an einsum against tables collapsed over tied states; no
    per-sample sorting happens.
    """
    fvals = [_frac(v) for v in X.values]
    distinct = sorted(set(fvals))
    m = len(distinct)
    gaps = np.array([float(b - a) for a, b in zip(distinct, distinct[1:])])
    pos = {v: k for k, v in enumerate(distinct)}
    state_rank = np.array([pos[v] for v in fvals])
    u0 = float(distinct[0])
    # tables are indexed by descending sort position; collapse them onto the
    # value grid: positions of value-rank k (descending) are contiguous.
    counts = np.bincount(state_rank, minlength=m)
    ctab = np.zeros((n, m))
    offset = 0
    for k in range(m - 1, -1, -1):
        ctab[:, k] = tables[:, offset : offset + counts[k]].sum(axis=1)
        offset += counts[k]
    # Welfare is affine in the slicing weights: the slice at gap g feeds all
    # value ranks above g, so it meets the suffix sums of the collapsed table.
    suffix = np.concatenate(
        [np.cumsum(ctab[:, ::-1], axis=1)[:, ::-1], np.zeros((n, 1))], axis=1
    )
    base_coef = suffix[:, 0] * u0  # simplex base times full column sums
    gap_coef = gaps[None, :] * suffix[:, 1:-1]  # (n, m-1)
    for start in range(0, count, CHUNK):
        c = min(CHUNK, count - start)
        base = _simplex(rng, (c, n))
        w = _simplex(rng, (c, len(gaps), n))
        wf = base @ base_coef + np.einsum("tgi,ig->t", w, gap_coef)

        def witness(idx, base=base, w=w):
            f = base[idx][None, :] * u0 + np.concatenate(
                [np.zeros((1, n)), np.cumsum(w[idx] * gaps[:, None], axis=0)]
            )
            return f[state_rank, :].T[: n - 1]

        yield wf, witness


def _unconstrained_chunks(X, n, count, rng, tables):
    xv = np.array([float(v) for v in X.values])
    scale = float(xv.max() - xv.min()) or 1.0
    for start in range(0, count, CHUNK):
        c = min(CHUNK, count - start)
        parts = np.empty((c, n, X.n))
        parts[:, : n - 1, :] = rng.normal(0.0, scale, size=(c, n - 1, X.n))
        parts[:, n - 1, :] = xv[None, :] - parts[:, : n - 1, :].sum(axis=1)
        yield _welfare_matrix(parts, tables), lambda idx, p=parts: p[idx, : n - 1, :]


def _tail_chunks(X, n, count, rng, alphas, lams, tables):
    top, bottom, sizes = _tail_frame(X, alphas)
    xv = np.array([float(v) for v in X.values])
    lo_med, hi_med = float(median_interval(X)[0]), float(median_interval(X)[1])
    lam_min = min(lams)
    remark = np.array([1.0 if l == lam_min else 0.0 for l in lams])
    remark /= remark.sum()
    middle = np.array([s for s in range(X.n) if s not in set(top) | set(bottom)], dtype=int)
    owner_slices = []
    off = 0
    for i in range(n):
        owner_slices.append((off, off + sizes[i]))
        off += sizes[i]
    top_arr, bot_arr = np.array(top, dtype=int), np.array(bottom, dtype=int)
    for start in range(0, count, CHUNK):
        c = min(CHUNK, count - start)
        cs_split = rng.dirichlet(np.ones(n), size=c)
        cvals = rng.uniform(lo_med, hi_med, size=c)
        use_remark = rng.random(c) < 0.5
        a_w = rng.dirichlet(np.ones(n), size=c)
        a_w[use_remark] = remark
        dev = xv[None, :] - cvals[:, None]  # (c, N)
        parts = np.zeros((c, n, X.n))
        if middle.size:
            parts[:, :, middle] = a_w[:, :, None] * dev[:, None, middle]
        if top_arr.size:
            tperm = rng.permuted(np.tile(top_arr, (c, 1)), axis=1)
            bperm = rng.permuted(np.tile(bot_arr, (c, 1)), axis=1)
            for i, (a, b) in enumerate(owner_slices):
                if b > a:
                    for sel in (tperm[:, a:b], bperm[:, a:b]):
                        np.put_along_axis(
                            parts[:, i, :],
                            sel,
                            np.take_along_axis(dev, sel, axis=1),
                            axis=1,
                        )
        parts += (cs_split * cvals[:, None])[:, :, None]
        yield _welfare_matrix(parts, tables), lambda idx, p=parts: p[idx, : n - 1, :]


def dominance_check(
    X: DiscreteRv,
    agents: Sequence[AgentSpec],
    closed_form: InfconvResult,
    trials: int = 10_000,
    seed: int = 0,
    tolerance: float = 1e-9,
    bound: float | None = None,
) -> VerificationReport:
    """Sample the regime's feasible set and test the closed-form lower bound.

    A violation is a sampled allocation whose aggregate welfare undercuts
    the representative value by more than the tolerance.  Sampling is
    vectorized; witnesses are materialized as exact allocations by closing
    the sum constraint on the last agent.  ``bound`` overrides the
    representative value; the harness self-test passes a corrupted bound to
    confirm that violations are actually caught.
    """
    n = len(agents)
    if bound is None:
        bound = float(closed_form.value_at(X))
    tables = _weight_tables(agents, X.n)

    if closed_form.regime is Regime.COMONOTONIC_ENVELOPE:
        modes = [("comonotonic", trials)]
    elif closed_form.regime is Regime.IQD_UNCONSTRAINED:
        modes = [("unconstrained", trials - trials // 2), ("tail_randomized", trials // 2)]
    else:
        modes = [
            ("unconstrained", trials - 2 * (trials // 3)),
            ("tail_randomized", trials // 3),
            ("comonotonic", trials // 3),
        ]

    alphas = []
    for ag in agents:
        hit = dst.detect_iqd(ag.distortion)
        alphas.append(hit[0] if hit else Fraction(0))
    lams = [ag.weight for ag in agents]

    violations = 0
    worst = np.inf
    witnesses: list[Allocation] = []
    done = 0
    for mode, cnt in modes:
        if cnt <= 0:
            continue
        rng = np.random.default_rng((seed, done))
        if mode == "comonotonic":
            chunks = _comonotonic_chunks(X, n, cnt, rng, tables)
        elif mode == "unconstrained":
            chunks = _unconstrained_chunks(X, n, cnt, rng, tables)
        else:
            chunks = _tail_chunks(X, n, cnt, rng, alphas, lams, tables)
        for wf, witness in chunks:
            bad = wf < bound - tolerance
            violations += int(bad.sum())
            worst = min(worst, float(wf.min()))
            for idx in np.nonzero(bad)[0][: MAX_WITNESSES - len(witnesses)]:
                witnesses.append(_exact_allocation(X, witness(int(idx))))
        done += cnt
    return VerificationReport(done, violations, float(worst - bound), tuple(witnesses))


def pareto_check(
    a: Allocation,
    agents: Sequence[AgentSpec],
    candidates,
    tolerance: float = 1e-9,
) -> VerificationReport:
    """Flag candidates that weakly improve every agent and strictly improve one."""
    tables = [distortion_weights(ag.distortion, a.total.n) for ag in agents]
    base = np.array(
        [np.dot(np.sort([float(v) for v in p])[::-1], t) for p, t in zip(a.parts, tables)]
    )
    violations = 0
    worst = np.inf
    witnesses: list[Allocation] = []
    trials = 0
    for cand in candidates:
        trials += 1
        vals = np.array(
            [np.dot(np.sort([float(v) for v in p])[::-1], t) for p, t in zip(cand.parts, tables)]
        )
        delta = vals - base
        if delta.max() <= tolerance:
            worst = min(worst, float(delta.min()))
            if delta.min() < -tolerance:
                violations += 1
                if len(witnesses) < MAX_WITNESSES:
                    witnesses.append(cand)
    if not np.isfinite(worst):
        worst = 0.0
    return VerificationReport(trials, violations, float(worst), tuple(witnesses))


def bruteforce_infconv(
    X: DiscreteRv,
    agents: Sequence[AgentSpec],
    value_grid: Sequence[float],
) -> float:
    """Exhaustive two-agent search with agent 1 restricted to a value grid.

    A certified upper bound on the group optimum that tightens as the grid
    refines.  Cost bounds are enforced hard: two agents, at most 6 states,
    at most 25 grid points, and at most 2e7 grid combinations.
    """
    if len(agents) != 2:
        raise TooLarge("brute force is limited to two agents")
    if X.n > 6:
        raise TooLarge("brute force is limited to 6 states")
    grid = np.asarray([float(v) for v in value_grid])
    if grid.size > 25:
        raise TooLarge("brute force is limited to 25 grid points")
    total_combos = grid.size**X.n
    if total_combos > MAX_BRUTEFORCE_POINTS:
        raise TooLarge(f"{total_combos} combinations exceed the enumeration budget")

    t1 = float(agents[0].weight) * distortion_weights(agents[0].distortion, X.n)
    t2 = float(agents[1].weight) * distortion_weights(agents[1].distortion, X.n)
    xv = np.array([float(v) for v in X.values])
    best = np.inf
    step = max(1, CHUNK * 64)
    for start in range(0, total_combos, step):
        codes = np.arange(start, min(start + step, total_combos), dtype=np.int64)
        digits = np.empty((codes.size, X.n), dtype=np.int64)
        rem = codes
        for pos in range(X.n):
            digits[:, pos] = rem % grid.size
            rem = rem // grid.size
        p1 = grid[digits]
        p2 = xv[None, :] - p1
        wf = np.sort(p1, axis=1)[:, ::-1] @ t1 + np.sort(p2, axis=1)[:, ::-1] @ t2
        best = min(best, float(wf.min()))
    return best


def monte_carlo_choquet(
    h,
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    m: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate of a distortion riskmetric with a batch-means error.

    Draws m samples, evaluates the staircase on the empirical grid, and
    reports (estimate, standard error) with the error taken across 10
    batch sub-estimates.
    """
    if m < 100:
        raise ParamOutOfRange("need at least 100 samples")
    rng = np.random.default_rng(seed)
    values = np.asarray(sampler(rng, m), dtype=float)
    est = float(np.dot(np.sort(values)[::-1], distortion_weights(h, m)))
    b = m // 10
    table_b = distortion_weights(h, b)
    batches = values[: 10 * b].reshape(10, b)
    ests = np.sort(batches, axis=1)[:, ::-1] @ table_b
    se = float(np.std(ests, ddof=1) / np.sqrt(10.0))
    return est, se

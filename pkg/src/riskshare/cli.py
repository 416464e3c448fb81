"""Command-line front end.

Scenarios are single JSON documents naming a distribution (inline values
or a CSV path), the agents (distortion spec strings or raw piecewise
records, weights, optional beliefs) and options.  Commands write UTF-8
comma-separated files with a header row and report a machine-readable
error code on failure.

Exit codes: 0 success, 2 validation failure, 3 unsupported regime,
4 grid incompatibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import allocate as alc
from . import beliefs as blf
from . import distortion as dst
from . import infconv as icv
from . import verify as vfy
from .distortion import DistortionFunction, _frac
from .errors import GridIncompatible, ParamOutOfRange, RiskshareError, UnsupportedRegime
from .riskmetric import DiscreteRv, choquet, choquet_weighted

MAX_PROB_DENOMINATOR = 10**6


def _num(x) -> Fraction:
    """Exact number from JSON: ints/floats directly, strings as fractions."""
    if isinstance(x, str):
        return Fraction(x)
    return _frac(x)


@dataclass
class Scenario:
    X: DiscreteRv
    agents: list[alc.AgentSpec]
    mode: str = "comonotonic"
    allocation: alc.Allocation | None = None
    options: dict = field(default_factory=dict)


def _read_distribution_csv(path: Path) -> tuple[DiscreteRv, list | None]:
    """Distribution CSV: values, value/probability pairs, or belief columns.

    One column: equiprobable values.  Two columns (or a value,probability
    header): exact rational probabilities expanded onto the equiprobable
    grid.  A header of value,belief_1,...,belief_k keeps the states
    equiprobable and returns the per-agent belief columns.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for rec in csv.reader(f):
            if not rec or not rec[0].strip():
                continue
            rows.append([tok.strip() for tok in rec])
    header = None
    if rows and not _is_number(rows[0][0]):
        header = rows[0]
        rows = rows[1:]
    if not rows:
        raise ParamOutOfRange(f"no data rows in {path}")
    if header and len(header) > 1 and header[1].startswith("belief"):
        values = [Fraction(r[0]) for r in rows]
        beliefs = [[Fraction(r[k]) for r in rows] for k in range(1, len(header))]
        return DiscreteRv.of(values), beliefs
    if len(rows[0]) == 1:
        return DiscreteRv.of(Fraction(r[0]) for r in rows), None
    values = [Fraction(r[0]) for r in rows]
    probs = [Fraction(r[1]) for r in rows]
    if any(p < 0 for p in probs) or sum(probs) != 1:
        raise ParamOutOfRange("probabilities must be nonnegative and sum to 1")
    denom = math.lcm(*(p.denominator for p in probs))
    if denom > MAX_PROB_DENOMINATOR:
        raise GridIncompatible(
            f"probabilities need a common denominator of {denom} > {MAX_PROB_DENOMINATOR}",
            suggested_n=denom,
        )
    out = []
    for v, p in zip(values, probs):
        out.extend([v] * int(p * denom))
    return DiscreteRv.of(out), None


def _is_number(tok: str) -> bool:
    try:
        Fraction(tok)
        return True
    except (ValueError, ZeroDivisionError):
        return False


def _parse_distortion(spec) -> DistortionFunction:
    if isinstance(spec, str):
        return dst.from_spec(spec)
    if isinstance(spec, dict):
        return DistortionFunction.build(
            [_num(b) for b in spec["breakpoints"]],
            [[_num(c) for c in row] for row in spec["coeffs"]],
            [_num(v) for v in spec["point_values"]],
        )
    raise ParamOutOfRange(f"bad distortion spec {spec!r}")


def _read_allocation_csv(path: Path) -> alc.Allocation:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    n = sum(1 for h in header if h.startswith("X_"))
    by_state = {}
    for rec in data:
        s = int(rec[0])
        by_state[s] = rec
    states = sorted(by_state)
    total = DiscreteRv.of(Fraction(by_state[s][1]) for s in states)
    parts = tuple(
        tuple(Fraction(by_state[s][2 + i]) for s in states) for i in range(n)
    )
    return alc.Allocation(parts, total)


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    base = Path(path).parent
    distr = doc["distribution"]
    csv_beliefs = None
    if "values" in distr:
        X = DiscreteRv.of(_num(v) for v in distr["values"])
    elif "csv" in distr:
        X, csv_beliefs = _read_distribution_csv(base / distr["csv"])
    else:
        raise ParamOutOfRange("distribution needs 'values' or 'csv'")
    agents = []
    for i, a in enumerate(doc.get("agents", [])):
        belief = None
        if a.get("belief") is not None:
            belief = blf.BeliefMeasure.of([_num(p) for p in a["belief"]])
        elif csv_beliefs is not None and i < len(csv_beliefs):
            belief = blf.BeliefMeasure.of(csv_beliefs[i])
        agents.append(
            alc.AgentSpec(_parse_distortion(a["distortion"]), _num(a.get("weight", 1)), belief)
        )
    if not agents:
        raise ParamOutOfRange("scenario needs at least one agent")
    allocation = None
    if "allocation" in doc:
        spec = doc["allocation"]
        if "parts" in spec:
            allocation = alc.Allocation.of(
                [[_num(v) for v in row] for row in spec["parts"]], X
            )
        elif "csv" in spec:
            allocation = _read_allocation_csv(base / spec["csv"])
    return Scenario(
        X=X,
        agents=agents,
        mode=doc.get("mode", "comonotonic"),
        allocation=allocation,
        options=doc.get("options", {}),
    )


# ---------------------------------------------------------------------------
# Helpers shared by commands
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return repr(x)


def _closed_form(sc: Scenario) -> icv.InfconvResult:
    if sc.mode == "comonotonic":
        return icv.infconv_comonotonic(
            [a.distortion for a in sc.agents], [a.weight for a in sc.agents]
        )
    if sc.mode in ("unconstrained", "mixed"):
        return icv.infconv_mixed(sc.agents)
    raise UnsupportedRegime(f"unknown mode {sc.mode!r}")


def _solve_allocation(sc: Scenario):
    opts = sc.options
    tie = opts.get("tie_rule", "equal")
    if sc.mode == "comonotonic":
        if any(a.belief is not None for a in sc.agents):
            alloc, value, _, _ = blf.comonotonic_allocation_with_beliefs(sc.X, sc.agents, tie)
            return alloc, alc.TailAssignment.empty(len(sc.agents)), value
        alloc, value = alc.comonotonic_allocation(sc.X, sc.agents, tie)
        return alloc, alc.TailAssignment.empty(len(sc.agents)), value
    if sc.mode in ("unconstrained", "mixed"):
        if any(a.belief is not None for a in sc.agents):
            raise UnsupportedRegime("beliefs are only supported for comonotonic sharing")
        c = _num(opts["c"]) if "c" in opts else None
        cs = [_num(v) for v in opts["cs"]] if "cs" in opts else None
        a_w = [_num(v) for v in opts["a_weights"]] if "a_weights" in opts else None
        return alc.mixed_allocation(sc.X, sc.agents, tie, c=c, cs=cs, a_weights=a_w)
    raise UnsupportedRegime(f"unknown mode {sc.mode!r}")


def _write_allocation_csv(path: Path, alloc: alc.Allocation, tails: alc.TailAssignment):
    n = alloc.n_agents
    order = sorted(
        range(alloc.total.n), key=lambda s: (_frac(alloc.total.values[s]), s), reverse=True
    )
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["state", "X"] + [f"X_{i + 1}" for i in range(n)] + ["membership"])
        for s in order:
            tag = "A" if s in tails.a_states else "B" if s in tails.b_states else "middle"
            w.writerow(
                [s, _fmt(_frac(alloc.total.values[s]))]
                + [_fmt(_frac(alloc.parts[i][s])) for i in range(n)]
                + [tag]
            )


def _write_curve_csv(path: Path, pairs, header=("t", "value")):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for t, v in pairs:
            w.writerow([f"{float(t):.12g}", f"{float(v):.12g}"])


def _curve_points(h: DistortionFunction, samples: int = 1001):
    grid = sorted(
        {Fraction(k, samples - 1) for k in range(samples)} | set(h.breakpoints)
    )
    return [(t, h.eval(t)) for t in grid]


def _agent_welfare(sc: Scenario, alloc: alc.Allocation):
    per = []
    for ag, part in zip(sc.agents, alloc.parts):
        if ag.belief is not None:
            per.append(choquet_weighted(ag.distortion, part, ag.belief.probs))
        else:
            per.append(choquet(ag.distortion, DiscreteRv.of(part)))
    return per


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_eval(sc: Scenario, args) -> int:
    print("agent,weight,value")
    for i, ag in enumerate(sc.agents):
        if ag.belief is not None:
            v = choquet_weighted(ag.distortion, sc.X.values, ag.belief.probs)
        else:
            v = choquet(ag.distortion, sc.X)
        print(f"{i + 1},{_fmt(ag.weight)},{float(v):.12g}")
    return 0


def _cmd_validate(sc: Scenario, args) -> int:
    report = alc.validate_scenario(sc.agents)
    print(f"h(1) values: {', '.join(_fmt(v) for v in report.h_at_one)}")
    print(f"mixed_sign: {report.mixed_sign}")
    print(f"unequal: {report.unequal}")
    for msg in report.messages:
        print(f"note: {msg}")
    print("status: ok" if report.ok else "status: flagged")
    return 0


def _cmd_infconv(sc: Scenario, args) -> int:
    res = _closed_form(sc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "representative.txt").write_text(res.representative.to_record(), encoding="utf-8")
    print(f"regime: {res.regime.value}")
    print(f"value: {float(res.value_at(sc.X)):.12g}")
    print(f"representative: {out / 'representative.txt'}")
    return 0


def _cmd_allocate(sc: Scenario, args) -> int:
    alloc, tails, value = _solve_allocation(sc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_allocation_csv(out / "allocation.csv", alloc, tails)
    per = _agent_welfare(sc, alloc)
    print("agent,weight,value")
    for i, (ag, v) in enumerate(zip(sc.agents, per)):
        print(f"{i + 1},{_fmt(ag.weight)},{float(v):.12g}")
    print(f"aggregate: {float(value):.12g}")
    print(f"allocation: {out / 'allocation.csv'}")
    return 0


def _cmd_improve(sc: Scenario, args) -> int:
    if sc.allocation is None:
        raise ParamOutOfRange("improve needs an allocation in the scenario")
    improved = alc.comonotonic_improvement(sc.allocation)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_allocation_csv(
        out / "improved.csv", improved, alc.TailAssignment.empty(improved.n_agents)
    )
    before = _agent_welfare(sc, sc.allocation)
    after = _agent_welfare(sc, improved)
    print("agent,before,after")
    for i, (b, a) in enumerate(zip(before, after)):
        print(f"{i + 1},{float(b):.12g},{float(a):.12g}")
    print(f"comonotonic: {alc.is_comonotonic(improved)}")
    print(f"improved: {out / 'improved.csv'}")
    return 0


def _cmd_verify(sc: Scenario, args) -> int:
    res = _closed_form(sc)
    report = vfy.dominance_check(
        sc.X, sc.agents, res, trials=args.trials, seed=args.seed, tolerance=args.tol
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "verify_report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(report.to_text(), end="")
    if sc.allocation is not None:
        per = _agent_welfare(sc, sc.allocation)
        print("allocation welfare: " + ", ".join(f"{float(v):.12g}" for v in per))
        cands = vfy.sample_allocations(
            sc.X, len(sc.agents), "unconstrained", max(100, args.trials // 10), args.seed
        )
        preport = vfy.pareto_check(sc.allocation, sc.agents, cands, tolerance=args.tol)
        print(f"pareto_dominating: {preport.violations}")
    return 0


def _cmd_plot(sc: Scenario, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, ag in enumerate(sc.agents):
        p = out / f"distortion_{i + 1}.csv"
        _write_curve_csv(p, _curve_points(dst.scale(ag.distortion, ag.weight)))
        written.append(p)
    res = _closed_form(sc)
    p = out / "representative.csv"
    _write_curve_csv(p, _curve_points(res.representative))
    written.append(p)
    alloc, tails, _ = _solve_allocation(sc)
    order = sorted(range(sc.X.n), key=lambda s: (_frac(sc.X.values[s]), s))
    for i in range(alloc.n_agents):
        p = out / f"transfer_{i + 1}.csv"
        pairs = [(_frac(sc.X.values[s]), _frac(alloc.parts[i][s])) for s in order]
        _write_curve_csv(p, pairs, header=("x", "f"))
        written.append(p)
    for p in written:
        print(p)
    return 0


def _cmd_gap(sc: Scenario, args) -> int:
    alphas = []
    lams = []
    for i, ag in enumerate(sc.agents):
        hit = dst.detect_iqd(ag.distortion)
        if hit is None:
            raise UnsupportedRegime("gap compares the IQD regimes; all agents must be IQD")
        alphas.append(hit[0])
        lams.append(ag.weight * hit[1])
    g = icv.welfare_gap(sc.X, alphas, lams)
    print(f"gap: {float(g):.12g}")
    return 0


COMMANDS = {
    "eval": _cmd_eval,
    "validate": _cmd_validate,
    "infconv": _cmd_infconv,
    "allocate": _cmd_allocate,
    "improve": _cmd_improve,
    "verify": _cmd_verify,
    "plot": _cmd_plot,
    "gap": _cmd_gap,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskshare",
        description="Distortion riskmetrics and optimal risk sharing on finite grids",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=".", help="output directory for artifacts")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--tol", type=float, default=1e-9)
    parser.add_argument("--tie-rule", dest="tie_rule", choices=alc.TIE_RULES, default=None)
    parser.add_argument(
        "--mode", choices=("comonotonic", "unconstrained", "mixed"), default=None
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        if args.mode:
            sc.mode = args.mode
        if args.tie_rule:
            sc.options["tie_rule"] = args.tie_rule
        for key in ("seed", "trials", "tol"):
            if key in sc.options and getattr(args, key) == build_parser().get_default(key):
                setattr(args, key, type(getattr(args, key))(sc.options[key]))
        return COMMANDS[args.command](sc, args)
    except RiskshareError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return e.exit_status
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(
            json.dumps({"error": "InvalidScenario", "message": f"{type(e).__name__}: {e}"}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())

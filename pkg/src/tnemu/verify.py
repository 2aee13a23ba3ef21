"""Brute-force oracle, randomized equivalence runs, and the threshold demo."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import NegAction, NegComparison, NeuronParams, NeuronState, PosReset, neuron_tick
from .errors import EmulatorError
from .vmm import VALUE_BOUND, Variant, VmmProblem, execute

DEFAULT_DIMS = ((2, 3), (8, 8))


def oracle_vmm(v, M) -> List[int]:
    """Exact ``y_j = sum_i v_i * M[i][j]`` with plain integer loops."""
    v = [int(x) for x in v]
    M = [[int(x) for x in row] for row in M]
    if len(M) != len(v):
        raise ValueError(f"vector length {len(v)} does not match {len(M)} matrix rows")
    n = len(M[0]) if M else 0
    if any(len(row) != n for row in M):
        raise ValueError("ragged matrix")
    y = [0] * n
    for i, vi in enumerate(v):
        for j in range(n):
            y[j] += vi * M[i][j]
    return y


def make_rng(seed) -> np.random.Generator:
    """PCG64 seeded through ``SeedSequence``; ``seed`` is an int or list of ints."""
    return np.random.Generator(np.random.PCG64(seed))


def random_case(rng_seed, dims: Tuple[int, int], bound: int = VALUE_BOUND) -> VmmProblem:
    """Uniform entries in ``[-bound, bound]``, vector drawn before matrix."""
    if not 1 <= bound <= VALUE_BOUND:
        raise ValueError(f"bound must be in [1, {VALUE_BOUND}] (got {bound})")
    m, n = dims
    if m < 1 or n < 1:
        raise ValueError(f"dims must be positive (got {dims})")
    rng = make_rng(rng_seed)
    v = rng.integers(-bound, bound, size=m, endpoint=True)
    M = rng.integers(-bound, bound, size=(m, n), endpoint=True)
    return VmmProblem(v, M)


def case_dims(seed: int, count: int, dims_range=DEFAULT_DIMS) -> List[Tuple[int, int]]:
    (m_lo, n_lo), (m_hi, n_hi) = dims_range
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(m_lo, m_hi, endpoint=True))
        n = int(rng.integers(n_lo, n_hi, endpoint=True))
        out.append((m, n))
    return out


@dataclass
class CaseResult:
    index: int
    case_seed: List[int]
    m: int
    n: int
    variant: str
    passed: bool
    expected: List[int]
    got: Optional[List[int]]
    error: Optional[str] = None


@dataclass
class VerifyReport:
    count: int
    seed: int
    dims: List[List[int]]
    bound: int
    variants: List[str]
    results: List[CaseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CaseResult]:
        return [r for r in self.results if not r.passed]

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        lines = [f"{'case':>5} {'dims':>5} {'variant':<10} result"]
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            if r.error:
                status += f" ({r.error})"
            elif not r.passed:
                status += f" expected={r.expected} got={r.got}"
            lines.append(f"{r.index:>5} {r.m}x{r.n:<3} {r.variant:<10} {status}")
        n_ok = sum(r.passed for r in self.results)
        lines.append(f"{n_ok}/{len(self.results)} runs matched the oracle over {self.count} cases")
        return "\n".join(lines)


def _run_case(args) -> List[CaseResult]:
    index, seed, dims, bound, variants = args
    case_seed = [seed, index]
    problem = random_case(case_seed, dims, bound)
    expected = oracle_vmm(problem.v, problem.M)
    out = []
    for variant in variants:
        try:
            got = [int(x) for x in execute(problem, variant).y]
        except EmulatorError as exc:
            out.append(CaseResult(index, case_seed, *dims, variant, False, expected, None, str(exc)))
            continue
        out.append(CaseResult(index, case_seed, *dims, variant, got == expected, expected, got))
    return out


def verify_batch(
    count: int,
    seed: int,
    dims_range=DEFAULT_DIMS,
    bound: int = VALUE_BOUND,
    variants: Sequence = (Variant.REFERENCE, Variant.SYMMETRIC),
    jobs: int = 1,
) -> VerifyReport:
    """Run ``count`` random problems through each variant and compare with the oracle.

    Case ``k`` draws its problem from seed ``[seed, k]``; its dimensions come
    from a separate stream seeded with ``seed``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    variants = [Variant(v).value for v in variants]
    dims = case_dims(seed, count, dims_range)
    tasks = [(k, seed, dims[k], bound, variants) for k in range(count)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(_run_case, tasks))
    else:
        chunks = [_run_case(t) for t in tasks]
    report = VerifyReport(count, seed, [list(d) for d in dims_range], bound, variants)
    for chunk in chunks:
        report.results.extend(chunk)
    return report


@dataclass
class ModeTrace:
    mode: str
    potentials: List[int]
    fired: List[bool]

    @property
    def fires(self) -> int:
        return sum(self.fired)


@dataclass
class AsymmetryDemo:
    sequence: List[int]
    strict: ModeTrace
    inclusive: ModeTrace

    def table(self) -> str:
        width = max(len(self.sequence), 1)
        head = "mode       " + " ".join(f"t{t + 1:<4}" for t in range(width))
        rows = [head, "input      " + " ".join(f"{s:<5}" for s in self.sequence)]
        for tr in (self.strict, self.inclusive):
            cells = " ".join(f"{v}{'*' if f else ''}".ljust(5) for v, f in zip(tr.potentials, tr.fired))
            rows.append(f"{tr.mode:<10} {cells} fires={tr.fires}")
        rows.append("(* = spike; values are end-of-tick potentials)")
        return "\n".join(rows)


def asymmetry_demo(sequence=(-1, 1), alpha: int = 1, beta: int = 1) -> AsymmetryDemo:
    """Drive one neuron under both negative-threshold comparisons."""
    traces = {}
    for mode in (NegComparison.STRICT, NegComparison.INCLUSIVE):
        params = NeuronParams(
            alpha=alpha, beta=beta, leak=0, pos_reset=PosReset.LINEAR,
            neg_comparison=mode, neg_action=NegAction.ZERO,
        )
        state = NeuronState()
        pots, fired = [], []
        for s in sequence:
            state, f = neuron_tick(state, params, s)
            pots.append(state.potential)
            fired.append(f)
        traces[mode] = ModeTrace(mode.value, pots, fired)
    return AsymmetryDemo(list(sequence), traces[NegComparison.STRICT], traces[NegComparison.INCLUSIVE])

"""Signed vector-matrix multiplication compiled onto a single core.

Inputs are rate coded: ``|v_i|`` spikes on consecutive ticks starting at
tick 1. Signs are carried by which axons fire. Every row ``i`` owns four
input axons, one per (input sign, weight sign) channel::

    4i + 0   input +, weight +
    4i + 1   input +, weight -
    4i + 2   input -, weight +
    4i + 3   input -, weight -

and channel offset ``k`` is axon type ``k``. Each matrix element ``(i, j)``
gets a positive-product neuron P and a negative-product neuron N whose
spike counts give ``max(v_i M_ij, 0)`` and ``max(-v_i M_ij, 0)``.

Two variants are produced:

* ``SYMMETRIC`` relies on the inclusive (``<=``) negative threshold. Each
  product neuron sees only one channel, so its potential never goes
  negative and no correction is needed.
* ``REFERENCE`` targets the strict (``<``) comparison. Product neurons see
  both channels with opposite signs, and a feedback neuron per product
  neuron loops spikes back through a dedicated axon to drive any negative
  potential back to zero. This doubles neurons and adds ``2mn`` axons.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .core import (
    MAX_AXONS,
    MAX_NEURONS,
    CoreConfig,
    Destination,
    NegAction,
    NegComparison,
    NeuronParams,
    PosReset,
)
from .engine import InputTrace, Network, OutputTrace, run
from .errors import DecodeError, DoesNotFitCore, ValueOutOfRange
from .router import GridTopology

VALUE_BOUND = 255
# Disables the strict negative threshold on reference product neurons; any
# reachable potential stays above -(255 * 255).
REFERENCE_BETA = 2**17


class Variant(str, enum.Enum):
    REFERENCE = "reference"
    SYMMETRIC = "symmetric"


POS, NEG = 1, -1


def _channel(in_sign: int, w_sign: int) -> int:
    return (0 if in_sign > 0 else 2) + (0 if w_sign > 0 else 1)


@dataclass
class VmmProblem:
    v: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=np.int64).reshape(-1)
        self.M = np.atleast_2d(np.asarray(self.M, dtype=np.int64))
        if self.M.ndim != 2 or self.M.shape[0] != len(self.v):
            raise ValueError(f"vector of length {len(self.v)} does not match matrix shape {self.M.shape}")
        if len(self.v) < 1 or self.M.shape[1] < 1:
            raise ValueError("problem dimensions must be at least 1x1")
        check_range(self.v, "vector")
        check_range(self.M, "matrix")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.M.shape


def check_range(values, what="value"):
    arr = np.asarray(values)
    if arr.size and np.abs(arr).max() > VALUE_BOUND:
        bad = arr.flat[int(np.abs(arr).argmax())]
        raise ValueOutOfRange(f"{what} entry {bad} outside [-{VALUE_BOUND}, {VALUE_BOUND}]")


def resource_counts(m: int, n: int, variant) -> Tuple[int, int]:
    """``(axons, neurons)`` needed by a variant for an ``m x n`` matrix."""
    if Variant(variant) is Variant.SYMMETRIC:
        return 4 * m, 2 * m * n
    return 4 * m + 2 * m * n, 4 * m * n


@dataclass(frozen=True)
class ResourceReport:
    m: int
    n: int
    reference_axons: int
    reference_neurons: int
    symmetric_axons: int
    symmetric_neurons: int
    feedback_neurons: int
    feedback_axons: int
    axon_reduction_pct: float
    neuron_reduction_pct: float
    reference_fits: bool
    symmetric_fits: bool


def resource_report(m: int, n: int) -> ResourceReport:
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    ra, rn = resource_counts(m, n, Variant.REFERENCE)
    sa, sn = resource_counts(m, n, Variant.SYMMETRIC)
    return ResourceReport(
        m, n, ra, rn, sa, sn,
        feedback_neurons=rn - sn,
        feedback_axons=ra - sa,
        axon_reduction_pct=100.0 * (ra - sa) / ra,
        neuron_reduction_pct=100.0 * (rn - sn) / rn,
        reference_fits=ra <= MAX_AXONS and rn <= MAX_NEURONS,
        symmetric_fits=sa <= MAX_AXONS and sn <= MAX_NEURONS,
    )


def run_length(M, variant, v=None) -> int:
    """Ticks needed for every product neuron (and feedback loop) to drain.

    Product neurons fire at most once per tick, so a product ``p`` needs
    ``p`` ticks after its first input; feedback doubles the drain. Without
    ``v`` the bound assumes full-range inputs.
    """
    absM = np.abs(np.asarray(M, dtype=np.int64))
    if v is None:
        vmax = VALUE_BOUND
        pmax = VALUE_BOUND * int(absM.max(initial=0))
    else:
        absv = np.abs(np.asarray(v, dtype=np.int64))
        vmax = int(absv.max(initial=0))
        pmax = int((absv[:, None] * absM).max(initial=0))
    if Variant(variant) is Variant.SYMMETRIC:
        return vmax + pmax + 2
    return vmax + 2 * pmax + 3


@dataclass
class VmmMapping:
    variant: Variant
    m: int
    n: int
    core: CoreConfig
    run_length: int
    # (row, input sign, weight sign) -> axon
    input_axons: Dict[Tuple[int, int, int], int]
    # (row, col, output sign) -> neuron
    value_neurons: Dict[Tuple[int, int, int], int]
    # output tap label -> (row, col, output sign)
    taps: Dict[int, Tuple[int, int, int]]
    # value neuron -> (feedback neuron, feedback axon); reference only
    feedback: Dict[int, Tuple[int, int]] = field(default_factory=dict)

    def network(self) -> Network:
        return Network(GridTopology(1, 1), [self.core])

    def decode_table(self) -> dict:
        return {
            "variant": self.variant.value,
            "m": self.m,
            "n": self.n,
            "taps": [
                {"i": i, "j": j, "sign": s, "axon_label": label}
                for label, (i, j, s) in sorted(self.taps.items())
            ],
            "run_length": self.run_length,
        }


@dataclass
class DecodeTable:
    """The part of a mapping needed to turn output spikes into ``y``."""

    variant: Variant
    m: int
    n: int
    taps: Dict[int, Tuple[int, int, int]]
    run_length: int

    @classmethod
    def from_dict(cls, d: dict) -> "DecodeTable":
        taps = {}
        for t in d["taps"]:
            if t["sign"] not in (POS, NEG):
                raise DecodeError(f"tap sign must be +1 or -1 (got {t['sign']!r})")
            taps[int(t["axon_label"])] = (int(t["i"]), int(t["j"]), int(t["sign"]))
        return cls(Variant(d["variant"]), int(d["m"]), int(d["n"]), taps, int(d["run_length"]))


def encode_vector(v, core=(0, 0)) -> InputTrace:
    """Rate-code ``v`` onto the per-row input channels of ``core``."""
    v = np.asarray(v, dtype=np.int64).reshape(-1)
    check_range(v, "vector")
    x, y = core
    events = []
    for i, val in enumerate(v.tolist()):
        if val == 0:
            continue
        sign = POS if val > 0 else NEG
        axons = (4 * i + _channel(sign, POS), 4 * i + _channel(sign, NEG))
        for t in range(1, abs(val) + 1):
            events.extend((t, x, y, a) for a in axons)
    return InputTrace(events)


def map_vmm(M, variant, v=None) -> VmmMapping:
    """Compile matrix ``M`` onto one core.

    With ``v`` the run length is sized for that vector; otherwise it covers
    any in-range vector.
    """
    variant = Variant(variant)
    M = np.atleast_2d(np.asarray(M, dtype=np.int64))
    check_range(M, "matrix")
    m, n = M.shape
    n_axons, n_neurons = resource_counts(m, n, variant)
    if n_axons > MAX_AXONS:
        raise DoesNotFitCore(f"{variant.value} mapping of {m}x{n} needs {n_axons} axons > {MAX_AXONS}")
    if n_neurons > MAX_NEURONS:
        raise DoesNotFitCore(f"{variant.value} mapping of {m}x{n} needs {n_neurons} neurons > {MAX_NEURONS}")

    input_axons = {}
    for i in range(m):
        for s_in in (POS, NEG):
            for s_w in (POS, NEG):
                input_axons[(i, s_in, s_w)] = 4 * i + _channel(s_in, s_w)
    axon_types = [k % 4 for k in range(4 * m)]
    synapses = []
    neurons = [None] * n_neurons
    value_neurons, taps, feedback = {}, {}, {}
    n_value = 2 * m * n

    for i in range(m):
        for j in range(n):
            w = int(M[i, j])
            a = abs(w)
            w_sign = POS if w >= 0 else NEG
            for s_out in (POS, NEG):
                k = 2 * (i * n + j) + (0 if s_out == POS else 1)
                value_neurons[(i, j, s_out)] = k
                taps[k] = (i, j, s_out)
                # input sign that makes this product carry s_out
                s_drive = s_out * w_sign
                drive = input_axons[(i, s_drive, w_sign)]
                oppose = input_axons[(i, -s_drive, w_sign)]
                exit_east = Destination(dx=1, dy=0, axon=k, delay=1)
                weights = [0, 0, 0, 0]
                if variant is Variant.SYMMETRIC:
                    if w != 0:
                        weights[axon_types[drive]] = a
                        synapses.append((drive, k))
                    neurons[k] = NeuronParams(
                        alpha=1, beta=0, leak=0, weights=tuple(weights),
                        pos_reset=PosReset.LINEAR,
                        neg_comparison=NegComparison.INCLUSIVE,
                        neg_action=NegAction.ZERO,
                        dest=exit_east,
                    )
                    continue

                fb_neuron = n_value + k
                fb_axon = 4 * m + k
                fb_type = 1 if w_sign == POS else 0
                axon_types.append(fb_type)
                fb_weights = [0, 0, 0, 0]
                if w != 0:
                    weights[axon_types[drive]] = a
                    weights[axon_types[oppose]] = -a
                    weights[fb_type] = 1
                    fb_weights[axon_types[oppose]] = a
                    synapses += [(drive, k), (oppose, k), (fb_axon, k), (oppose, fb_neuron)]
                neurons[k] = NeuronParams(
                    alpha=1, beta=REFERENCE_BETA, leak=0, weights=tuple(weights),
                    pos_reset=PosReset.LINEAR,
                    neg_comparison=NegComparison.STRICT,
                    neg_action=NegAction.ZERO,
                    dest=exit_east,
                )
                neurons[fb_neuron] = NeuronParams(
                    alpha=1, beta=0, leak=0, weights=tuple(fb_weights),
                    pos_reset=PosReset.LINEAR,
                    neg_comparison=NegComparison.STRICT,
                    neg_action=NegAction.ZERO,
                    dest=Destination(dx=0, dy=0, axon=fb_axon, delay=1),
                )
                feedback[k] = (fb_neuron, fb_axon)

    core = CoreConfig.from_synapses(axon_types, synapses, neurons)
    return VmmMapping(
        variant=variant, m=m, n=n, core=core,
        run_length=run_length(M, variant, v),
        input_axons=input_axons, value_neurons=value_neurons,
        taps=taps, feedback=feedback,
    )


def decode_output(mapping, trace: OutputTrace) -> np.ndarray:
    """``y_j`` = positive-tap spikes minus negative-tap spikes over column ``j``.

    ``mapping`` may be a :class:`VmmMapping` or a :class:`DecodeTable`.
    """
    labels = trace.events["axon"]
    y = np.zeros(mapping.n, dtype=np.int64)
    if not len(labels):
        return y
    uniq, counts = np.unique(labels, return_counts=True)
    for label, c in zip(uniq.tolist(), counts.tolist()):
        try:
            _, j, sign = mapping.taps[label]
        except KeyError:
            raise DecodeError(f"output event with unknown tap label {label}") from None
        y[j] += sign * c
    return y


@dataclass
class VmmRun:
    problem: VmmProblem
    mapping: VmmMapping
    network: Network
    trace: OutputTrace
    y: np.ndarray

    def value_fire_counts(self) -> Dict[Tuple[int, int, int], int]:
        counts = self.network.core_fire_counts((0, 0))
        return {key: int(counts[k]) for key, k in self.mapping.value_neurons.items()}


def execute(problem: VmmProblem, variant, backend: str = "compiled", run_length: Optional[int] = None) -> VmmRun:
    mapping = map_vmm(problem.M, variant, v=problem.v)
    net = mapping.network()
    ticks = mapping.run_length if run_length is None else run_length
    trace = run(net, encode_vector(problem.v), ticks, backend=backend)
    return VmmRun(problem, mapping, net, trace, decode_output(mapping, trace))


def vmm_end_to_end(problem: VmmProblem, variant, backend: str = "compiled") -> np.ndarray:
    return execute(problem, variant, backend=backend).y

"""Per-core domain model: neuron dynamics, crossbar, and axon-delay scheduler.

A core has ``A`` axons (inputs) and ``N`` neurons. Axon ``i`` carries one of
four types; neuron ``j`` owns one signed weight per type, and the binary
crossbar decides which axons reach which neurons.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import AxonOutOfRange, DelayOutOfRange, PotentialOverflow, StaleInjection

MAX_AXONS = 256
MAX_NEURONS = 256
NUM_AXON_TYPES = 4
SCHEDULER_DEPTH = 16
MIN_DELAY = 1
MAX_DELAY = SCHEDULER_DEPTH - 1
WEIGHT_MIN = -256
WEIGHT_MAX = 255
POTENTIAL_BOUND = 2**31 - 1


class PosReset(str, enum.Enum):
    LINEAR = "linear"  # V := V - alpha
    ZERO = "zero"  # V := 0


class NegComparison(str, enum.Enum):
    STRICT = "strict"  # V < -beta
    INCLUSIVE = "inclusive"  # V <= -beta


class NegAction(str, enum.Enum):
    ZERO = "zero"
    SATURATE = "saturate"  # V := -beta


@dataclass(frozen=True)
class Destination:
    dx: int
    dy: int
    axon: int
    delay: int = 1


@dataclass(frozen=True)
class NeuronParams:
    """Static configuration of one neuron.

    Construction does not validate; use :func:`neuron_diagnostics` (or
    ``engine.validate``) so that malformed configs can be reported rather
    than rejected piecemeal.
    """

    alpha: int = 1
    beta: int = 0
    leak: int = 0
    weights: tuple = (0, 0, 0, 0)
    pos_reset: PosReset = PosReset.LINEAR
    neg_comparison: NegComparison = NegComparison.STRICT
    neg_action: NegAction = NegAction.ZERO
    dest: Optional[Destination] = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "pos_reset", PosReset(self.pos_reset))
        object.__setattr__(self, "neg_comparison", NegComparison(self.neg_comparison))
        object.__setattr__(self, "neg_action", NegAction(self.neg_action))


@dataclass(frozen=True)
class NeuronState:
    potential: int = 0
    overflow: bool = False


def advance_potential(v, syn, leak, alpha, beta, linear, inclusive, saturate):
    """One tick of membrane dynamics on plain integers.

    Returns ``(v, fired, overflow)``. Kept free of Python objects so the
    compiled engine kernel can reuse it verbatim.
    """
    v = v + syn
    if v > POTENTIAL_BOUND or v < -POTENTIAL_BOUND:
        return v, False, True
    v = v + leak
    if v > POTENTIAL_BOUND or v < -POTENTIAL_BOUND:
        return v, False, True
    fired = False
    if v >= alpha:
        fired = True
        if linear:
            v = v - alpha
        else:
            v = 0
    if inclusive:
        neg = v <= -beta
    else:
        neg = v < -beta
    if neg:
        if saturate:
            v = -beta
        else:
            v = 0
    return v, fired, False


def neuron_tick(state: NeuronState, params: NeuronParams, synaptic_sum: int):
    """Integrate, leak, then apply the positive and negative thresholds.

    Returns ``(new_state, fired)``. Raises :class:`PotentialOverflow` when the
    potential leaves ``[-(2**31 - 1), 2**31 - 1]``.
    """
    v, fired, overflow = advance_potential(
        state.potential,
        int(synaptic_sum),
        params.leak,
        params.alpha,
        params.beta,
        params.pos_reset is PosReset.LINEAR,
        params.neg_comparison is NegComparison.INCLUSIVE,
        params.neg_action is NegAction.SATURATE,
    )
    if overflow:
        raise PotentialOverflow(v)
    return replace(state, potential=v), fired


class CoreConfig:
    """Crossbar, axon types and neuron parameters of one core."""

    def __init__(self, axon_types: Sequence[int], connectivity, neurons: Sequence[NeuronParams]):
        self.axon_types = np.asarray(axon_types, dtype=np.int64).reshape(-1)
        self.connectivity = np.asarray(connectivity, dtype=bool)
        self.neurons = list(neurons)
        if self.connectivity.shape != (self.num_axons, self.num_neurons):
            raise ValueError(
                f"connectivity shape {self.connectivity.shape} does not match "
                f"{self.num_axons} axons x {self.num_neurons} neurons"
            )

    @classmethod
    def from_synapses(cls, axon_types, synapses: Iterable[tuple], neurons):
        """Build from sparse ``(axon, neuron)`` pairs."""
        neurons = list(neurons)
        conn = np.zeros((len(axon_types), len(neurons)), dtype=bool)
        for a, n in synapses:
            if not (0 <= a < conn.shape[0] and 0 <= n < conn.shape[1]):
                raise AxonOutOfRange(f"synapse ({a}, {n}) outside {conn.shape[0]}x{conn.shape[1]} crossbar")
            conn[a, n] = True
        return cls(axon_types, conn, neurons)

    @property
    def num_axons(self) -> int:
        return len(self.axon_types)

    @property
    def num_neurons(self) -> int:
        return len(self.neurons)

    def synapses(self) -> Iterator[tuple]:
        """Connected ``(axon, neuron)`` pairs in row-major order."""
        for a, n in zip(*np.nonzero(self.connectivity)):
            yield int(a), int(n)

    def weight_table(self) -> np.ndarray:
        """``(N, 4)`` array of per-type weights."""
        if not self.neurons:
            return np.zeros((0, NUM_AXON_TYPES), dtype=np.int64)
        return np.array([p.weights for p in self.neurons], dtype=np.int64)

    def effective_weights(self) -> np.ndarray:
        """``(A, N)`` matrix ``c[i, j] * weights_j[type_i]``."""
        table = self.weight_table()
        return np.where(self.connectivity, table[:, self.axon_types].T, 0)

    def __eq__(self, other):
        if not isinstance(other, CoreConfig):
            return NotImplemented
        return (
            np.array_equal(self.axon_types, other.axon_types)
            and np.array_equal(self.connectivity, other.connectivity)
            and self.neurons == other.neurons
        )

    def __repr__(self):
        return f"CoreConfig(axons={self.num_axons}, neurons={self.num_neurons}, synapses={int(self.connectivity.sum())})"


def synaptic_sum(core: CoreConfig, active_axons: Iterable[int], j: int) -> int:
    """Weighted sum of active axons gated by the crossbar column of neuron ``j``."""
    weights = core.neurons[j].weights
    total = 0
    for i in active_axons:
        if core.connectivity[i, j]:
            total += weights[core.axon_types[i]]
    return int(total)


def neuron_diagnostics(params: NeuronParams) -> list:
    out = []
    if params.alpha < 1:
        out.append(f"alpha must be >= 1 (got {params.alpha})")
    if params.beta < 0:
        out.append(f"beta must be >= 0 (got {params.beta})")
    if len(params.weights) != NUM_AXON_TYPES:
        out.append(f"expected {NUM_AXON_TYPES} weights (got {len(params.weights)})")
    for k, w in enumerate(params.weights):
        if not WEIGHT_MIN <= w <= WEIGHT_MAX:
            out.append(f"weight[{k}]={w} outside 9-bit range [{WEIGHT_MIN}, {WEIGHT_MAX}]")
    if params.dest is not None:
        d = params.dest
        if not MIN_DELAY <= d.delay <= MAX_DELAY:
            out.append(f"delay out of range ({d.delay} not in [{MIN_DELAY}, {MAX_DELAY}])")
        if not 0 <= d.axon < MAX_AXONS:
            out.append(f"axon exceeds destination core A ({d.axon} not in [0, {MAX_AXONS}))")
    return out


def core_diagnostics(core: CoreConfig) -> list:
    out = []
    if not 1 <= core.num_axons <= MAX_AXONS:
        out.append(f"num_axons {core.num_axons} not in [1, {MAX_AXONS}]")
    if not 1 <= core.num_neurons <= MAX_NEURONS:
        out.append(f"num_neurons {core.num_neurons} not in [1, {MAX_NEURONS}]")
    bad = [int(t) for t in core.axon_types if not 0 <= t < NUM_AXON_TYPES]
    if bad:
        out.append(f"axon types outside [0, {NUM_AXON_TYPES}): {sorted(set(bad))}")
    for j, p in enumerate(core.neurons):
        out.extend(f"neuron {j}: {msg}" for msg in neuron_diagnostics(p))
    return out


class SchedulerBuffer:
    """Ring of 16 tick slots, each a bitset over the core's axons.

    ``slots`` and ``counter`` may be views into larger arrays owned by a
    network, so that per-core buffers and the compiled engine share state.
    """

    def __init__(self, num_axons: int, slots: Optional[np.ndarray] = None, counter: Optional[np.ndarray] = None):
        self.num_axons = num_axons
        self.slots = np.zeros((SCHEDULER_DEPTH, num_axons), dtype=bool) if slots is None else slots
        self._counter = np.zeros(1, dtype=np.int64) if counter is None else counter

    @property
    def collision_count(self) -> int:
        return int(self._counter[0])

    def _set(self, slot: int, axon: int):
        if self.slots[slot, axon]:
            self._counter[0] += 1
        else:
            self.slots[slot, axon] = True

    def _check_axon(self, axon: int):
        if not 0 <= axon < self.num_axons:
            raise AxonOutOfRange(f"axon {axon} not in [0, {self.num_axons})")

    def enqueue(self, axon: int, now: int, delay: int):
        """Schedule a spike emitted at tick ``now`` for tick ``now + delay``."""
        if not MIN_DELAY <= delay <= MAX_DELAY:
            raise DelayOutOfRange(f"delay {delay} not in [{MIN_DELAY}, {MAX_DELAY}]")
        self._check_axon(axon)
        self._set((now + delay) % SCHEDULER_DEPTH, axon)

    def inject(self, axon: int, at_tick: int, next_tick: int):
        """Write a spike straight into the slot for ``at_tick``.

        ``next_tick`` is the earliest tick not yet drained.
        """
        self._check_axon(axon)
        if at_tick < next_tick:
            raise StaleInjection(f"tick {at_tick} already drained (next tick is {next_tick})")
        if at_tick >= next_tick + SCHEDULER_DEPTH:
            raise StaleInjection(
                f"tick {at_tick} is beyond the {SCHEDULER_DEPTH}-slot window starting at {next_tick}"
            )
        self._set(at_tick % SCHEDULER_DEPTH, axon)

    def drain(self, now: int) -> list:
        slot = self.slots[now % SCHEDULER_DEPTH]
        active = [int(a) for a in np.flatnonzero(slot)]
        slot[:] = False
        return active

    def pending(self) -> int:
        return int(self.slots.sum())

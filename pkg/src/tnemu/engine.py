"""Tick-synchronous orchestration of a grid of cores.

Each tick runs four phases with a barrier between them:

A. external injections for the tick are written into scheduler slots;
B. every core drains its scheduler slot for the tick;
C. every neuron integrates its synaptic sum and updates, in index order;
D. fired spikes are routed: on-grid packets are enqueued at
   ``tick + delay``, off-grid packets land in the output buffer.

Two interchangeable backends execute these phases. ``"python"`` composes
the per-core operations directly and is the readable reference;
``"compiled"`` flattens the network and runs a numba kernel. Both operate on
the same state arrays, so they can be interleaved.
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import _kernel
from .core import (
    SCHEDULER_DEPTH,
    CoreConfig,
    NegAction,
    NegComparison,
    NeuronState,
    PosReset,
    SchedulerBuffer,
    core_diagnostics,
    neuron_tick,
    synaptic_sum,
)
from .errors import AxonOutOfRange, ConfigError, EmulatorError, PotentialOverflow, StaleInjection
from .router import Delivered, Edge, Exited, GridTopology, SpikePacket, route, route_and_deliver

log = logging.getLogger(__name__)

EDGES = (Edge.EAST, Edge.WEST, Edge.NORTH, Edge.SOUTH)
_EDGE_CODE = {e: k for k, e in enumerate(EDGES)}

INPUT_DTYPE = np.dtype([("tick", "i8"), ("core_x", "i4"), ("core_y", "i4"), ("axon", "i4")])
OUTPUT_DTYPE = np.dtype(
    [
        ("tick", "i8"),
        ("core_x", "i4"),
        ("core_y", "i4"),
        ("neuron", "i4"),
        ("edge", "i1"),
        ("residual_dx", "i4"),
        ("residual_dy", "i4"),
        ("axon", "i4"),
    ]
)

INPUT_HEADER = ["tick", "core_x", "core_y", "axon"]
OUTPUT_HEADER = ["tick", "core_x", "core_y", "axon", "neuron", "exit_edge"]


class OutputEvent(NamedTuple):
    tick: int
    core_x: int
    core_y: int
    neuron: int
    edge: Edge
    residual_dx: int
    residual_dy: int
    axon: int  # destination axon label carried by the exiting packet


class InputTrace:
    """External spike injections, kept sorted by (tick, core_y, core_x, axon)."""

    def __init__(self, events=None):
        if events is None:
            arr = np.zeros(0, dtype=INPUT_DTYPE)
        elif isinstance(events, np.ndarray) and events.dtype == INPUT_DTYPE:
            arr = events.copy()
        else:
            arr = np.array([tuple(int(x) for x in e) for e in events], dtype=INPUT_DTYPE)
        if arr.size and (arr["tick"] < 0).any():
            raise ValueError("input ticks must be non-negative")
        order = np.lexsort((arr["axon"], arr["core_x"], arr["core_y"], arr["tick"]))
        self.events = arr[order]

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        for e in self.events:
            yield tuple(int(x) for x in e)

    def __add__(self, other: "InputTrace") -> "InputTrace":
        return InputTrace(np.concatenate([self.events, other.events]))

    def __eq__(self, other):
        if not isinstance(other, InputTrace):
            return NotImplemented
        return np.array_equal(self.events, other.events)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(INPUT_HEADER)
        w.writerows(self)
        return buf.getvalue()


class OutputTrace:
    """Boundary-exit events in total order (tick, core_y, core_x, neuron)."""

    def __init__(self, events=None):
        if events is None:
            events = np.zeros(0, dtype=OUTPUT_DTYPE)
        elif not isinstance(events, np.ndarray):
            events = np.array(
                [(e[0], e[1], e[2], e[3], _EDGE_CODE[Edge(e[4])], e[5], e[6], e[7]) for e in events],
                dtype=OUTPUT_DTYPE,
            )
        self.events = events

    @classmethod
    def concat(cls, parts: Iterable["OutputTrace"]) -> "OutputTrace":
        arrays = [p.events for p in parts]
        if not arrays:
            return cls()
        return cls(np.concatenate(arrays))

    def __len__(self):
        return len(self.events)

    def __getitem__(self, k) -> OutputEvent:
        e = self.events[k]
        return OutputEvent(
            int(e["tick"]), int(e["core_x"]), int(e["core_y"]), int(e["neuron"]),
            EDGES[e["edge"]], int(e["residual_dx"]), int(e["residual_dy"]), int(e["axon"]),
        )

    def __iter__(self) -> Iterator[OutputEvent]:
        for k in range(len(self.events)):
            yield self[k]

    def __eq__(self, other):
        if not isinstance(other, OutputTrace):
            return NotImplemented
        return np.array_equal(self.events, other.events)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(OUTPUT_HEADER)
        ev = self.events
        names = [e.value for e in EDGES]
        for row in zip(
            ev["tick"].tolist(), ev["core_x"].tolist(), ev["core_y"].tolist(),
            ev["axon"].tolist(), ev["neuron"].tolist(), ev["edge"].tolist(),
        ):
            w.writerow(row[:5] + (names[row[5]],))
        return buf.getvalue()


class _Program:
    """Flattened static tables for the compiled backend."""

    def __init__(self, net: "Network"):
        grid = net.grid
        cores = net.cores
        n_total = net.neuron_offset[-1]
        a_total = net.axon_offset[-1]
        self.alpha = np.empty(n_total, np.int64)
        self.beta = np.empty(n_total, np.int64)
        self.leak = np.empty(n_total, np.int64)
        self.linear = np.empty(n_total, np.bool_)
        self.inclusive = np.empty(n_total, np.bool_)
        self.saturate = np.empty(n_total, np.bool_)
        self.route_kind = np.zeros(n_total, np.int8)
        self.route_target = np.zeros(n_total, np.int64)
        self.delay = np.ones(n_total, np.int64)
        self.neuron_core = np.empty(n_total, np.int64)
        self.local_neuron = np.empty(n_total, np.int32)
        self.edge = np.zeros(n_total, np.int8)
        self.res_dx = np.zeros(n_total, np.int32)
        self.res_dy = np.zeros(n_total, np.int32)
        self.tap = np.zeros(n_total, np.int32)
        self.axon_core = np.empty(a_total, np.int64)

        syn_src, syn_dst, syn_w = [], [], []
        for c, core in enumerate(cores):
            x, y = grid.coords(c)
            a0, n0 = net.axon_offset[c], net.neuron_offset[c]
            self.axon_core[a0 : a0 + core.num_axons] = c
            eff = core.effective_weights()
            ai, nj = np.nonzero(core.connectivity)
            syn_src.append(ai + a0)
            syn_dst.append(nj + n0)
            syn_w.append(eff[ai, nj])
            for j, p in enumerate(core.neurons):
                n = n0 + j
                self.alpha[n], self.beta[n], self.leak[n] = p.alpha, p.beta, p.leak
                self.linear[n] = p.pos_reset is PosReset.LINEAR
                self.inclusive[n] = p.neg_comparison is NegComparison.INCLUSIVE
                self.saturate[n] = p.neg_action is NegAction.SATURATE
                self.neuron_core[n] = c
                self.local_neuron[n] = j
                if p.dest is None:
                    continue
                self.delay[n] = p.dest.delay
                out = route(grid, (x, y), p.dest.dx, p.dest.dy)
                if isinstance(out, Delivered):
                    self.route_kind[n] = _kernel.ROUTE_DELIVER
                    self.route_target[n] = net.axon_offset[grid.index(*out.core)] + p.dest.axon
                else:
                    self.route_kind[n] = _kernel.ROUTE_EXIT
                    self.edge[n] = _EDGE_CODE[out.edge]
                    self.res_dx[n], self.res_dy[n] = out.residual_dx, out.residual_dy
                    self.tap[n] = p.dest.axon

        src = np.concatenate(syn_src).astype(np.int64)
        dst = np.concatenate(syn_dst).astype(np.int64)
        w = np.concatenate(syn_w).astype(np.int64)
        order = np.lexsort((dst, src))
        self.syn_neuron = dst[order]
        self.syn_weight = w[order]
        self.syn_ptr = np.zeros(a_total + 1, np.int64)
        np.cumsum(np.bincount(src, minlength=a_total), out=self.syn_ptr[1:])
        self.core_x = (self.neuron_core % grid.width).astype(np.int32)
        self.core_y = (self.neuron_core // grid.width).astype(np.int32)

    def events(self, ticks: np.ndarray, neurons: np.ndarray) -> np.ndarray:
        out = np.empty(len(ticks), dtype=OUTPUT_DTYPE)
        out["tick"] = ticks
        out["core_x"] = self.core_x[neurons]
        out["core_y"] = self.core_y[neurons]
        out["neuron"] = self.local_neuron[neurons]
        out["edge"] = self.edge[neurons]
        out["residual_dx"] = self.res_dx[neurons]
        out["residual_dy"] = self.res_dy[neurons]
        out["axon"] = self.tap[neurons]
        return out


class Network:
    """Configuration plus mutable state of a grid of cores.

    ``cores`` is either a mapping ``(x, y) -> CoreConfig`` or a sequence in
    canonical order (row-major by y, then x).
    """

    def __init__(self, grid: GridTopology, cores: Union[Mapping, Sequence[CoreConfig]]):
        self.grid = grid
        if isinstance(cores, Mapping):
            missing = [xy for xy in ((x, y) for y in range(grid.height) for x in range(grid.width)) if xy not in cores]
            if missing:
                raise ConfigError(f"no core configured at {missing[0]} ({len(missing)} missing)")
            extra = [xy for xy in cores if tuple(xy) not in grid]
            if extra:
                raise ConfigError(f"core {extra[0]} lies outside the {grid.width}x{grid.height} grid")
            cores = [cores[grid.coords(c)] for c in range(len(grid))]
        cores = list(cores)
        if len(cores) != len(grid):
            raise ConfigError(f"expected {len(grid)} cores, got {len(cores)}")
        self.cores: List[CoreConfig] = cores
        self.axon_offset = np.concatenate([[0], np.cumsum([c.num_axons for c in cores])]).astype(np.int64)
        self.neuron_offset = np.concatenate([[0], np.cumsum([c.num_neurons for c in cores])]).astype(np.int64)
        self._program: Optional[_Program] = None
        self._validated = False
        self.reset()

    def reset(self):
        """Zero every potential, scheduler and counter; rewind to tick 0."""
        self.current_tick = 0
        self.potentials = np.zeros(self.neuron_offset[-1], dtype=np.int64)
        self.overflow = np.zeros(self.neuron_offset[-1], dtype=bool)
        self.fire_counts = np.zeros(self.neuron_offset[-1], dtype=np.int64)
        self.ring = np.zeros((SCHEDULER_DEPTH, self.axon_offset[-1]), dtype=bool)
        self.collisions = np.zeros(len(self.cores), dtype=np.int64)
        self.halted = False
        self._outputs: List[OutputTrace] = []
        self._inputs = np.zeros(0, dtype=INPUT_DTYPE)
        self._in_ticks = np.zeros(0, np.int64)
        self._in_axons = np.zeros(0, np.int64)
        self._in_pos = 0

    # -- per-core views -------------------------------------------------
    def _cidx(self, core) -> int:
        if isinstance(core, (int, np.integer)):
            return int(core)
        x, y = core
        if (x, y) not in self.grid:
            raise AxonOutOfRange(f"no core at {(x, y)}")
        return self.grid.index(x, y)

    def scheduler(self, core) -> SchedulerBuffer:
        c = self._cidx(core)
        a0, a1 = self.axon_offset[c], self.axon_offset[c + 1]
        return SchedulerBuffer(int(a1 - a0), self.ring[:, a0:a1], self.collisions[c : c + 1])

    def core_potentials(self, core) -> np.ndarray:
        c = self._cidx(core)
        return self.potentials[self.neuron_offset[c] : self.neuron_offset[c + 1]]

    def core_fire_counts(self, core) -> np.ndarray:
        c = self._cidx(core)
        return self.fire_counts[self.neuron_offset[c] : self.neuron_offset[c + 1]]

    def neuron_states(self, core) -> List[NeuronState]:
        c = self._cidx(core)
        sl = slice(self.neuron_offset[c], self.neuron_offset[c + 1])
        return [NeuronState(int(v), bool(o)) for v, o in zip(self.potentials[sl], self.overflow[sl])]

    @property
    def output_buffer(self) -> OutputTrace:
        return OutputTrace.concat(self._outputs)

    @property
    def program(self) -> _Program:
        if self._program is None:
            self._program = _Program(self)
        return self._program

    # -- inputs ------------------------------------------------------------
    def load_inputs(self, inputs: InputTrace):
        """Queue an external trace; injections are applied in phase A of their tick."""
        ev = inputs.events
        if len(ev):
            if ev["tick"][0] < self.current_tick:
                raise StaleInjection(
                    f"input at tick {ev['tick'][0]} precedes current tick {self.current_tick}"
                )
            for tick, x, y, axon in ev[["tick", "core_x", "core_y", "axon"]].tolist():
                if (x, y) not in self.grid:
                    raise AxonOutOfRange(f"input at tick {tick} targets missing core {(x, y)}")
                na = self.cores[self.grid.index(x, y)].num_axons
                if not 0 <= axon < na:
                    raise AxonOutOfRange(f"input at tick {tick}: axon {axon} not in [0, {na}) of core {(x, y)}")
        remaining = self._inputs[self._in_pos :]
        self._inputs = InputTrace(np.concatenate([remaining, ev])).events
        self._in_pos = 0
        cidx = self._inputs["core_y"].astype(np.int64) * self.grid.width + self._inputs["core_x"]
        self._in_ticks = self._inputs["tick"].astype(np.int64)
        self._in_axons = self.axon_offset[cidx] + self._inputs["axon"]

    def inject(self, core, axon: int, at_tick: int):
        """Immediate injection; ``at_tick`` must fall in the scheduler window."""
        self.scheduler(core).inject(axon, at_tick, self.current_tick)

    # -- execution -----------------------------------------------------------
    def _ensure_valid(self):
        if self.halted:
            raise EmulatorError("network halted after an error; call reset()")
        if not self._validated:
            diags = validate(self)
            if diags:
                raise ConfigError(f"{len(diags)} configuration problem(s): {diags[0]}", diags)
            self._validated = True

    def step(self, workers: int = 1) -> List[OutputEvent]:
        """Execute one tick with the reference backend."""
        self._ensure_valid()
        t = self.current_tick
        grid = self.grid
        # A
        while self._in_pos < len(self._in_ticks) and self._in_ticks[self._in_pos] == t:
            e = self._inputs[self._in_pos]
            self.scheduler((int(e["core_x"]), int(e["core_y"]))).inject(int(e["axon"]), t, t)
            self._in_pos += 1

        # B + C
        def update(c):
            core = self.cores[c]
            active = self.scheduler(c).drain(t)
            n0 = self.neuron_offset[c]
            fired = []
            for j, params in enumerate(core.neurons):
                syn = synaptic_sum(core, active, j)
                try:
                    state, f = neuron_tick(NeuronState(int(self.potentials[n0 + j])), params, syn)
                except PotentialOverflow as exc:
                    self.overflow[n0 + j] = True
                    raise PotentialOverflow(exc.potential, grid.coords(c), j, t) from None
                self.potentials[n0 + j] = state.potential
                if f:
                    fired.append(j)
            return fired

        try:
            if workers > 1:
                with ThreadPoolExecutor(workers) as pool:
                    fired_per_core = list(pool.map(update, range(len(self.cores))))
            else:
                fired_per_core = [update(c) for c in range(len(self.cores))]
        except PotentialOverflow:
            self.halted = True
            raise

        # D
        schedulers = {grid.coords(c): self.scheduler(c) for c in range(len(self.cores))}
        events = []
        for c, fired in enumerate(fired_per_core):
            origin = grid.coords(c)
            core = self.cores[c]
            n0 = self.neuron_offset[c]
            for j in fired:
                self.fire_counts[n0 + j] += 1
                d = core.neurons[j].dest
                if d is None:
                    continue
                pkt = SpikePacket(d.dx, d.dy, d.axon, d.delay, emit_tick=t, source=(*origin, j))
                outcome = route_and_deliver(grid, origin, pkt, schedulers)
                if isinstance(outcome, Exited):
                    events.append(
                        OutputEvent(t, origin[0], origin[1], j, outcome.edge,
                                    outcome.residual_dx, outcome.residual_dy, d.axon)
                    )
        self.current_tick = t + 1
        if events:
            self._outputs.append(OutputTrace(events))
        return events

    def _run_compiled(self, ticks: int) -> List[OutputTrace]:
        p = self.program
        t, t_end = self.current_tick, self.current_tick + ticks
        cap = max(1 << 18, 8 * len(self.potentials))
        parts = []
        while True:
            out_tick = np.empty(cap, np.int64)
            out_neuron = np.empty(cap, np.int64)
            t, self._in_pos, n_out, status, err_n, err_v = _kernel.run_ticks(
                t, t_end,
                self._in_ticks, self._in_axons, self._in_pos,
                self.ring, self.collisions, self.potentials, self.fire_counts,
                p.axon_core, p.syn_ptr, p.syn_neuron, p.syn_weight,
                p.alpha, p.beta, p.leak, p.linear, p.inclusive, p.saturate,
                p.route_kind, p.route_target, p.delay,
                out_tick, out_neuron,
            )
            if n_out:
                parts.append(OutputTrace(p.events(out_tick[:n_out], out_neuron[:n_out])))
            if status == _kernel.FLUSH:
                log.debug("output buffer flushed at tick %d (%d events)", t, n_out)
                continue
            self.current_tick = t
            if status == _kernel.OVERFLOW:
                self.overflow[err_n] = True
                self.halted = True
                self._outputs.extend(parts)
                c = int(p.neuron_core[err_n])
                raise PotentialOverflow(int(err_v), self.grid.coords(c), int(p.local_neuron[err_n]), t)
            return parts

    def run_ticks(self, ticks: int, backend: str = "compiled", workers: int = 1) -> OutputTrace:
        """Advance ``ticks`` ticks from the current tick using queued inputs."""
        if ticks < 1:
            raise ValueError(f"ticks must be >= 1 (got {ticks})")
        self._ensure_valid()
        if backend == "compiled":
            parts = self._run_compiled(ticks)
            self._outputs.extend(parts)
            return OutputTrace.concat(parts)
        if backend == "python":
            events = []
            for _ in range(ticks):
                events.extend(self.step(workers=workers))
            return OutputTrace(events)
        raise ValueError(f"unknown backend {backend!r}")


def step(net: Network) -> List[OutputEvent]:
    return net.step()


def run(net: Network, inputs: Optional[InputTrace], ticks: int, backend: str = "compiled", workers: int = 1) -> OutputTrace:
    """Run ``ticks`` ticks with ``inputs``; ``net`` holds the final state afterwards."""
    if inputs is not None:
        net.load_inputs(inputs)
    return net.run_ticks(ticks, backend=backend, workers=workers)


def validate(net: Network) -> List[str]:
    """Return human-readable problems with ``net``; empty means valid."""
    diags = []
    grid = net.grid
    for c, core in enumerate(net.cores):
        x, y = grid.coords(c)
        where = f"core ({x},{y})"
        diags.extend(f"{where}: {msg}" for msg in core_diagnostics(core))
        if core.connectivity.shape != (core.num_axons, core.num_neurons):
            diags.append(f"{where}: crossbar shape {core.connectivity.shape} mismatches axon/neuron counts")
        for j, p in enumerate(core.neurons):
            d = p.dest
            if d is None or not 0 <= d.axon < 256:
                continue
            out = route(grid, (x, y), d.dx, d.dy)
            if isinstance(out, Delivered):
                target = net.cores[grid.index(*out.core)]
                if d.axon >= target.num_axons:
                    diags.append(
                        f"{where}: neuron {j}: axon exceeds destination core A "
                        f"({d.axon} >= {target.num_axons} at core {out.core})"
                    )
    return diags

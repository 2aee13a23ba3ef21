"""Compiled tick loop over a flattened network.

All cores are flattened into global axon and neuron index spaces in
canonical core order, so appending exits in neuron order yields the
(tick, core y, core x, neuron) event order for free.
"""
import numba
import numpy as np

from .core import SCHEDULER_DEPTH, advance_potential

OK = 0
OVERFLOW = 1
FLUSH = 2

ROUTE_NONE = 0
ROUTE_DELIVER = 1
ROUTE_EXIT = 2

_advance = numba.njit(cache=True)(advance_potential)


@numba.njit(cache=True)
def run_ticks(
    t0, t1,
    in_ticks, in_axons, in_pos,
    ring, collisions, potentials, fire_counts,
    axon_core, syn_ptr, syn_neuron, syn_weight,
    alpha, beta, leak, linear, inclusive, saturate,
    route_kind, route_target, delay,
    out_tick, out_neuron,
):
    """Advance ticks ``t0 .. t1-1``.

    Returns ``(next_tick, in_pos, n_out, status, err_neuron, err_value)``.
    Stops early with FLUSH when the output buffer might not hold another
    tick, or with OVERFLOW mid-tick.
    """
    n_axons = ring.shape[1]
    n_neurons = potentials.shape[0]
    sums = np.zeros(n_neurons, dtype=np.int64)
    fired = np.empty(n_neurons, dtype=np.int64)
    cap = out_tick.shape[0]
    n_out = 0
    for t in range(t0, t1):
        if cap - n_out < n_neurons:
            return t, in_pos, n_out, FLUSH, -1, 0
        slot = t % SCHEDULER_DEPTH
        # A: external injections for this tick
        while in_pos < in_ticks.shape[0] and in_ticks[in_pos] == t:
            a = in_axons[in_pos]
            if ring[slot, a]:
                collisions[axon_core[a]] += 1
            else:
                ring[slot, a] = True
            in_pos += 1
        # B: drain
        for a in range(n_axons):
            if ring[slot, a]:
                ring[slot, a] = False
                for k in range(syn_ptr[a], syn_ptr[a + 1]):
                    sums[syn_neuron[k]] += syn_weight[k]
        # C: neuron updates
        n_fired = 0
        for n in range(n_neurons):
            v, f, o = _advance(
                potentials[n], sums[n], leak[n], alpha[n], beta[n],
                linear[n], inclusive[n], saturate[n],
            )
            sums[n] = 0
            if o:
                return t, in_pos, n_out, OVERFLOW, n, v
            potentials[n] = v
            if f:
                fire_counts[n] += 1
                fired[n_fired] = n
                n_fired += 1
        # D: routing
        for k in range(n_fired):
            n = fired[k]
            kind = route_kind[n]
            if kind == ROUTE_DELIVER:
                g = route_target[n]
                s = (t + delay[n]) % SCHEDULER_DEPTH
                if ring[s, g]:
                    collisions[axon_core[g]] += 1
                else:
                    ring[s, g] = True
            elif kind == ROUTE_EXIT:
                out_tick[n_out] = t
                out_neuron[n_out] = n
                n_out += 1
    return t1, in_pos, n_out, OK, -1, 0

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tnemu.core import CoreConfig, Destination, NegAction, NegComparison, NeuronParams, PosReset
from tnemu.engine import InputTrace, Network, OutputTrace, run, validate
from tnemu.errors import ConfigError, PotentialOverflow, StaleInjection
from tnemu.router import Edge, GridTopology


def minimal_core(dest=None, weight=1):
    return CoreConfig.from_synapses([0], [(0, 0)], [NeuronParams(weights=(weight, 0, 0, 0), dest=dest)])


def test_empty_network_step_advances():
    net = Network(GridTopology(1, 1), [minimal_core()])
    assert net.step() == []
    assert net.current_tick == 1


def test_single_neuron_step(single_neuron_net):
    single_neuron_net.load_inputs(InputTrace([(0, 0, 0, 0)]))
    events = single_neuron_net.step()
    assert len(events) == 1
    e = events[0]
    assert (e.tick, e.core_x, e.core_y, e.neuron, e.edge, e.residual_dx) == (0, 0, 0, 0, Edge.EAST, 0)


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_single_neuron_run(single_neuron_net, backend):
    trace = run(single_neuron_net, InputTrace([(0, 0, 0, 0), (1, 0, 0, 0)]), 5, backend=backend)
    assert [e.tick for e in trace] == [0, 1]
    assert single_neuron_net.current_tick == 5


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_no_inputs_empty_trace(single_neuron_net, backend):
    assert len(run(single_neuron_net, None, 10, backend=backend)) == 0


def loopback_net():
    # neuron 0: driven by axon 0, loops back to axon 1 (delay 1)
    # neuron 1: driven by axon 1, exits north so arrival is observable
    neurons = [
        NeuronParams(weights=(1, 0, 0, 0), dest=Destination(0, 0, axon=1, delay=1)),
        NeuronParams(weights=(0, 1, 0, 0), dest=Destination(0, 1, axon=9, delay=1)),
    ]
    return Network(GridTopology(1, 1), [CoreConfig.from_synapses([0, 1], [(0, 0), (1, 1)], neurons)])


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_feedback_loopback_is_causal(backend):
    net = loopback_net()
    trace = run(net, InputTrace([(3, 0, 0, 0)]), 8, backend=backend)
    assert [(e.tick, e.neuron, e.edge, e.axon) for e in trace] == [(4, 1, Edge.NORTH, 9)]


@pytest.mark.parametrize("delay", [1, 7, 15])
def test_delivery_tick_is_emit_plus_delay(delay):
    neurons = [
        NeuronParams(weights=(1, 0, 0, 0), dest=Destination(1, 0, axon=0, delay=delay)),
        NeuronParams(weights=(1, 0, 0, 0), dest=Destination(1, 0, axon=0, delay=1)),
    ]
    c0 = CoreConfig.from_synapses([0], [(0, 0)], neurons[:1])
    c1 = CoreConfig.from_synapses([0], [(0, 0)], neurons[1:])
    net = Network(GridTopology(2, 1), [c0, c1])
    trace = run(net, InputTrace([(2, 0, 0, 0)]), 30)
    assert [(e.tick, e.core_x) for e in trace] == [(2 + delay, 1)]


def test_deterministic_replay_bytes(single_neuron_net):
    inputs = InputTrace([(t, 0, 0, 0) for t in range(0, 20, 3)])
    a = run(single_neuron_net, inputs, 25).to_csv()
    single_neuron_net.reset()
    b = run(single_neuron_net, inputs, 25).to_csv()
    assert a == b and a.count("\n") == 8


def test_validate_examples(single_neuron_net):
    assert validate(single_neuron_net) == []
    bad_delay = Network(GridTopology(1, 1), [minimal_core(Destination(1, 0, 0, delay=0))])
    diags = validate(bad_delay)
    assert len(diags) == 1 and "delay out of range" in diags[0] and "core (0,0)" in diags[0] and "neuron 0" in diags[0]
    bad_axon = Network(GridTopology(1, 1), [minimal_core(Destination(0, 0, axon=300, delay=1))])
    assert any("axon exceeds destination core A" in d for d in validate(bad_axon))
    small_target = Network(GridTopology(1, 1), [minimal_core(Destination(0, 0, axon=3, delay=1))])
    assert any("axon exceeds destination core A" in d for d in validate(small_target))
    with pytest.raises(ConfigError):
        run(bad_delay, None, 1)


def test_validate_parameter_ranges():
    p = NeuronParams(alpha=0, beta=-1, weights=(300, 0, 0, -257))
    net = Network(GridTopology(1, 1), [CoreConfig([5], [[True]], [p])])
    text = "\n".join(validate(net))
    for needle in ("alpha", "beta", "weight[0]", "weight[3]", "axon types"):
        assert needle in text


def test_stale_injection(single_neuron_net):
    run(single_neuron_net, None, 10)
    with pytest.raises(StaleInjection):
        single_neuron_net.load_inputs(InputTrace([(5, 0, 0, 0)]))
    with pytest.raises(StaleInjection):
        single_neuron_net.inject((0, 0), 0, 9)


def test_collision_counted_through_engine():
    # both neurons re-drive axon 0 two ticks later: fires at ticks 0 and 2,
    # one OR-merged collision per firing tick
    neurons = [NeuronParams(weights=(1, 0, 0, 0), dest=Destination(0, 0, 0, 2)) for _ in range(2)]
    core = CoreConfig.from_synapses([0], [(0, 0), (0, 1)], neurons)
    for backend in ("python", "compiled"):
        net = Network(GridTopology(1, 1), [core])
        run(net, InputTrace([(0, 0, 0, 0)]), 3, backend=backend)
        assert net.collisions[0] == 2
        assert list(net.fire_counts) == [2, 2]


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_overflow_halts_with_location(backend):
    p = NeuronParams(alpha=2**40, leak=2**30)
    net = Network(GridTopology(2, 1), [minimal_core(), CoreConfig([0], [[False]], [p])])
    with pytest.raises(PotentialOverflow) as info:
        run(net, None, 10, backend=backend)
    assert info.value.core == (1, 0) and info.value.neuron == 0 and info.value.tick == 1
    assert net.overflow[1] and net.halted


@st.composite
def random_network(draw):
    W, H = draw(st.integers(1, 3)), draw(st.integers(1, 3))
    grid = GridTopology(W, H)
    n_axons = [draw(st.integers(1, 6)) for _ in range(W * H)]
    cores = []
    for c in range(W * H):
        A, N = n_axons[c], draw(st.integers(1, 6))
        types = draw(st.lists(st.integers(0, 3), min_size=A, max_size=A))
        conn = np.array(draw(st.lists(st.lists(st.booleans(), min_size=N, max_size=N), min_size=A, max_size=A)))
        neurons = []
        for _ in range(N):
            dest = None
            if draw(st.integers(0, 5)):
                dx, dy = draw(st.integers(-3, 3)), draw(st.integers(-3, 3))
                x, y = grid.coords(c)
                tx, ty = x + dx, y + dy
                limit = n_axons[grid.index(tx, ty)] if (tx, ty) in grid else 256
                dest = Destination(dx, dy, draw(st.integers(0, limit - 1)), draw(st.integers(1, 15)))
            neurons.append(NeuronParams(
                alpha=draw(st.integers(1, 6)),
                beta=draw(st.integers(0, 6)),
                leak=draw(st.integers(-2, 2)),
                weights=tuple(draw(st.lists(st.integers(-8, 8), min_size=4, max_size=4))),
                pos_reset=draw(st.sampled_from(list(PosReset))),
                neg_comparison=draw(st.sampled_from(list(NegComparison))),
                neg_action=draw(st.sampled_from(list(NegAction))),
                dest=dest,
            ))
        cores.append(CoreConfig(types, conn, neurons))
    inputs = []
    for _ in range(draw(st.integers(0, 40))):
        c = draw(st.integers(0, W * H - 1))
        x, y = grid.coords(c)
        inputs.append((draw(st.integers(0, 30)), x, y, draw(st.integers(0, n_axons[c] - 1))))
    return grid, cores, InputTrace(inputs)


@settings(max_examples=60)
@given(random_network(), st.integers(1, 50))
def test_backends_agree_on_random_networks(case, ticks):
    grid, cores, inputs = case
    results = []
    for backend, workers in (("python", 1), ("python", 3), ("compiled", 1)):
        net = Network(grid, cores)
        trace = run(net, inputs, ticks, backend=backend, workers=workers)
        results.append((trace.to_csv(), net.potentials.tolist(), net.fire_counts.tolist(),
                        net.collisions.tolist(), net.ring.tolist()))
    assert results[0] == results[1] == results[2]


@settings(max_examples=30)
@given(random_network(), st.integers(2, 40), st.data())
def test_split_runs_equal_one_run(case, ticks, data):
    grid, cores, inputs = case
    split = data.draw(st.integers(1, ticks - 1))
    whole = run(Network(grid, cores), inputs, ticks)
    net = Network(grid, cores)
    net.load_inputs(inputs)
    first = net.run_ticks(split, backend="compiled")
    second = net.run_ticks(ticks - split, backend="python")
    assert OutputTrace.concat([first, second]) == whole
    assert net.output_buffer == whole


def test_event_total_order():
    # four cores, every neuron exits; outputs must come out (tick, y, x, neuron)
    neurons = [NeuronParams(weights=(1, 0, 0, 0), dest=Destination(0, 5, 0, 1)) for _ in range(2)]
    core = CoreConfig.from_synapses([0], [(0, 0), (0, 1)], neurons)
    grid = GridTopology(2, 2)
    inputs = InputTrace([(1, x, y, 0) for x in range(2) for y in range(2)] + [(0, 1, 1, 0)])
    trace = run(Network(grid, [core] * 4), inputs, 3)
    keys = [(e.tick, e.core_y, e.core_x, e.neuron) for e in trace]
    assert keys == sorted(keys) and len(keys) == 10

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tnemu.engine import OutputTrace
from tnemu.errors import DecodeError, DoesNotFitCore, ValueOutOfRange
from tnemu.verify import oracle_vmm
from tnemu.vmm import (
    REFERENCE_BETA,
    Variant,
    VmmProblem,
    decode_output,
    encode_vector,
    execute,
    map_vmm,
    resource_report,
    run_length,
    vmm_end_to_end,
)

BOTH = list(Variant)


def test_encode_vector_examples():
    assert len(encode_vector([0])) == 0
    assert sorted(encode_vector([2, -1])) == sorted(
        [(1, 0, 0, 0), (1, 0, 0, 1), (2, 0, 0, 0), (2, 0, 0, 1), (1, 0, 0, 6), (1, 0, 0, 7)]
    )
    assert sorted(encode_vector([-3])) == [(t, 0, 0, a) for t in (1, 2, 3) for a in (2, 3)]
    with pytest.raises(ValueOutOfRange):
        encode_vector([256])


@pytest.mark.parametrize(
    "m, n, variant, axons, neurons",
    [
        (8, 8, Variant.REFERENCE, 160, 256),
        (8, 8, Variant.SYMMETRIC, 32, 128),
        (2, 3, Variant.SYMMETRIC, 8, 12),
        (2, 3, Variant.REFERENCE, 20, 24),
    ],
)
def test_map_vmm_resource_counts(m, n, variant, axons, neurons):
    mapping = map_vmm(np.ones((m, n), dtype=int), variant)
    assert (mapping.core.num_axons, mapping.core.num_neurons) == (axons, neurons)


def test_does_not_fit():
    with pytest.raises(DoesNotFitCore, match="324 neurons"):
        map_vmm(np.ones((9, 9), dtype=int), Variant.REFERENCE)
    map_vmm(np.ones((9, 9), dtype=int), Variant.SYMMETRIC)
    with pytest.raises(DoesNotFitCore, match="axons"):
        map_vmm(np.ones((65, 1), dtype=int), Variant.SYMMETRIC)


def test_symmetric_neuron_params():
    mapping = map_vmm([[3, -2]], Variant.SYMMETRIC)
    for p in mapping.core.neurons:
        assert (p.alpha, p.beta, p.leak) == (1, 0, 0)
        assert p.neg_comparison.value == "inclusive" and p.pos_reset.value == "linear"
    # each product neuron sees exactly one input axon
    assert mapping.core.connectivity.sum(axis=0).tolist() == [1, 1, 1, 1]
    labels = [p.dest.axon for p in mapping.core.neurons]
    assert len(set(labels)) == len(labels)


def test_reference_wiring():
    mapping = map_vmm([[3]], Variant.REFERENCE)
    core = mapping.core
    P, N = mapping.value_neurons[(0, 0, 1)], mapping.value_neurons[(0, 0, -1)]
    for k in (P, N):
        p = core.neurons[k]
        assert p.beta == REFERENCE_BETA and p.neg_comparison.value == "strict"
        fb_neuron, fb_axon = mapping.feedback[k]
        assert core.neurons[fb_neuron].dest.axon == fb_axon
        assert core.neurons[fb_neuron].dest.delay == 1
        assert (core.neurons[fb_neuron].dest.dx, core.neurons[fb_neuron].dest.dy) == (0, 0)
        assert core.connectivity[fb_axon].tolist() == [i == k for i in range(4)]
        # feedback axon type is not one of the value neuron's input types
        in_types = {int(core.axon_types[a]) for a in np.flatnonzero(core.connectivity[:4, k])}
        assert int(core.axon_types[fb_axon]) not in in_types
        assert p.weights[core.axon_types[fb_axon]] == 1


def test_decode_examples():
    zero = execute(VmmProblem([0, 0], [[5, -5], [1, 1]]), Variant.SYMMETRIC)
    assert len(zero.trace) == 0 and zero.y.tolist() == [0, 0]
    one = execute(VmmProblem([1], [[3]]), Variant.SYMMETRIC)
    assert one.y.tolist() == [3]
    assert [e.tick for e in one.trace] == [1, 2, 3]
    neg = execute(VmmProblem([2], [[-3]]), Variant.SYMMETRIC)
    assert neg.y.tolist() == [-6]
    assert neg.value_fire_counts() == {(0, 0, 1): 0, (0, 0, -1): 6}


def test_decode_unknown_tap():
    mapping = map_vmm([[1]], Variant.SYMMETRIC)
    bogus = OutputTrace([(0, 0, 0, 0, "east", 0, 0, 99)])
    with pytest.raises(DecodeError):
        decode_output(mapping, bogus)


@pytest.mark.parametrize("variant", BOTH)
@pytest.mark.parametrize(
    "v, M, y",
    [
        ([1, 2], [[1, 2, 3], [4, 5, 6]], [9, 12, 15]),
        ([0, 0, 0], [[7, -7], [1, 2], [-255, 255]], [0, 0]),
        ([-1], [[1]], [-1]),
        ([-255, 255], [[255, -255], [-255, 255]], [-130050, 130050]),
    ],
)
def test_end_to_end_examples(variant, v, M, y):
    assert vmm_end_to_end(VmmProblem(v, M), variant).tolist() == y


def test_python_backend_matches():
    p = VmmProblem([3, -2], [[2, -1, 0], [-3, 4, 1]])
    for variant in BOTH:
        assert vmm_end_to_end(p, variant, backend="python").tolist() == oracle_vmm(p.v, p.M)


def test_resource_report_examples():
    r = resource_report(8, 8)
    assert (r.reference_axons, r.reference_neurons) == (160, 256)
    assert (r.symmetric_axons, r.symmetric_neurons) == (32, 128)
    assert r.neuron_reduction_pct == 50.0
    assert (r.feedback_neurons, r.feedback_axons) == (128, 128)
    assert r.reference_fits and r.symmetric_fits
    r = resource_report(1, 1)
    assert (r.symmetric_axons, r.symmetric_neurons, r.reference_axons, r.reference_neurons) == (4, 2, 6, 4)


@given(st.integers(1, 64), st.integers(1, 64))
def test_neuron_count_halving(m, n):
    r = resource_report(m, n)
    assert r.reference_neurons == 2 * r.symmetric_neurons
    assert r.neuron_reduction_pct == 50.0


def test_problem_independent_run_length():
    M = [[-4, 2]]
    assert run_length(M, Variant.SYMMETRIC) == 255 + 255 * 4 + 2
    assert run_length(M, Variant.REFERENCE) == 255 + 2 * 255 * 4 + 3
    assert run_length(M, Variant.SYMMETRIC, v=[3]) == 3 + 12 + 2


@st.composite
def problems(draw, max_dim=4, bound=15):
    m, n = draw(st.integers(1, max_dim)), draw(st.integers(1, max_dim))
    v = draw(st.lists(st.integers(-bound, bound), min_size=m, max_size=m))
    M = draw(st.lists(st.lists(st.integers(-bound, bound), min_size=n, max_size=n), min_size=m, max_size=m))
    return VmmProblem(v, M)


@settings(max_examples=80)
@given(problems())
def test_run_length_monotone(problem):
    has_negative = bool((problem.v[:, None] * problem.M < 0).any())
    t_ref = run_length(problem.M, Variant.REFERENCE, problem.v)
    t_sym = run_length(problem.M, Variant.SYMMETRIC, problem.v)
    if has_negative:
        assert t_ref > t_sym
    assert t_ref >= t_sym


@settings(max_examples=60)
@given(problems())
def test_per_element_decomposition_and_feedback_restoration(problem):
    sym = execute(problem, Variant.SYMMETRIC)
    prod = problem.v[:, None] * problem.M
    for (i, j, s), fires in sym.value_fire_counts().items():
        assert fires == max(s * int(prod[i, j]), 0)
    ref = execute(problem, Variant.REFERENCE)
    pots = ref.network.core_potentials((0, 0))
    assert (pots == 0).all()
    for (i, j, s), fires in ref.value_fire_counts().items():
        assert fires == max(s * int(prod[i, j]), 0)
    # feedback total equals the negative drive on each product neuron
    counts = ref.network.core_fire_counts((0, 0))
    for (i, j, s), k in ref.mapping.value_neurons.items():
        fb, _ = ref.mapping.feedback[k]
        assert counts[fb] == max(-s * int(prod[i, j]), 0)

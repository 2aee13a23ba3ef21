import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

from tnemu.core import CoreConfig, Destination, NeuronParams
from tnemu.engine import Network
from tnemu.router import GridTopology

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(name, passed, detail=""):
        ACCEPTANCE[name] = (passed, detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, detail) in sorted(ACCEPTANCE.items()):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def single_neuron_net():
    """1x1 grid; neuron 0 fires on axon 0 and exits east."""
    core = CoreConfig.from_synapses(
        [0], [(0, 0)], [NeuronParams(weights=(1, 0, 0, 0), dest=Destination(dx=1, dy=0, axon=0, delay=1))]
    )
    return Network(GridTopology(1, 1), [core])

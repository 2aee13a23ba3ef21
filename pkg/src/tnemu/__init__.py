"""Tick-accurate emulator for TrueNorth-style neurosynaptic cores, with a
signed vector-matrix multiplication mapper and an oracle-checked harness."""
from .core import (
    CoreConfig,
    Destination,
    NegAction,
    NegComparison,
    NeuronParams,
    NeuronState,
    PosReset,
    SchedulerBuffer,
    neuron_tick,
    synaptic_sum,
)
from .engine import InputTrace, Network, OutputEvent, OutputTrace, run, step, validate
from .router import Delivered, Edge, Exited, GridTopology, SpikePacket, inject_external, route_and_deliver
from .verify import asymmetry_demo, oracle_vmm, random_case, verify_batch
from .vmm import (
    Variant,
    VmmMapping,
    VmmProblem,
    decode_output,
    encode_vector,
    map_vmm,
    resource_report,
    vmm_end_to_end,
)

__version__ = "0.1.0"

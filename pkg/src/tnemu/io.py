"""Network config JSON, spike trace CSV, and VMM operand CSV formats."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import List, Union

import jsonschema
import numpy as np

from .core import CoreConfig, Destination, NeuronParams
from .engine import INPUT_HEADER, OUTPUT_DTYPE, OUTPUT_HEADER, InputTrace, Network, OutputTrace
from .errors import ConfigError, TraceFormatError
from .router import Edge, GridTopology

PathLike = Union[str, Path]

_INT = {"type": "integer"}
NETWORK_SCHEMA = {
    "type": "object",
    "required": ["grid", "cores"],
    "properties": {
        "grid": {
            "type": "object",
            "required": ["width", "height"],
            "properties": {"width": {"type": "integer", "minimum": 1}, "height": {"type": "integer", "minimum": 1}},
        },
        "cores": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "num_axons", "num_neurons", "axon_types", "crossbar", "neurons"],
                "properties": {
                    "x": _INT,
                    "y": _INT,
                    "num_axons": _INT,
                    "num_neurons": _INT,
                    "axon_types": {"type": "array", "items": _INT},
                    "crossbar": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["axon", "neuron"],
                            "properties": {"axon": _INT, "neuron": _INT},
                        },
                    },
                    "neurons": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["alpha", "beta", "leak", "weights"],
                            "properties": {
                                "alpha": _INT,
                                "beta": _INT,
                                "leak": _INT,
                                "weights": {"type": "array", "items": _INT, "minItems": 4, "maxItems": 4},
                                "pos_reset": {"enum": ["linear", "zero"]},
                                "neg_comparison": {"enum": ["strict", "inclusive"]},
                                "neg_action": {"enum": ["zero", "saturate"]},
                                "dest": {
                                    "oneOf": [
                                        {"type": "null"},
                                        {
                                            "type": "object",
                                            "required": ["dx", "dy", "axon", "delay"],
                                            "properties": {"dx": _INT, "dy": _INT, "axon": _INT, "delay": _INT},
                                        },
                                    ]
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}


def _neuron_to_dict(p: NeuronParams) -> dict:
    return {
        "alpha": p.alpha,
        "beta": p.beta,
        "leak": p.leak,
        "weights": list(p.weights),
        "pos_reset": p.pos_reset.value,
        "neg_comparison": p.neg_comparison.value,
        "neg_action": p.neg_action.value,
        "dest": None if p.dest is None else {
            "dx": p.dest.dx, "dy": p.dest.dy, "axon": p.dest.axon, "delay": p.dest.delay,
        },
    }


def network_to_dict(net: Network) -> dict:
    cores = []
    for c, core in enumerate(net.cores):
        x, y = net.grid.coords(c)
        cores.append({
            "x": x,
            "y": y,
            "num_axons": core.num_axons,
            "num_neurons": core.num_neurons,
            "axon_types": [int(t) for t in core.axon_types],
            "crossbar": [{"axon": a, "neuron": n} for a, n in core.synapses()],
            "neurons": [_neuron_to_dict(p) for p in core.neurons],
        })
    return {"grid": {"width": net.grid.width, "height": net.grid.height}, "cores": cores}


def network_from_dict(doc: dict) -> Network:
    try:
        jsonschema.validate(doc, NETWORK_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config schema error at {path}: {exc.message}") from None
    try:
        grid = GridTopology(doc["grid"]["width"], doc["grid"]["height"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cores = {}
    for k, cd in enumerate(doc["cores"]):
        where = f"cores[{k}] at ({cd['x']},{cd['y']})"
        if (cd["x"], cd["y"]) in cores:
            raise ConfigError(f"{where}: duplicate core")
        if len(cd["axon_types"]) != cd["num_axons"]:
            raise ConfigError(f"{where}: {len(cd['axon_types'])} axon types for num_axons={cd['num_axons']}")
        if len(cd["neurons"]) != cd["num_neurons"]:
            raise ConfigError(f"{where}: {len(cd['neurons'])} neurons for num_neurons={cd['num_neurons']}")
        neurons = []
        for nd in cd["neurons"]:
            dest = nd.get("dest")
            neurons.append(NeuronParams(
                alpha=nd["alpha"], beta=nd["beta"], leak=nd["leak"], weights=nd["weights"],
                pos_reset=nd.get("pos_reset", "linear"),
                neg_comparison=nd.get("neg_comparison", "strict"),
                neg_action=nd.get("neg_action", "zero"),
                dest=None if dest is None else Destination(dest["dx"], dest["dy"], dest["axon"], dest["delay"]),
            ))
        try:
            cores[(cd["x"], cd["y"])] = CoreConfig.from_synapses(
                cd["axon_types"], [(s["axon"], s["neuron"]) for s in cd["crossbar"]], neurons
            )
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return Network(grid, cores)


def load_network(path: PathLike) -> Network:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return network_from_dict(doc)


def dump_network(net: Network, path: PathLike):
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n")


def _rows(text: str, header: List[str], source: str):
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise TraceFormatError(f"{source}: line 1: empty file, expected header {','.join(header)}") from None
    if [h.strip() for h in first] != header:
        raise TraceFormatError(f"{source}: line 1: expected header {','.join(header)}, got {','.join(first)}")
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TraceFormatError(f"{source}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
        yield reader.line_num, [c.strip() for c in row]


def _ints(line: int, cells, source: str):
    try:
        return [int(c) for c in cells]
    except ValueError:
        raise TraceFormatError(f"{source}: line {line}: non-integer field in {','.join(cells)}") from None


def parse_input_trace(text: str, source: str = "<input>") -> InputTrace:
    events = []
    for line, cells in _rows(text, INPUT_HEADER, source):
        vals = _ints(line, cells, source)
        if vals[0] < 0:
            raise TraceFormatError(f"{source}: line {line}: negative tick {vals[0]}")
        events.append(vals)
    return InputTrace(events)


def parse_output_trace(text: str, source: str = "<output>") -> OutputTrace:
    events = []
    for line, cells in _rows(text, OUTPUT_HEADER, source):
        tick, x, y, axon, neuron = _ints(line, cells[:5], source)
        try:
            edge = Edge(cells[5])
        except ValueError:
            raise TraceFormatError(f"{source}: line {line}: unknown exit edge {cells[5]!r}") from None
        events.append((tick, x, y, neuron, edge, 0, 0, axon))
    if not events:
        return OutputTrace(np.zeros(0, dtype=OUTPUT_DTYPE))
    return OutputTrace(events)


def read_input_trace(path: PathLike) -> InputTrace:
    return parse_input_trace(Path(path).read_text(), str(path))


def read_output_trace(path: PathLike) -> OutputTrace:
    return parse_output_trace(Path(path).read_text(), str(path))


def write_trace(trace: Union[InputTrace, OutputTrace], path: PathLike):
    Path(path).write_text(trace.to_csv())


def parse_int_rows(text: str, source: str) -> List[List[int]]:
    rows = []
    for k, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rows.append([int(c) for c in raw.split(",")])
        except ValueError:
            raise TraceFormatError(f"{source}: line {k}: expected comma-separated integers") from None
    return rows


def read_matrix(path: PathLike) -> np.ndarray:
    rows = parse_int_rows(Path(path).read_text(), str(path))
    if not rows:
        raise TraceFormatError(f"{path}: empty matrix")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise TraceFormatError(f"{path}: ragged matrix (row lengths {sorted(widths)})")
    return np.array(rows, dtype=np.int64)


def read_vector(path: PathLike) -> np.ndarray:
    rows = parse_int_rows(Path(path).read_text(), str(path))
    if len(rows) != 1:
        raise TraceFormatError(f"{path}: expected a single CSV line, found {len(rows)}")
    return np.array(rows[0], dtype=np.int64)


def format_vector(y) -> str:
    return ",".join(str(int(v)) for v in y)

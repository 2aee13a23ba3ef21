"""Command-line entry point: ``tnemu <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as tio
from .engine import run, validate
from .errors import EmulatorError
from .verify import asymmetry_demo, verify_batch
from .vmm import DecodeTable, Variant, VmmProblem, decode_output, encode_vector, execute, resource_report


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1 (got {value})")
    return value


def _dims(text):
    try:
        m, n = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}") from None
    return m, n


def cmd_run(args):
    net = tio.load_network(args.config)
    diags = validate(net)
    if diags:
        for d in diags:
            print(f"invalid config: {d}", file=sys.stderr)
        return 1
    inputs = tio.read_input_trace(args.input) if args.input else None
    trace = run(net, inputs, args.ticks, backend=args.backend)
    if args.output:
        tio.write_trace(trace, args.output)
    else:
        sys.stdout.write(trace.to_csv())
    return 0


def cmd_vmm_run(args):
    problem = VmmProblem(tio.read_vector(args.vector), tio.read_matrix(args.matrix))
    variant = Variant(args.variant)
    result = execute(problem, variant, backend=args.backend)
    if args.dump_config:
        dump = Path(args.dump_config)
        stem = dump.with_suffix("")
        tio.dump_network(result.mapping.network(), dump)
        Path(f"{stem}.decode.json").write_text(json.dumps(result.mapping.decode_table(), indent=1) + "\n")
        tio.write_trace(encode_vector(problem.v), f"{stem}.input.csv")
    print(tio.format_vector(result.y))
    return 0


def cmd_decode(args):
    table = DecodeTable.from_dict(json.loads(Path(args.table).read_text()))
    trace = tio.read_output_trace(args.trace)
    print(tio.format_vector(decode_output(table, trace)))
    return 0


def cmd_vmm_verify(args):
    variants = list(Variant) if args.variant == "both" else [Variant(args.variant)]
    report = verify_batch(
        args.count, args.seed, (args.min_dims, args.max_dims), args.range, variants, jobs=args.jobs
    )
    if args.report:
        Path(args.report).write_text(report.to_json())
    if args.quiet:
        print(report.summary().splitlines()[-1])
    else:
        print(report.summary())
    return 0 if report.passed else 1


def cmd_demo_asymmetry(args):
    print(asymmetry_demo().table())
    return 0


def cmd_resources(args):
    r = resource_report(args.m, args.n)
    print(f"matrix {r.m}x{r.n}")
    print(f"  reference : {r.reference_axons} axons, {r.reference_neurons} neurons"
          f"{'' if r.reference_fits else '  (does not fit one core)'}")
    print(f"  symmetric : {r.symmetric_axons} axons, {r.symmetric_neurons} neurons"
          f"{'' if r.symmetric_fits else '  (does not fit one core)'}")
    print(f"  feedback  : {r.feedback_neurons} neurons, {r.feedback_axons} axons")
    print(f"  reduction : axons {r.axon_reduction_pct:.1f}%, neurons {r.neuron_reduction_pct:.1f}%")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="tnemu", description="Tick-accurate neurosynaptic core emulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    backends = ("compiled", "python")

    s = sub.add_parser("run", help="run a network config against an input spike trace")
    s.add_argument("--config", required=True)
    s.add_argument("--input")
    s.add_argument("--ticks", type=_positive_int, required=True)
    s.add_argument("--output")
    s.add_argument("--backend", choices=backends, default="compiled")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("vmm-run", help="multiply a vector by a matrix on one emulated core")
    s.add_argument("--matrix", required=True)
    s.add_argument("--vector", required=True)
    s.add_argument("--variant", choices=[v.value for v in Variant], default="symmetric")
    s.add_argument("--dump-config", metavar="PATH",
                   help="write the core config to PATH, plus <stem>.decode.json and <stem>.input.csv")
    s.add_argument("--backend", choices=backends, default="compiled")
    s.set_defaults(func=cmd_vmm_run)

    s = sub.add_parser("decode", help="decode an output trace with a VMM decode table")
    s.add_argument("--table", required=True)
    s.add_argument("--trace", required=True)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("vmm-verify", help="random VMM problems checked against the integer oracle")
    s.add_argument("--count", type=_positive_int, default=100)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--range", type=_positive_int, default=255, help="entry magnitude bound B (1..255)")
    s.add_argument("--variant", choices=["both"] + [v.value for v in Variant], default="both")
    s.add_argument("--min-dims", type=_dims, default=(2, 3))
    s.add_argument("--max-dims", type=_dims, default=(8, 8))
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--report", help="write the JSON report here")
    s.add_argument("-q", "--quiet", action="store_true", help="print only the totals line")
    s.set_defaults(func=cmd_vmm_verify)

    s = sub.add_parser("demo-asymmetry", help="strict vs inclusive negative threshold on one neuron")
    s.set_defaults(func=cmd_demo_asymmetry)

    s = sub.add_parser("resources", help="axon/neuron counts of both VMM variants")
    s.add_argument("m", type=_positive_int)
    s.add_argument("n", type=_positive_int)
    s.set_defaults(func=cmd_resources)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (EmulatorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

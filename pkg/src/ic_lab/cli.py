"""Command line interface: ``ic-lab <subcommand>``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 solver ambiguity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ic_lab import __version__
from ic_lab.boxes import bell_value, box_3322, i3322_functional, load_box, mix_with_white_noise, pr_box, validate_no_signaling
from ic_lab.bounds import (
    DEFAULT_TOL,
    limit_bound,
    protocol_bound,
    solve_symmetric_bound,
    symmetric_limit_bound,
    table1_row,
)
from ic_lab.channels import (
    channel_capacity,
    identity_channel,
    iterative_capacity,
    load_channel,
    symmetric_channel,
)
from ic_lab.errors import AmbiguityError, ConvergenceError, DomainError, ExtrapolationError, ShapeMismatchError, ValidationError
from ic_lab.protocols import load_protocol, protocol_3322, van_dam_protocol
from ic_lab.search import SearchConfig, anneal_many, worker_count

log = logging.getLogger("ic_lab")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_AMBIGUITY = 0, 1, 2, 3
TABLE1_DS = (3, 4, 5, 20)
QUANTUM_3322_E = 0.6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    """Six significant digits, trailing zeros kept, for byte-stable CSV."""
    if isinstance(value, int):
        return str(value)
    return format(float(value), "#.6g")


def _bias(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"channel bias must lie in (0, 1], got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _manifest(args, outputs, seeds=()):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return {
        "tool": "ic_lab",
        "version": __version__,
        "subcommand": args.command,
        "parameters": params,
        "seeds": list(seeds),
        "outputs": [str(p) for p in outputs],
    }


def _emit(args, text, seeds=()):
    """Print ``text`` or write it to --out together with a sidecar manifest."""
    if not getattr(args, "out", None):
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    manifest_path = out.with_name(out.name + ".manifest.json")
    manifest_path.write_text(json.dumps(_manifest(args, [out], seeds), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s (manifest %s)", out, manifest_path.name)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(args, payload):
    if getattr(args, "out", None):
        payload = {**payload, "manifest": Path(args.out).name + ".manifest.json"}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _report(pairs):
    return "".join(f"{key}: {fmt(value) if isinstance(value, float) else value}\n" for key, value in pairs)


def cmd_chsh(args):
    if args.limit:
        res = symmetric_limit_bound(2, 2, args.tol)
        mode = "limit e_c -> 0"
    else:
        res = solve_symmetric_bound(2, 2, args.ec, args.tol)
        mode = f"e_c = {fmt(args.ec)}"
    if args.json:
        _emit(args, _json_text(args, res.to_dict()))
    else:
        _emit(args, _report([("channel", mode), ("e_bound", res.e_bound), ("p_bound", res.p_bound)]))
    return EXIT_OK


def _table1_job(d):
    return table1_row(d)


def cmd_table1(args):
    workers = min(worker_count(), len(TABLE1_DS))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_table1_job, TABLE1_DS))
    else:
        rows = [_table1_job(d) for d in TABLE1_DS]
    _emit(args, _csv_text(["d", "e_c_opt", "e", "e_concat"], [(r["d"], r["e_c_opt"], r["e"], r["e_concat"]) for r in rows]))
    return EXIT_OK


def cmd_fig1(args):
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    rows = []
    for j in range(1, args.points + 1):
        p_c = 0.5 + 0.5 * j / args.points
        rows.append((p_c, solve_symmetric_bound(2, 2, 2.0 * p_c - 1.0, args.tol).p_bound))
    _emit(args, _csv_text(["p_c", "p_bound"], rows))
    return EXIT_OK


def cmd_i3322(args):
    proto = protocol_3322()
    if args.limit:
        res = limit_bound(proto, box_3322, 2, args.tol)
        mode = "limit e_c -> 0"
    else:
        res = protocol_bound(proto, box_3322, identity_channel(2), args.tol)
        mode = "capacity 1"
    value = bell_value(box_3322(res.e_bound), i3322_functional())
    if args.json:
        _emit(args, _json_text(args, {**res.to_dict(), "i3322_value": value, "quantum_reference_e": QUANTUM_3322_E}))
    else:
        _emit(args, _report([
            ("channel", mode),
            ("e_bound", res.e_bound),
            ("i3322_at_bound", value),
            ("quantum_reference_e", "3/5 (quoted, not computed)"),
        ]))
    return EXIT_OK


def _channel_from_args(args, d, default_ec=None):
    if getattr(args, "channel", None):
        return load_channel(args.channel)
    if args.ec is not None:
        return symmetric_channel(d, args.ec)
    if default_ec is not None:
        return symmetric_channel(d, default_ec)
    return identity_channel(d)


def cmd_bound(args):
    box = load_box(args.box)
    report = validate_no_signaling(box)
    if not report.ok:
        raise ValidationError(f"{args.box}: box is signaling: " + "; ".join(report.lines()))
    proto = load_protocol(args.protocol)
    ch = _channel_from_args(args, proto.message_alphabet)

    def family(e):
        return mix_with_white_noise(box, e)

    if args.limit:
        res = limit_bound(proto, family, proto.message_alphabet, args.tol)
    else:
        res = protocol_bound(proto, family, ch, args.tol)
    _emit(args, _json_text(args, res.to_dict()))
    return EXIT_OK


def cmd_search(args):
    box = load_box(args.box)
    ch = _channel_from_args(args, args.message_alphabet, default_ec=0.5)
    cfg = SearchConfig(
        initial_temperature=args.t0,
        cooling=args.cooling,
        steps_per_temperature=args.steps,
        max_evaluations=args.max_evals,
        seed=args.seed,
    )
    seeds = list(range(args.seed, args.seed + args.chains))
    best, _ = anneal_many(box, ch, args.n_data, cfg, seeds)
    _emit(args, _json_text(args, best.to_dict()), seeds=seeds)
    return EXIT_OK


def cmd_validate(args):
    box = load_box(args.box)
    report = validate_no_signaling(box, args.tol)
    if report.ok:
        sys.stdout.write(f"{args.box}: valid nonsignaling box ({box.nx}x{box.ny} settings, {box.na}x{box.nb} outcomes)\n")
        return EXIT_OK
    for line in report.lines():
        sys.stdout.write(f"{args.box}: {line}\n")
    return EXIT_VALIDATION


def cmd_capacity(args):
    if args.channel:
        ch = load_channel(args.channel)
    else:
        if args.ec is None:
            raise UsageError("give a channel file or --ec (with --d)")
        ch = symmetric_channel(args.d, args.ec)
    res = iterative_capacity(ch, args.tol)
    closed = channel_capacity(ch) if ch.symmetric_bias() is not None else None
    pairs = [("capacity_bits", res.capacity), ("iterations", res.iterations)]
    if closed is not None:
        pairs.append(("closed_form_bits", closed))
    pairs.append(("input_distribution", " ".join(fmt(v) for v in res.input_distribution)))
    _emit(args, _report(pairs))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="ic-lab", description="Information Causality bounds via noisy channels")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, tol=DEFAULT_TOL):
        p.add_argument("--tol", type=_positive_float, default=tol)
        p.add_argument("--out", help="write output here (plus a .manifest.json sidecar)")

    p = sub.add_parser("chsh", help="CHSH bound from the two-bit protocol")
    p.add_argument("--ec", type=_bias, default=1.0, help="binary symmetric channel bias (default 1)")
    p.add_argument("--limit", action="store_true", help="extrapolate e_c -> 0")
    p.add_argument("--json", action="store_true")
    common(p)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("table1", help="optimal channel bias vs concatenation, d = 3, 4, 5, 20")
    common(p, 1e-6)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig1", help="bound on p against p_c")
    p.add_argument("--points", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("i3322", help="bound on the white-noise weight of the 3322 box")
    p.add_argument("--limit", action="store_true", help="extrapolate e_c -> 0 instead of capacity 1")
    p.add_argument("--json", action="store_true")
    common(p)
    p.set_defaults(func=cmd_i3322)

    p = sub.add_parser("bound", help="bound for a box file mixed with white noise")
    p.add_argument("box")
    p.add_argument("protocol")
    p.add_argument("channel", nargs="?")
    p.add_argument("--ec", type=_bias)
    p.add_argument("--limit", action="store_true")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("search", help="simulated-annealing protocol search")
    p.add_argument("box")
    p.add_argument("channel", nargs="?")
    p.add_argument("--ec", type=_bias, help="symmetric reference channel bias (default 0.5)")
    p.add_argument("--message-alphabet", type=int, default=2)
    p.add_argument("--n-data", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1, help="independent chains with seeds seed, seed+1, ...")
    p.add_argument("--t0", type=_positive_float, default=1.0)
    p.add_argument("--cooling", type=float, default=0.995)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--max-evals", type=int, default=1_000_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("validate", help="check normalization and no-signaling of a box file")
    p.add_argument("box")
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("capacity", help="capacity of a channel file or symmetric channel")
    p.add_argument("channel", nargs="?")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--ec", type=float)
    common(p)
    p.set_defaults(func=cmd_capacity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        sys.stderr.write(f"ic-lab {args.command}: {exc}\n")
        return EXIT_USAGE
    except (ValidationError, ShapeMismatchError, FileNotFoundError) as exc:
        sys.stderr.write(f"ic-lab {args.command}: {exc}\n")
        return EXIT_VALIDATION
    except (AmbiguityError, ExtrapolationError, ConvergenceError) as exc:
        sys.stderr.write(f"ic-lab {args.command}: {exc}\n")
        return EXIT_AMBIGUITY


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 verdict UNKNOWN,
4 chain is not in the class the command needs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .chain import chain_to_dict, loads_chain
from .classify import APST, UNKNOWN, classify, waiting_times
from .dynamics import scan_fidelity
from .errors import ApstError, InadmissiblePlan, InvalidEntry, UnsupportedRecipe
from .numbers import parse_expression
from .spectral import build_frame, eigenvalues, frame_to_dict, spectrum_from_dict, spectrum_to_dict
from .synthesis import ModelParams, generate_model, plan_surgery, spectral_surgery

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNKNOWN = 3
EXIT_WRONG_CLASS = 4

MODELS = ("uniform", "krawtchouk", "para-krawtchouk", "five-site")


class UsageError(Exception):
    pass


def _positive_time(text: str) -> float:
    try:
        value = float(parse_expression(text).evalf(30))
    except (InvalidEntry, TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _indices(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated indices, got {text!r}") from exc


def _add_chain_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("chain source (one of --model or --spec)")
    g.add_argument("--model", choices=MODELS, help="closed-form model family")
    g.add_argument("--N", type=int, help="N (the chain has N+1 sites)")
    g.add_argument("--gamma", help="para-Krawtchouk parameter in (0,2), e.g. 3/2 or sqrt(3)")
    g.add_argument("--j1", default="1", help="five-site outer coupling (default 1)")
    g.add_argument("--j2", default="1", help="five-site inner coupling (default 1)")
    g.add_argument("--spec", metavar="PATH", help="chain-spec JSON file ('-' for stdin)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--digits", type=_positive_int, help="working digits (default $APSTLAB_DIGITS or 50)")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apstlab",
        description="Perfect / almost perfect state transfer analysis of XX spin chains.",
        epilog="Exit codes: 0 ok, 2 usage error, 3 verdict UNKNOWN, 4 wrong transfer class.",
    )
    parser.add_argument("--version", action="version", version=f"apstlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="generate a model chain")
    _add_chain_options(p)
    _add_common(p)
    p.add_argument("--emit-spec", action="store_true", help="print only the chain-spec document")

    p = sub.add_parser("classify", help="PST / APST / NEITHER / UNKNOWN verdict")
    _add_chain_options(p)
    _add_common(p)
    p.add_argument("--coeff-bound", type=_positive_int, help="integer-relation coefficient bound")
    p.add_argument("--count", type=_positive_int, default=5, help="waiting times to report for APST chains")

    p = sub.add_parser("evolve", help="end-to-end fidelity trace")
    _add_chain_options(p)
    _add_common(p)
    p.add_argument("--t-max", type=_positive_time, required=True, help="scan horizon, e.g. 8*pi")
    p.add_argument("--step", type=_positive_time, default=0.01, help="grid step (default 0.01)")

    p = sub.add_parser("waiting-times", help="APST waiting-time schedule")
    _add_chain_options(p)
    _add_common(p)
    p.add_argument("--count", type=_positive_int, default=6)
    p.add_argument("--coeff-bound", type=_positive_int)

    p = sub.add_parser("surgery", help="remove spectral levels and rebuild the chain")
    _add_chain_options(p)
    _add_common(p)
    p.add_argument("--spectrum", metavar="PATH", help="spectrum JSON instead of a chain")
    p.add_argument("--remove", type=_indices, required=True, help="comma-separated level indices")
    p.add_argument("--emit-spec", action="store_true")

    for name, text in (("spectrum", "certified eigenvalues"), ("frame", "eigenframe: spectrum, chi table, weights")):
        p = sub.add_parser(name, help=text)
        _add_chain_options(p)
        _add_common(p)
    return parser


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_chain(args):
    if args.spec and args.model:
        raise UsageError("give either --model or --spec, not both")
    if args.spec:
        return loads_chain(_read(args.spec)), None
    if not args.model:
        raise UsageError("a chain source is required: --model or --spec")
    variant = args.model.replace("-", "_")
    if variant == "para_krawtchouk" and args.gamma is None:
        raise UsageError("--model para-krawtchouk requires --gamma")
    if variant != "five_site" and args.N is None:
        raise UsageError(f"--model {args.model} requires --N")
    params = ModelParams(variant, 4 if variant == "five_site" and args.N is None else args.N, args.gamma, args.j1, args.j2)
    model = generate_model(params, args.digits)
    return model.chain, model.spectrum


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2)


def _report_digits(args) -> int:
    return min(args.digits or 20, 20)


def cmd_model(args) -> int:
    chain, spectrum = _load_chain(args)
    spec = chain_to_dict(chain)
    if args.emit_spec:
        _emit(args, _dump(spec))
        return EXIT_OK
    spectrum = spectrum or eigenvalues(chain, args.digits)
    _emit(args, _dump({"chain": spec, "spectrum": spectrum_to_dict(spectrum)}))
    return EXIT_OK


def _classification_doc(chain, tc, args, count: int) -> dict:
    digits = _report_digits(args)
    doc = tc.to_dict(digits)
    if tc.verdict == APST:
        doc["waiting_times"] = [e.to_dict(digits) for e in waiting_times(chain, count, tc, args.digits)]
    return doc


def cmd_classify(args) -> int:
    chain, _ = _load_chain(args)
    tc = classify(chain, args.coeff_bound, args.digits)
    _emit(args, _dump(_classification_doc(chain, tc, args, args.count)))
    return EXIT_UNKNOWN if tc.verdict == UNKNOWN else EXIT_OK


def cmd_evolve(args) -> int:
    chain, _ = _load_chain(args)
    frame = build_frame(chain, args.digits)
    result = scan_fidelity(frame, args.t_max, args.step)
    if args.format == "csv":
        _emit(args, result.trace.to_csv())
        summary = result.summary_json() + "\n"
        if args.out:
            Path(args.out + ".summary.json").write_text(summary)
        else:
            sys.stderr.write(summary)
    else:
        rows = [line.split(",") for line in result.trace.to_csv().splitlines()[1:]]
        trace = [dict(zip(("t", "re", "im", "abs2"), row)) for row in rows]
        _emit(args, _dump({"summary": result.summary(), "trace": trace}))
    return EXIT_OK


def cmd_waiting_times(args) -> int:
    chain, _ = _load_chain(args)
    tc = classify(chain, args.coeff_bound, args.digits)
    try:
        schedule = waiting_times(chain, args.count, tc, args.digits)
    except UnsupportedRecipe as exc:
        doc = {"error": str(exc), "verdict": tc.verdict, "classification": tc.to_dict(_report_digits(args))}
        _emit(args, _dump(doc))
        return EXIT_WRONG_CLASS
    digits = _report_digits(args)
    entries = sorted((e.to_dict(digits) | {"_t": e.t} for e in schedule), key=lambda d: d["_t"])
    for e in entries:
        del e["_t"]
    _emit(args, _dump({"verdict": tc.verdict, "waiting_times": entries}))
    return EXIT_OK


def cmd_surgery(args) -> int:
    if args.spectrum:
        try:
            spectrum = spectrum_from_dict(json.loads(_read(args.spectrum)))
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed spectrum JSON: {exc}") from exc
    else:
        chain, spectrum = _load_chain(args)
        spectrum = spectrum or eigenvalues(chain, args.digits)
    plan = plan_surgery(len(spectrum.values), args.remove)
    new_chain = spectral_surgery(spectrum, plan, args.digits)
    spec = chain_to_dict(new_chain, args.digits or spectrum.digits)
    if args.emit_spec:
        _emit(args, _dump(spec))
        return EXIT_OK
    tc = classify(new_chain)
    doc = {
        "plan": {
            "removed": sorted(plan.removed),
            "blocks": [{"kind": b.kind, "indices": list(b.indices)} for b in plan.decomposition],
        },
        "chain": spec,
        "classification": tc.to_dict(_report_digits(args)),
    }
    _emit(args, _dump(doc))
    return EXIT_UNKNOWN if tc.verdict == UNKNOWN else EXIT_OK


def cmd_spectrum(args) -> int:
    chain, _ = _load_chain(args)
    _emit(args, _dump(spectrum_to_dict(eigenvalues(chain, args.digits))))
    return EXIT_OK


def cmd_frame(args) -> int:
    chain, _ = _load_chain(args)
    _emit(args, _dump(frame_to_dict(build_frame(chain, args.digits))))
    return EXIT_OK


COMMANDS = {
    "model": cmd_model,
    "classify": cmd_classify,
    "evolve": cmd_evolve,
    "waiting-times": cmd_waiting_times,
    "surgery": cmd_surgery,
    "spectrum": cmd_spectrum,
    "frame": cmd_frame,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", "json") == "csv" and args.command != "evolve":
        parser.error("--format csv is only available for evolve")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InadmissiblePlan, ValueError, ApstError) as exc:
        sys.stderr.write(f"apstlab {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

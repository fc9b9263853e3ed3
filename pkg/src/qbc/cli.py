"""``qbc`` command line: decoupling checks, protocol runs, region sweeps.

Exit codes: 0 success, 2 invalid input, 3 infeasible dimensions, 64 unknown
subcommand.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from qbc.channels import channel_from_dict, classical_embedded, parse_channel_ref
from qbc.errors import InfeasibleDimensionError
from qbc.fqsw import SplitSpec, monte_carlo_decoupling
from qbc.haar import haar_moment_check, random_pure_state, resolve_threads, trial_rng
from qbc.protocol import config_from_dict, run_one_shot
from qbc.regions import classical_input, father_rates, marton_joint, marton_rates, optimize_marton, optimize_region
from qbc.report import RunManifest, dumps, fmt
from qbc.tensor import FactorLayout, PureState
from qbc.typicality import eps_schedule, gentle_measurement_check, property_sweep, typical_set

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64

COMMANDS = ("decouple-check", "one-shot-sim", "region", "marton", "typical-demo", "haar-test")


def _parse_dims(text: str) -> list[tuple[str, int]]:
    out = []
    for item in filter(None, text.split(",")):
        label, sep, dim = item.partition("=")
        if not sep:
            raise ValueError(f"bad --dims entry {item!r}; expected LABEL=DIM")
        out.append((label.strip(), int(dim)))
    if not out:
        raise ValueError("--dims is empty")
    return out


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with p.open() as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None


def _channel(ref) -> object:
    if isinstance(ref, dict):
        return channel_from_dict(ref)
    ref = str(ref)
    if not ref.startswith("builtin:") and not Path(ref).is_file():
        raise FileNotFoundError(f"no such channel file: {ref}")
    return parse_channel_ref(ref)


def _load_state(path: str) -> PureState:
    """State file: ``{"factors": [[label, dim], ...], "amplitudes": [[re, im], ...]}``."""
    spec = _read_json(path)
    try:
        layout = FactorLayout(tuple((str(l), int(d)) for l, d in spec["factors"]))
        amps = np.asarray(spec["amplitudes"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: state file needs 'factors' and 'amplitudes' ({exc})") from None
    if amps.ndim == 2 and amps.shape[1] == 2:
        amps = amps[:, 0] + 1j * amps[:, 1]
    return PureState(amps, layout)


# --- subcommands -------------------------------------------------------------


def cmd_decouple_check(args) -> tuple[dict, dict]:
    config = {
        "state": args.state,
        "dims": args.dims,
        "system": args.system,
        "reference": args.reference,
        "ahat": args.ahat,
        "trials": args.trials,
    }
    if args.state == "random":
        if not args.dims:
            raise ValueError("--state random needs --dims, e.g. A=16,R=2")
        layout = FactorLayout(tuple(_parse_dims(args.dims)))
        psi = random_pure_state(layout, trial_rng(args.seed, 0, 0))
    else:
        psi = _load_state(args.state)
    d_a = psi.layout.dim_of(args.system)
    if args.ahat < 1 or d_a % args.ahat:
        raise ValueError(f"--ahat {args.ahat} must divide dim({args.system}) = {d_a}")
    reference = tuple(args.reference.split(",")) if args.reference else psi.layout.complement(args.system)
    split = SplitSpec(args.system, d_a // args.ahat, args.ahat)
    report = monte_carlo_decoupling(psi, split, args.trials, args.seed, reference=reference, threads=args.threads)
    result = {"layout": [list(f) for f in psi.layout.factors], "reference": list(reference)}
    result.update(report.to_dict())
    return config, result


def cmd_one_shot_sim(args) -> tuple[dict, dict]:
    spec = _read_json(args.config)
    if args.seed is not None:
        spec["seed"] = args.seed
    if "channel" not in spec:
        raise ValueError(f"{args.config}: config needs a 'channel' entry")
    cfg = config_from_dict(spec, _channel(spec["channel"]))
    report = run_one_shot(cfg)
    return spec, report.to_dict()


def cmd_region(args) -> tuple[dict, list]:
    config = {
        "channel": args.channel,
        "mode": args.mode,
        "n": args.n,
        "sweep": args.sweep,
        "restarts": args.restarts,
        "a_dims": args.a_dims,
        "d_dim": args.d_dim,
        "maxfev": args.maxfev,
    }
    channel = _channel(args.channel)
    a_dims = tuple(int(x) for x in args.a_dims.split(","))
    if len(a_dims) != 2:
        raise ValueError("--a-dims takes two integers, e.g. 2,2")
    region = optimize_region(
        channel, args.mode, args.sweep, args.restarts, args.seed, a_dims, args.d_dim, args.maxfev, args.threads, args.n
    )
    rows = []
    for row in region.rows:
        ent = row.point.ent_rates or (float("nan"), float("nan"))
        rows.append([*row.w, *row.point.rates, *ent, row.objective, row.iterations])
    return config, rows


def cmd_marton(args) -> tuple[dict, dict]:
    spec = _read_json(args.config)
    try:
        p_y = np.asarray(spec["p_y_given_x"], dtype=float)
    except KeyError:
        raise ValueError(f"{args.config}: config needs 'p_y_given_x' indexed [x][y1][y2]") from None
    result: dict = {}
    if "p_u" in spec or "p_x_given_u" in spec:
        p_u = np.asarray(spec["p_u"], dtype=float)
        p_xu = np.asarray(spec["p_x_given_u"], dtype=float)
        triple = marton_rates(p_y, p_u, p_xu)
        joint = marton_joint(p_y, p_u, p_xu).sum(axis=(3, 4))
        quantum = father_rates(classical_input(joint), classical_embedded(p_y)).triple
        result["marton"] = triple.to_dict()
        result["father_classical"] = quantum.to_dict()
        result["half_marton_gap"] = max(abs(a - b / 2) for a, b in zip(quantum.as_tuple(), triple.as_tuple()))
    opt = spec.get("optimize")
    if opt is not None:
        seed = args.seed if args.seed is not None else int(opt.get("seed", 0))
        region = optimize_marton(p_y, int(opt.get("sweep", 16)), int(opt.get("candidates", 512)), int(opt.get("restarts", 2)), seed)
        result["boundary"] = {
            "hull": [list(p) for p in region.hull],
            "rows": [
                {"w": list(r.w), "rates": list(r.point.rates), "objective": r.objective, "iterations": r.iterations}
                for r in region.rows
            ],
        }
    if not result:
        raise ValueError(f"{args.config}: give 'p_u' and 'p_x_given_u', an 'optimize' block, or both")
    return spec, result


def cmd_typical_demo(args) -> tuple[dict, dict]:
    if not 0.0 < args.p < 1.0:
        raise ValueError("--p must lie strictly between 0 and 1")
    eps = eps_schedule(args.n) if args.eps is None else args.eps
    config = {"p": args.p, "n": args.n, "eps": eps}
    report = typical_set([args.p, 1.0 - args.p], args.n, eps)
    rho = np.diag([args.p, 1.0 - args.p])
    gentle = gentle_measurement_check(rho, args.n, eps)
    sweep = property_sweep(args.p, range(1, args.n + 1), args.eps)
    return config, {"typical_set": report.to_dict(), "gentle": gentle.to_dict(), "sweep": sweep.to_dict()}


def cmd_haar_test(args) -> tuple[dict, dict]:
    if args.dim < 1 or args.trials < 2:
        raise ValueError("--dim must be ≥ 1 and --trials ≥ 2")
    config = {"dim": args.dim, "trials": args.trials}
    return config, haar_moment_check(args.dim, args.trials, args.seed, args.threads)


# --- plumbing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbc", description="Broadcast father protocol toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")

    def common(p, seed_default=0):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = one per CPU (env QBC_THREADS)")

    p = sub.add_parser("decouple-check", help="Monte Carlo check of the decoupling bound")
    p.add_argument("--state", default="random", help="'random' or a state JSON file")
    p.add_argument("--dims", default="A=16,R=2", help="factor dims for --state random")
    p.add_argument("--system", default="A")
    p.add_argument("--reference", default=None, help="comma-separated reference labels (default: all others)")
    p.add_argument("--ahat", type=int, default=2)
    p.add_argument("--trials", type=int, default=500)
    common(p)

    p = sub.add_parser("one-shot-sim", help="run the one-shot two-receiver protocol")
    p.add_argument("--config", required=True)
    common(p, seed_default=None)

    p = sub.add_parser("region", help="sweep an achievable rate region (CSV)")
    p.add_argument("--channel", required=True, help="channel JSON or builtin:NAME[:k=v,...]")
    p.add_argument("--mode", choices=("assisted", "unassisted"), default="assisted")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--sweep", type=int, default=64)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--a-dims", default="2,2")
    p.add_argument("--d-dim", type=int, default=None)
    p.add_argument("--maxfev", type=int, default=400)
    common(p)

    p = sub.add_parser("marton", help="classical Marton rates and the quantum comparison")
    p.add_argument("--config", required=True)
    common(p, seed_default=None)

    p = sub.add_parser("typical-demo", help="typical set and gentle measurement at small n")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=None, help="defaults to n^(-1/4)")
    common(p, seed_default=None)

    p = sub.add_parser("haar-test", help="first two moments of |<0|U|0>|^2")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    common(p)
    return parser


HANDLERS = {
    "decouple-check": cmd_decouple_check,
    "one-shot-sim": cmd_one_shot_sim,
    "region": cmd_region,
    "marton": cmd_marton,
    "typical-demo": cmd_typical_demo,
    "haar-test": cmd_haar_test,
}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(manifest: RunManifest, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest {manifest.hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["w1", "w2", "Q1", "Q2", "E1", "E2", "objective", "iterations"])
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        sys.stderr.write(f"qbc: unknown subcommand {argv[0]!r}\n")
        sys.stderr.write(parser.format_usage())
        return EXIT_USAGE
    if not argv:
        sys.stderr.write(parser.format_usage())
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    if args.command is None:
        sys.stderr.write(parser.format_usage())
        return EXIT_USAGE

    start = time.perf_counter()
    try:
        args.threads = resolve_threads(args.threads)
        config, result = HANDLERS[args.command](args)
    except InfeasibleDimensionError as exc:
        sys.stderr.write(f"qbc {args.command}: infeasible dimensions: {exc}\n")
        return EXIT_INFEASIBLE
    except (ValueError, FileNotFoundError, KeyError, TypeError) as exc:
        sys.stderr.write(f"qbc {args.command}: {exc}\n")
        return EXIT_INVALID

    manifest = RunManifest(args.command, {"command": args.command, "config": config}, args.seed, [args.out] if args.out else [])
    manifest.wall_time_s = time.perf_counter() - start
    if args.command == "region":
        _emit(_csv_text(manifest, result), args.out)
    else:
        _emit(dumps({"manifest": manifest.to_dict(timing=False), "result": result}) + "\n", args.out)
    if args.out:
        Path(str(args.out) + ".manifest.json").write_text(dumps(manifest.to_dict()) + "\n")
        sys.stderr.write(f"wrote {args.out} (manifest {manifest.hash[:12]}, {manifest.wall_time_s:.2f} s)\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

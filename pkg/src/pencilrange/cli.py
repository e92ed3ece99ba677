"""Command line front end.

Subcommands synthesize signals, classify them against candidate frequency
classes, run Monte Carlo sweeps, and dump figure data (sigma_min maps, range
boundaries, disk geometry, error curves) as CSV plus JSON reports.  Every
command prints a one-line JSON summary to standard output and is
deterministic under a fixed seed.

Exit codes: 0 success, 2 usage or input-file problem, 3 numerical failure,
4 non-converged iteration on a single-shot command.  Sweeps never exit 4;
they record the convergence rate in their report instead.

Bundled fixtures are addressed as ``fixture:NAME`` wherever a signal or
class file path is accepted (see ``pencilrange.fixtures.available``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .classify import CrnrConfig, crnr_classify, disk_geometry_sweep, error_rate_sweep
from .errors import NumericError, SchemaError
from .numrange import (
    MembershipConfig,
    ensure_scaled,
    frobenius_disk,
    g_map,
    rect_range_boundary,
)
from ._svd import spectral_norm
from .pencil import (
    PencilPair,
    build_block_hankel,
    cadzow_denoise,
    default_pencil_split,
    estimate_order,
    hankel_singular_values,
    split_pencil,
)
from .signal import (
    CandidateClass,
    Mode,
    Signal,
    add_awgn,
    class_from_json,
    signal_from_json,
    signal_to_json,
    synth_mixture,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_NONCONVERGED = 4

_FIXTURE_PREFIX = "fixture:"


def _load_class(spec: str) -> CandidateClass:
    if spec.startswith(_FIXTURE_PREFIX):
        try:
            return fixtures.load_class(spec[len(_FIXTURE_PREFIX) :])
        except KeyError as exc:
            raise ValueError(str(exc.args[0])) from None
    return class_from_json(Path(spec).read_text())


def _load_signal(spec: str) -> Signal:
    if spec.startswith(_FIXTURE_PREFIX):
        try:
            return fixtures.load_signal(spec[len(_FIXTURE_PREFIX) :])
        except KeyError as exc:
            raise ValueError(str(exc.args[0])) from None
    return signal_from_json(Path(spec).read_text())


def _axis(text: str) -> np.ndarray:
    """Parse min:max:steps into a strictly increasing linspace."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected min:max:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid spec {text!r}: {exc}") from None
    if steps < 2 or not hi > lo:
        raise argparse.ArgumentTypeError(
            f"grid spec {text!r} needs max > min and steps >= 2"
        )
    return np.linspace(lo, hi, steps)


def _snr_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}: {exc}") from None


def _order_arg(text: str):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--order takes an integer or 'auto', got {text!r}"
        ) from None


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on|off, got {text!r}")
    return text == "on"


def _methods_arg(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    if not methods:
        raise argparse.ArgumentTypeError("need at least one method")
    return methods


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _summary(doc: dict):
    print(json.dumps(_json_safe(doc)))


def _write_csv(path: Path, header: list[str], rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(_json_safe(doc), indent=2) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _split_for(args, signal: Signal) -> tuple[int, int]:
    if (args.s is None) != (args.n is None):
        raise ValueError("give both --s and --n or neither")
    if args.s is None:
        return default_pencil_split(signal.T)
    return args.s, args.n


def _membership_config(args) -> MembershipConfig:
    return MembershipConfig(
        radial=args.radial,
        angular=args.angular,
        seeds=args.seeds,
        refine_tol=args.refine_tol,
        radius_override=args.radius_override,
    )


def _crnr_config(args, s: int, n: int) -> CrnrConfig:
    return CrnrConfig(
        s=s,
        n=n,
        order=args.order,
        D=args.D,
        cadzow=args.cadzow,
        cadzow_eps=args.cadzow_eps,
        cadzow_max_iter=args.cadzow_max_iter,
        normalize=args.normalize,
        membership=_membership_config(args),
    )


def _config_echo(args, cfg: CrnrConfig) -> dict:
    return {
        "s": cfg.s,
        "n": cfg.n,
        "order": "auto" if cfg.order is None else cfg.order,
        "D": cfg.D,
        "cadzow": "on" if cfg.cadzow else "off",
        "normalize": "on" if cfg.normalize else "off",
        "seed": args.seed,
    }


def _maybe_add_noise(signal: Signal, args) -> Signal:
    if args.snr_db is None:
        return signal
    return add_awgn(signal, args.snr_db, seed=args.seed)


def _prepared_pair(signal: Signal, args, s: int, n: int):
    """Build, optionally denoise, split and scale the pencil of a signal."""
    h = build_block_hankel(signal, s, n)
    converged = None
    if args.cadzow:
        order = args.order if args.order is not None else estimate_order(h)
        result = cadzow_denoise(h, order, eps=args.cadzow_eps, max_iter=args.cadzow_max_iter)
        h = result.hankel
        converged = result.converged
    pair = split_pencil(h)
    if getattr(args, "normalize", False):
        nb = spectral_norm(pair.b)
        if nb > 0.0:
            down = 1.0 / (args.D * nb)
            pair = PencilPair(
                pair.a * down, pair.b * down, pair.s, pair.n, pair.K, pair.scale * down
            )
    return ensure_scaled(pair, args.D), converged


def cmd_synth(args) -> int:
    cls = _load_class(args.class_file)
    modes = [Mode(z, np.ones(args.looks, dtype=np.complex128)) for z in cls.freqs]
    signal = synth_mixture(modes, args.samples, args.looks)
    if args.snr_db is not None:
        signal = add_awgn(signal, args.snr_db, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(signal_to_json(signal))
    _summary(
        {
            "command": "synth",
            "path": str(out),
            "T": signal.T,
            "K": signal.K,
            "modes": len(cls),
            "snr_db": args.snr_db,
            "seed": args.seed,
        }
    )
    return EXIT_OK


def cmd_classify(args) -> int:
    signal = _maybe_add_noise(_load_signal(args.signal), args)
    candidate = _load_class(args.class_file)
    s, n = _split_for(args, signal)
    cfg = _crnr_config(args, s, n)
    raw_sigma = hankel_singular_values(build_block_hankel(signal, s, n))
    decision = crnr_classify(signal, candidate, cfg)

    if args.out_dir is not None:
        out = _out_dir(args)
        _write_csv(
            out / "singular_values.csv",
            ["index", "sigma"],
            [(i + 1, sigma) for i, sigma in enumerate(raw_sigma)],
        )
        detail = {
            "class": decision.class_name,
            "is_member": decision.is_member,
            "order": decision.order,
            "rejected_at": decision.rejected_at,
            "cadzow_converged": decision.cadzow_converged,
            "config": _config_echo(args, cfg),
            "per_freq": [
                {
                    "theta": r.theta,
                    "delta": r.delta,
                    "lambda_star": r.lambda_star,
                    "verdict": r.verdict,
                    "stage": r.stage,
                }
                for r in decision.per_freq
            ],
        }
        _write_json(out / "decision.json", detail)

    _summary(
        {
            "command": "classify",
            "class": decision.class_name,
            "is_member": decision.is_member,
            "order": decision.order,
            "rejected_at": decision.rejected_at,
            "cadzow_converged": decision.cadzow_converged,
            "min_delta": min((r.delta for r in decision.per_freq), default=None),
        }
    )
    if decision.cadzow_converged is False:
        print("error: denoising did not converge within the iteration cap", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep_error(args) -> int:
    true_class = _load_class(args.class_file)
    candidate = _load_class(args.candidate_file)
    s, n = args.s, args.n
    if (s is None) != (n is None):
        raise ValueError("give both --s and --n or neither")
    if s is None:
        raise ValueError("sweeps synthesize their own signals; --s and --n are required")
    cfg = _crnr_config(args, s, n)
    report = error_rate_sweep(
        true_class,
        candidate,
        args.snr_db,
        args.trials,
        cfg,
        seed=args.seed,
        methods=args.methods,
        workers=args.workers,
    )
    out = _out_dir(args)
    rows = report.rows()
    header = list(rows[0].keys())
    _write_csv(out / "error_rates.csv", header, [[r[k] for k in header] for r in rows])
    _write_json(out / "report.json", report.to_dict() | {"config": _config_echo(args, cfg)})
    _summary(
        {
            "command": "sweep-error",
            "kind": report.kind,
            "trials": report.trials,
            "snr_grid": report.snr_grid,
            "order_mode": report.order_mode,
            "error_rate": report.error_rate,
            "csv": str(out / "error_rates.csv"),
            "json": str(out / "report.json"),
        }
    )
    return EXIT_OK


def cmd_sweep_disk(args) -> int:
    true_class = _load_class(args.class_file)
    if (args.s is None) != (args.n is None):
        raise ValueError("give both --s and --n or neither")
    if args.s is None:
        raise ValueError("sweeps synthesize their own signals; --s and --n are required")
    cfg = _crnr_config(args, args.s, args.n)
    report = disk_geometry_sweep(
        true_class,
        args.snr_db,
        args.trials,
        cfg,
        seed=args.seed,
        workers=args.workers,
    )
    out = _out_dir(args)
    rows = report.rows()
    header = list(rows[0].keys())
    _write_csv(out / "disk_geometry.csv", header, [[r[k] for k in header] for r in rows])
    _write_json(out / "report.json", report.to_dict() | {"config": _config_echo(args, cfg)})
    _summary(
        {
            "command": "sweep-disk",
            "kind": report.kind,
            "trials": report.trials,
            "snr_grid": report.snr_grid,
            "cadzow_convergence_rate": report.cadzow_convergence_rate,
            "csv": str(out / "disk_geometry.csv"),
            "json": str(out / "report.json"),
        }
    )
    return EXIT_OK


def cmd_gmap(args) -> int:
    signal = _maybe_add_noise(_load_signal(args.signal), args)
    s, n = _split_for(args, signal)
    pair, converged = _prepared_pair(signal, args, s, n)
    field = g_map(pair, args.grid_re, args.grid_im)
    out = _out_dir(args)
    rows = [
        (re, im, field.values[i, j])
        for i, re in enumerate(field.re_axis)
        for j, im in enumerate(field.im_axis)
    ]
    _write_csv(out / "gmap.csv", ["re", "im", "value"], rows)
    flat = int(np.argmin(field.values))
    i, j = np.unravel_index(flat, field.values.shape)
    _summary(
        {
            "command": "gmap",
            "csv": str(out / "gmap.csv"),
            "rows": len(rows),
            "min_value": float(field.values[i, j]),
            "argmin": [float(field.re_axis[i]), float(field.im_axis[j])],
        }
    )
    if converged is False:
        print("error: denoising did not converge within the iteration cap", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_boundary(args) -> int:
    signal = _maybe_add_noise(_load_signal(args.signal), args)
    s, n = _split_for(args, signal)
    pair, converged = _prepared_pair(signal, args, s, n)
    disk = frobenius_disk(pair)
    vertices = rect_range_boundary(pair)
    out = _out_dir(args)
    _write_csv(out / "boundary.csv", ["re", "im"], [(z.real, z.imag) for z in vertices])
    _summary(
        {
            "command": "boundary",
            "csv": str(out / "boundary.csv"),
            "vertices": len(vertices),
            "disk_center": disk.center,
            "disk_radius": disk.radius,
        }
    )
    if converged is False:
        print("error: denoising did not converge within the iteration cap", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _add_pencil_flags(
    p: argparse.ArgumentParser, cadzow_default: bool, normalize_default: bool = True
):
    p.add_argument("--s", type=int, default=None, help="pencil row blocks (default: from T)")
    p.add_argument("--n", type=int, default=None, help="pencil parameter (default: T//3)")
    p.add_argument(
        "--order",
        type=_order_arg,
        default=None,
        metavar="{int|auto}",
        help="model order for denoising; 'auto' estimates it (default: auto)",
    )
    p.add_argument(
        "--cadzow",
        type=_onoff,
        default=cadzow_default,
        metavar="{on|off}",
        help=f"structured denoising before the pencil split (default: "
        f"{'on' if cadzow_default else 'off'})",
    )
    p.add_argument("--cadzow-eps", type=float, default=None, help="denoising stop threshold")
    p.add_argument("--cadzow-max-iter", type=int, default=50, help="denoising iteration cap")
    p.add_argument(
        "--D", type=float, default=1.6, help="spectral norm given to B by the scaling stage"
    )
    p.add_argument(
        "--normalize",
        type=_onoff,
        default=normalize_default,
        metavar="{on|off}",
        help=f"rescale the pencil so ||B|| lands exactly on D, making decisions "
        f"amplitude-invariant (default: {'on' if normalize_default else 'off'})",
    )


def _add_membership_flags(p: argparse.ArgumentParser):
    p.add_argument("--radial", type=int, default=18, help="coarse grid rings")
    p.add_argument("--angular", type=int, default=36, help="coarse grid spokes")
    p.add_argument("--seeds", type=int, default=8, help="refinement seed count")
    p.add_argument("--refine-tol", type=float, default=1e-9, help="simplex tolerance")
    p.add_argument(
        "--radius-override", type=float, default=None, help="fixed search radius for lambda"
    )


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument("--snr-db", type=float, default=None, help="add noise at this SNR")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pencilrange",
        description="Damped-sinusoid classification via the numerical range of a matrix pencil",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a signal from a class file")
    p.add_argument("--class-file", required=True, help="class JSON or fixture:NAME")
    p.add_argument("--samples", type=int, required=True, help="sample count T")
    p.add_argument("--looks", type=int, default=1, help="look count K (default: 1)")
    _add_noise_flags(p)
    p.add_argument("--out", required=True, help="output signal JSON path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("classify", help="test a candidate class against a signal")
    p.add_argument("--signal", required=True, help="signal JSON or fixture:NAME")
    p.add_argument("--class-file", required=True, help="candidate class JSON or fixture:NAME")
    _add_noise_flags(p)
    _add_pencil_flags(p, cadzow_default=True)
    _add_membership_flags(p)
    p.add_argument("--out-dir", default=None, help="write decision.json and diagnostics here")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep-error", help="Monte Carlo error rates over an SNR grid")
    p.add_argument("--class-file", required=True, help="generating (true) class")
    p.add_argument("--candidate-file", required=True, help="candidate class under test")
    p.add_argument("--snr-db", type=_snr_list, required=True, help="comma list, e.g. -5,0,5")
    p.add_argument("--trials", type=int, required=True, help="trials per SNR point")
    p.add_argument(
        "--methods",
        type=_methods_arg,
        default=("crnr", "glrt"),
        help="comma list among crnr,glrt (default: both)",
    )
    p.add_argument("--workers", type=int, default=1, help="parallel processes (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="sweep seed (default: 0)")
    _add_pencil_flags(p, cadzow_default=True)
    _add_membership_flags(p)
    p.add_argument("--out-dir", required=True, help="write error_rates.csv and report.json here")
    p.set_defaults(func=cmd_sweep_error)

    p = sub.add_parser("sweep-disk", help="Monte Carlo disk geometry over an SNR grid")
    p.add_argument("--class-file", required=True, help="generating (true) class")
    p.add_argument("--snr-db", type=_snr_list, required=True, help="comma list, e.g. 0,10,20")
    p.add_argument("--trials", type=int, required=True, help="trials per SNR point")
    p.add_argument("--workers", type=int, default=1, help="parallel processes (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="sweep seed (default: 0)")
    _add_pencil_flags(p, cadzow_default=True)
    _add_membership_flags(p)
    p.add_argument("--out-dir", required=True, help="write disk_geometry.csv and report.json here")
    p.set_defaults(func=cmd_sweep_disk)

    p = sub.add_parser("gmap", help="sigma_min map of the pencil over a cartesian grid")
    p.add_argument("--signal", required=True, help="signal JSON or fixture:NAME")
    _add_noise_flags(p)
    _add_pencil_flags(p, cadzow_default=False, normalize_default=False)
    p.add_argument(
        "--grid-re", type=_axis, default=_axis("-1:1:41"), help="re axis min:max:steps"
    )
    p.add_argument(
        "--grid-im", type=_axis, default=_axis("-1:1:41"), help="im axis min:max:steps"
    )
    p.add_argument("--out-dir", required=True, help="write gmap.csv here")
    p.set_defaults(func=cmd_gmap)

    p = sub.add_parser("boundary", help="polygonal boundary of the pencil's numerical range")
    p.add_argument("--signal", required=True, help="signal JSON or fixture:NAME")
    _add_noise_flags(p)
    _add_pencil_flags(p, cadzow_default=False)
    p.add_argument("--out-dir", required=True, help="write boundary.csv here")
    p.set_defaults(func=cmd_boundary)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line driver.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from nsacodes.codes import Family, InfeasibleError, build_family, code_from_json, code_to_json, search_sc_basis
from nsacodes.sweep import (
    LOSS_HEADER,
    ConfigError,
    SweepConfig,
    cmd_sweep_fidelity,
    gnuplot_script,
    kink_at,
    loss_fits,
    sweep_loss_rows,
    to_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 as well; keep the message format
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with SweepConfig fields; flags override it")
    p.add_argument("--gamma-min", type=float)
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--families", help="comma-separated family names")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--gnuplot", help="also write a gnuplot script to this path")


def _config(args: argparse.Namespace) -> SweepConfig:
    base = SweepConfig()
    if args.config:
        base = SweepConfig.from_json(Path(args.config).read_text())
    families = None
    if args.families is not None:
        families = [f.strip() for f in args.families.split(",") if f.strip()]
    cfg = base.merged(
        gamma_min=args.gamma_min,
        gamma_max=args.gamma_max,
        points=args.points,
        families=families,
        n=args.n,
        k=args.k,
        q=args.q,
        gamma0=args.gamma0,
        seed=args.seed,
        window=tuple(args.window) if args.window else None,
        workers=args.workers,
        out=args.out,
    )
    return cfg.validate()


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _sweep_loss(args) -> int:
    cfg = _config(args)
    frozen = {}
    for item in args.frozen_code or []:
        path = Path(item)
        frozen[path.stem] = code_from_json(path.read_text())
    rows = sweep_loss_rows(cfg, frozen)
    _emit(to_csv(LOSS_HEADER, rows), cfg.out)
    for fit in loss_fits(rows, cfg.window):
        print(
            f"fit {fit.family}: exponent={fit.exponent:.4f} coefficient={fit.coefficient:.5g} "
            f"leading={fit.leading_coefficient:.5g}*gamma^{fit.leading_exponent} r2={fit.r_squared:.6f}",
            file=sys.stderr,
        )
    if cfg.gamma0 is not None:
        curves: dict[str, tuple[list, list]] = {}
        for g, label, l1, _ in rows:
            curves.setdefault(label, ([], []))
            curves[label][0].append(g)
            curves[label][1].append(l1)
        for label, (g, v) in curves.items():
            located, hits = kink_at(g, v, cfg.gamma0)
            print(f"kink {label}: at_gamma0={located} hits={[float(f'{h:.6g}') for h in hits]}", file=sys.stderr)
    if args.gnuplot:
        labels = list(dict.fromkeys(r[1] for r in rows))
        Path(args.gnuplot).write_text(gnuplot_script(cfg.out or "loss.csv", labels, 3, "L1"))
    return EXIT_OK


def _sweep_fidelity(args) -> int:
    cfg = _config(args)
    text = cmd_sweep_fidelity(cfg)
    _emit(text, cfg.out)
    if args.gnuplot:
        Path(args.gnuplot).write_text(gnuplot_script(cfg.out or "fidelity.csv", cfg.families, 6, "F"))
    return EXIT_OK


def _learn(args) -> int:
    from nsacodes.vql import extract_ansatz, learn_code

    if not 1 <= args.k <= args.n:
        raise UsageError(f"need 1 <= k <= n, got k={args.k}, n={args.n}")
    if not 0.0 < args.gamma0 < 1.0:
        raise UsageError("gamma0 must lie in (0, 1)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    best = None
    for seed in range(args.seed, args.seed + args.seeds):
        res = learn_code(args.n, args.k, args.gamma0, seed, args.max_steps, args.stage1_steps)
        report = extract_ansatz(res)
        (out / f"learn_seed{seed}.json").write_text(res.to_json())
        (out / f"code_seed{seed}.json").write_text(code_to_json(res.code))
        print(f"seed={seed} L1={res.final_loss:.6e} steps={res.steps} {report.line()}")
        if best is None or res.final_loss < best.final_loss:
            best = res
    if args.seeds > 1:
        print(f"best seed={best.seed} L1={best.final_loss:.6e}")
    return EXIT_OK


def _verify(args) -> int:
    from nsacodes.acceptance import format_report, run_all

    skip = set(args.skip or [])
    results = run_all(skip=skip, seeds=args.seeds)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _search_basis(args) -> int:
    try:
        basis = search_sc_basis(args.n, args.q, args.k, balanced=args.balanced)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(json.dumps({"n": basis.n, "q": basis.q, "k": basis.k, "classes": [str(c) for c in basis.classes]}))
    return EXIT_OK


def _export_code(args) -> int:
    try:
        fam = Family(args.family)
    except ValueError:
        raise UsageError(f"unknown family {args.family!r}") from None
    if not 0.0 <= args.gamma < 1.0:
        raise UsageError("gamma must lie in [0, 1)")
    code = build_family(fam, args.n, args.gamma, args.q)
    _emit(code_to_json(code), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsacodes", description="Noise-adapted amplitude-damping codes: sweeps, fits, learning")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep-loss", help="L1/L2 losses over a gamma grid")
    _add_sweep_flags(p)
    p.add_argument("--frozen-code", action="append", help="codeword JSON file swept as a fixed code")
    p.set_defaults(func=_sweep_loss)

    p = sub.add_parser("sweep-fidelity", help="plan, oracle and closed-form fidelities over a gamma grid")
    _add_sweep_flags(p)
    p.set_defaults(func=_sweep_fidelity)

    p = sub.add_parser("learn", help="variational code learning")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--gamma0", type=float, default=10**-1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--stage1-steps", type=int, default=5000)
    p.add_argument("--out", default="learn_out")
    p.set_defaults(func=_learn)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--skip", type=int, action="append", help="criterion number to skip (repeatable)")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=_verify)

    p = sub.add_parser("search-basis", help="self-complementary basis set search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--k", type=int)
    p.add_argument("--balanced", action="store_true")
    p.set_defaults(func=_search_basis)

    p = sub.add_parser("export-code", help="write a family's codewords as JSON")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=_export_code)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

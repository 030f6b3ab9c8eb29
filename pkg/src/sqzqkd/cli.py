"""Command-line front end.

    sqzqkd keyrate  --loss-db 10
    sqzqkd sweep    --squeezing-db 10 --loss-db-max 25 --out rates.csv
    sqzqkd optimize --loss-db-min 1 --loss-db-max 20
    sqzqkd estimate --seed 7 --scale simulate
    sqzqkd validate

Exit status is 0 when no row has status ``error`` and (for ``validate``)
every check passes; 1 otherwise; 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner
from .config import RunConfig, load_config

# flag -> RunConfig field; all default to None so the config file wins unless given
_FLAGS = {
    "--protocol": ("kind", str),
    "--squeezing-db": ("squeezing_db", float),
    "--v-sig": ("v_sig", float),
    "--xi": ("xi", float),
    "--eta-b": ("eta_b", float),
    "--nu-b": ("nu_b", float),
    "--beta": ("beta", float),
    "--block-size": ("block_size", float),
    "--pe-fraction": ("pe_fraction", float),
    "--eps": ("eps", float),
    "--d": ("d", int),
    "--eps-sm": ("eps_sm", float),
    "--eps-bar": ("eps_bar", float),
    "--eps-pe": ("eps_pe", float),
    "--eps-cor": ("eps_cor", float),
    "--loss-db-min": ("loss_db_min", float),
    "--loss-db-max": ("loss_db_max", float),
    "--loss-db-step": ("loss_db_step", float),
    "--loss-db": ("loss_db", float),
    "--channel-samples": ("samples", str),
    "--bins": ("bins", int),
    "--ensemble": ("ensemble", str),
    "--k-revealed": ("k_revealed", int),
    "--d-eta-b": ("d_eta_b", float),
    "--d-v-sqz": ("d_v_sqz", float),
    "--worst-case": ("worst_case", str),
    "--xi-propagation": ("xi_propagation", str),
    "--seed": ("seed", int),
    "--out": ("out", str),
    "--workers": ("workers", int),
}
_CHOICES = {"--protocol": ("squeezed", "coherent"),
            "--worst-case": ("one-sided", "two-sided"),
            "--xi-propagation": ("ratio", "printed")}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file; flags override its values")
    for flag, (dest, typ) in _FLAGS.items():
        p.add_argument(flag, dest=dest, type=typ, default=None, choices=_CHOICES.get(flag))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqzqkd", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("keyrate", "key rate at one loss value"),
                        ("sweep", "key rate over the loss grid"),
                        ("optimize", "optimal coherent modulation over the loss grid"),
                        ("estimate", "simulated parameter estimation and worst-case key rate"),
                        ("validate", "cross-check suite")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "estimate":
            p.add_argument("--scale", choices=("simulate", "analytic"), default="simulate",
                           help="draw k-revealed samples, or evaluate error bars at the "
                                "block's revealed size")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {dest: getattr(args, dest) for dest, _ in _FLAGS.values()
               if getattr(args, dest) is not None}
    if "samples" in changes:
        changes.setdefault("mode", "samples")
    if "ensemble" in changes:
        changes.setdefault("mode", "ensemble")
    return cfg.replace(**changes)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        out = Path(cfg.out)
        try:
            out.write_text(text)
        except OSError as exc:
            raise SystemExit(f"sqzqkd: cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    cmd = args.command
    if cmd == "validate":
        checks = runner.validate()
        for c in checks:
            print(c.line())
        ok = all(c.passed for c in checks)
        print("validate:", "all checks passed" if ok else "FAILED")
        return 0 if ok else 1
    if cmd in ("keyrate", "sweep"):
        rows = [runner.keyrate(cfg)] if cmd == "keyrate" else runner.sweep(cfg)
        _emit(cfg, runner.render_csv(cfg, [r.row() for r in rows], runner.SWEEP_COLUMNS))
        return 1 if any(r.status == "error" for r in rows) else 0
    if cmd == "optimize":
        cfg = cfg.replace(kind="coherent", v_sig=None)
        rows = runner.sweep(cfg)
        table = [dict(r.row(), no_key=r.status != "ok") for r in rows]
        _emit(cfg, runner.render_csv(cfg, table, runner.SWEEP_COLUMNS + ("no_key",)))
        return 1 if any(r.status == "error" for r in rows) else 0
    if cmd == "estimate":
        res = runner.estimate_run(cfg, scale=args.scale)
        _emit(cfg, runner.render_csv(cfg, res.rows(), ("quantity", "value")))
        return 0
    raise AssertionError(cmd)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ValueError, OSError) as exc:
        print(f"sqzqkd: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

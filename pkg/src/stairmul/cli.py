"""Command-line front end.

Subcommands: layout, encode, decode, simulate, bounds, sweep-two-parity,
sweep-rate, selftest, master, worker. Global flags (--seed, --field,
--lambda, --reps, --out, --config) may also come from a flat key=value
config file; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import delays as dl
from . import experiments as xp
from . import net
from . import ramp as rmp
from . import staircase as sc
from .delays import DelayModel
from .field import FieldMatrix, PrimeField, stack_row_blocks
from .runtime import (
    SCHEME_RAMP,
    SCHEME_STAIRCASE,
    master_setup,
    load_matrix,
    save_matrix,
    simulate_run,
)

_GLOBAL_DEFAULTS = {
    "seed": 0,
    "field": 2147483647,
    "lambda": 1.0,
    "reps": 1_000_000,
    "out": None,
}


def load_config(path: str | Path) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment, blank lines are ignored."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="ascii").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve_globals(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config) if args.config else {}
    merged = {}
    for key, default in _GLOBAL_DEFAULTS.items():
        attr = "lam" if key == "lambda" else key
        cli_val = getattr(args, attr, None)
        if cli_val is not None:
            merged[key] = cli_val
        elif key in cfg:
            raw = cfg[key]
            if key in ("seed", "reps", "field"):
                merged[key] = int(raw)
            elif key == "lambda":
                merged[key] = float(raw)
            else:
                merged[key] = raw
        else:
            merged[key] = default
    return merged


def _parse_addr(spec: str) -> tuple[str, int]:
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"bad address {spec!r}, want host:port")
    return host, int(port)


def _cell_label(cell: sc.Secret | sc.FreshKey | sc.Copy | sc.Zero) -> str:
    if isinstance(cell, sc.Secret):
        return f"A{cell.index + 1}"
    if isinstance(cell, sc.FreshKey):
        return f"R{cell.index + 1}"
    if isinstance(cell, sc.Copy):
        return f"copy(r{cell.row + 1},c{cell.col + 1})"
    return "0"


def cmd_layout(args: argparse.Namespace, g: dict) -> int:
    params = sc.sc_params(args.n, args.k)
    layout = sc.sc_layout(params)
    print(f"(n={params.n}, k={params.k}): alpha={params.alpha}")
    print("d:      " + "  ".join(f"{d}" for d in params.d_range()))
    print("beta:   " + "  ".join(f"{params.beta[d]}" for d in params.d_range()))
    print("width:  " + "  ".join(f"{params.width[d]}" for d in params.d_range()))
    print("frac:   " + "  ".join(str(params.frac[d]) for d in params.d_range()))
    grid = [[_cell_label(layout.cell(r, c)) for c in range(params.alpha)] for r in range(params.n)]
    widths = [max(len(grid[r][c]) for r in range(params.n)) for c in range(params.alpha)]
    for r in range(params.n):
        print("  ".join(grid[r][c].rjust(widths[c]) for c in range(params.alpha)))
    issues = sc.sc_verify(layout, params)
    for issue in issues:
        print("VIOLATION:", issue)
    return 1 if issues else 0


def cmd_encode(args: argparse.Namespace, g: dict) -> int:
    a = load_matrix(args.input)
    plan = master_setup(a, args.n, args.k, args.scheme, random.Random(g["seed"]))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for assignment in plan.assignments:
        share = assignment.share
        if isinstance(share, sc.StaircaseShare):
            data = sc.serialize_share(share.worker, share.point, list(share.subshares), plan.n, plan.k)
        else:
            data = sc.serialize_share(share.worker, share.point, [share.block], plan.n, plan.k)
        path = outdir / f"share_{assignment.worker:03d}.bin"
        path.write_bytes(data)
        print(f"wrote {path}")
    meta = outdir / "meta.txt"
    meta.write_text(
        f"scheme={plan.scheme}\nrows={plan.rows}\nn={plan.n}\nk={plan.k}\n", encoding="ascii"
    )
    print(f"wrote {meta}")
    return 0


def cmd_decode(args: argparse.Namespace, g: dict) -> int:
    shares = [sc.deserialize_share(Path(p).read_bytes()) for p in args.shares]
    n, k = shares[0][3], shares[0][4]
    if any((s[3], s[4]) != (n, k) for s in shares):
        print("error: share files disagree on (n, k)", file=sys.stderr)
        return 1
    if args.scheme == SCHEME_STAIRCASE:
        params = sc.sc_params(n, k)
        layout = sc.sc_layout(params)
        d = len(shares)
        if d not in params.beta:
            print(f"error: need between {k} and {n} share files, got {d}", file=sys.stderr)
            return 1
        need = params.beta[d]
        # Absent workers keep a point of 0; only responders' points are read.
        points = [0] * n
        responses = {}
        for worker, point, blocks, _, _ in shares:
            points[worker - 1] = point
            responses[worker] = blocks[:need]
        blocks = sc.sc_decode(responses, d, layout, points)
    else:
        pairs = [(point, blocks[0]) for _, point, blocks, _, _ in shares]
        blocks = rmp.ss_decode(pairs, k)
    result = stack_row_blocks(blocks, rows=args.rows)
    out = g["out"] or args.out_default
    save_matrix(out, result)
    print(f"decoded {result.rows}x{result.cols} matrix -> {out}")
    return 0


def cmd_simulate(args: argparse.Namespace, g: dict) -> int:
    field = PrimeField(g["field"])
    rng = random.Random(g["seed"])
    a = FieldMatrix.random(field, args.rows, args.cols, rng)
    x = FieldMatrix.random(field, args.cols, 1, rng)
    model = DelayModel(rate=g["lambda"])
    res = simulate_run(a, x, args.n, args.k, args.scheme, model, g["seed"])
    direct = a @ x
    ok = res.ax == direct
    print(f"scheme={args.scheme} n={args.n} k={args.k} decode_time={res.time:.6f} d={res.chosen_d}")
    print(f"worker delays: {' '.join(f'{t:.4f}' for t in res.sample.times)}")
    print(f"t_sc={res.sample.t_sc:.6f} t_ss={res.sample.t_ss:.6f}")
    print("product check:", "exact match" if ok else "MISMATCH")
    return 0 if ok else 1


def cmd_bounds(args: argparse.Namespace, g: dict) -> int:
    reps = 0 if args.no_mc else g["reps"]
    rep = dl.bounds_report(args.n, args.k, g["lambda"], reps=reps, seed=g["seed"])
    print(f"(n={rep.n}, k={rep.k}, lambda={rep.lam})")
    print(f"upper bound      {rep.upper:.12g}   (argmin d={rep.upper_d})")
    print(f"lower bound      {rep.lower:.12g}   (argmax d={rep.lower_d})")
    print(f"mean t_ss        {rep.mean_ss:.12g}")
    print(f"log envelope     {rep.approx_upper:.12g}")
    if rep.exact is not None:
        print(f"exact mean t_sc  {rep.exact:.12g}")
    if rep.mc is not None:
        print(f"mc mean t_sc     {rep.mc.sc_mean:.12g} +/- {rep.mc.sc_ci95:.3g} ({rep.mc.reps} reps)")
        print(f"mc mean t_ss     {rep.mc.ss_mean:.12g} +/- {rep.mc.ss_ci95:.3g}")
    return 0


def _write_rows(rows, g: dict, default_name: str) -> int:
    out = g["out"] or default_name
    xp.emit_csv(rows, out)
    print(f"wrote {len(rows)} rows -> {out}")
    return 0


def cmd_sweep_two_parity(args: argparse.Namespace, g: dict) -> int:
    k_list = [int(v) for v in args.k_list.split(",")]
    rows = xp.run_two_parity_sweep(k_list, g["lambda"], g["reps"], g["seed"])
    return _write_rows(rows, g, "two_parity_sweep.csv")


def cmd_sweep_rate(args: argparse.Namespace, g: dict) -> int:
    rate = Fraction(args.rate)
    n_list = [int(v) for v in args.n_list.split(",")]
    rows = xp.run_fixed_rate_sweep(rate, n_list, g["lambda"], g["reps"], g["seed"])
    return _write_rows(rows, g, "rate_sweep.csv")


def cmd_selftest(args: argparse.Namespace, g: dict) -> int:
    pairs = None
    if args.pairs is not None:
        pairs = []
        if args.pairs.strip():
            for item in args.pairs.split(","):
                n_s, k_s = item.split(":")
                pairs.append((int(n_s), int(k_s)))
    report = xp.selftest(pairs)
    for line in report.lines():
        print(line)
    print("selftest:", "PASS" if report.ok else "FAIL")
    return 0 if report.ok else 1


def cmd_master(args: argparse.Namespace, g: dict) -> int:
    a = load_matrix(args.input)
    x = load_matrix(args.x)
    if x.cols != 1:
        print("error: x must be a column vector file", file=sys.stderr)
        return 1
    plan = master_setup(a, args.n, args.k, args.scheme, random.Random(g["seed"]))
    addresses = [_parse_addr(spec) for spec in args.workers.split(",")]
    result = net.master_run(addresses, plan, x)
    out = g["out"]
    if out:
        save_matrix(out, result.ax)
        print(f"wrote result -> {out}")
    else:
        for row in result.ax.to_rows():
            print(row[0])
    print(
        f"decoded with d={result.chosen_d} in {result.elapsed:.3f}s "
        f"({a.rows}x{a.cols} times {x.rows}x1)",
        file=sys.stderr,
    )
    return 0


def cmd_worker(args: argparse.Namespace, g: dict) -> int:
    host, port = _parse_addr(args.listen)
    print(f"worker listening on {host}:{port}", file=sys.stderr)
    net.serve_worker(host, port, field_q=g["field"] if args.pin_field else 0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stairmul", description=__doc__)
    parser.add_argument("--version", action="version", version=f"stairmul {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--field", type=int, default=None, help="prime modulus (default 2147483647)")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="delay rate (default 1.0)")
    parser.add_argument("--reps", type=int, default=None, help="Monte Carlo replications (default 1e6)")
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument("--config", default=None, help="key=value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="print the staircase cell placement")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(fn=cmd_layout)

    p = sub.add_parser("encode", help="encode a matrix file into share files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--scheme", choices=[SCHEME_STAIRCASE, SCHEME_RAMP], default=SCHEME_STAIRCASE)
    p.add_argument("--input", required=True, help="matrix file: 'rows cols q' then entries")
    p.add_argument("--outdir", required=True)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="recover the matrix from share files")
    p.add_argument("--scheme", choices=[SCHEME_STAIRCASE, SCHEME_RAMP], default=SCHEME_STAIRCASE)
    p.add_argument("--rows", type=int, default=None, help="truncate to this many rows")
    p.add_argument("shares", nargs="+", help="share files from any d workers")
    p.set_defaults(fn=cmd_decode, out_default="decoded.txt")

    p = sub.add_parser("simulate", help="one virtual-clock run on random data")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--scheme", choices=[SCHEME_STAIRCASE, SCHEME_RAMP], default=SCHEME_STAIRCASE)
    p.add_argument("--rows", type=int, default=60)
    p.add_argument("--cols", type=int, default=4)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("bounds", help="analytic bounds and estimates for one system")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--no-mc", action="store_true", help="skip the Monte Carlo estimate")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("sweep-two-parity", help="sweep (k+2, k) systems to CSV")
    p.add_argument("--k-list", default="2,4,6,8,10,12,14,16,18,23,28")
    p.set_defaults(fn=cmd_sweep_two_parity)

    p = sub.add_parser("sweep-rate", help="sweep fixed-rate systems to CSV")
    p.add_argument("--rate", default="1/4")
    p.add_argument("--n-list", default="8,12,24,40,80")
    p.set_defaults(fn=cmd_sweep_rate)

    p = sub.add_parser("selftest", help="run the library's invariant suites")
    p.add_argument(
        "--pairs",
        default=None,
        help="comma list of n:k pairs (empty string for a vacuous run)",
    )
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("master", help="run a query against live workers")
    p.add_argument("--workers", required=True, help="comma list of host:port")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--scheme", choices=[SCHEME_STAIRCASE, SCHEME_RAMP], default=SCHEME_STAIRCASE)
    p.add_argument("--input", required=True, help="matrix file for A")
    p.add_argument("--x", required=True, help="matrix file for the column vector x")
    p.set_defaults(fn=cmd_master)

    p = sub.add_parser("worker", help="serve share products over TCP")
    p.add_argument("--listen", required=True, help="host:port to bind")
    p.add_argument(
        "--pin-field",
        action="store_true",
        help="reject SETUP whose modulus differs from --field",
    )
    p.set_defaults(fn=cmd_worker)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    g = _resolve_globals(args)
    try:
        return args.fn(args, g)
    except (ValueError, OSError, net.RemoteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

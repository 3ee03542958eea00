"""Command-line front end: solve, count, enumerate dumps, and simulations.

Matrix files are JSON objects {"rows": N, "cols": D, "entries": [[re, im],
...]} with N*D row-major entries, or (--format csv) N text lines of 2D
comma-separated floats with interleaved real/imag columns.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__, arrangement, sims, solver
from ._backend import get_backend

EXIT_BAD_INPUT = 2
EXIT_BUDGET = 3


def _default_threads():
    try:
        return max(1, int(os.environ.get("MPSKMAX_THREADS", "1")))
    except ValueError:
        return 1


def load_matrix(path, fmt="json"):
    """Read a complex matrix from a JSON or CSV matrix file."""
    if fmt == "json":
        with open(path) as fh:
            doc = json.load(fh)
        rows, cols = int(doc["rows"]), int(doc["cols"])
        entries = doc["entries"]
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        flat = np.array([complex(float(re), float(im)) for re, im in entries])
        return flat.reshape(rows, cols)
    if fmt == "csv":
        with open(path, newline="") as fh:
            data = [[float(x) for x in row] for row in csv.reader(fh) if row]
        arr = np.array(data)
        if arr.ndim != 2 or arr.shape[1] % 2:
            raise ValueError("csv matrix needs an even column count (re,im pairs)")
        return arr[:, 0::2] + 1j * arr[:, 1::2]
    raise ValueError(f"unknown matrix format {fmt!r}")


def save_matrix(V, path):
    """Write a complex matrix in the JSON matrix-file layout."""
    V = np.asarray(V, dtype=complex)
    doc = {
        "rows": V.shape[0],
        "cols": V.shape[1],
        "entries": [[float(z.real), float(z.imag)] for z in V.ravel()],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _parse_snr_grid(spec):
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("SNR grid must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        grid = []
        x = start
        while x <= stop + 1e-9:
            grid.append(round(x, 10))
            x += step
        return grid
    return [float(spec)]


def _cmd_solve(args):
    try:
        matrix = load_matrix(args.input, args.format)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: cannot read matrix file: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        result = solver.solve(matrix, args.m, rank=args.rank,
                              workers=args.threads, backend=args.backend)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print("exponents:", " ".join(str(int(e)) for e in result.sequence))
    print(f"value: {result.value:.12g}")
    print(f"candidates_examined: {result.candidates_examined}")
    print(f"degenerate_skips: {result.degenerate_skips}")
    print(f"effective_rank: {result.effective_rank}")
    print(f"backend: {get_backend(args.backend)[0]}")
    if args.dump_candidates:
        v_work, _, _, _ = solver.working_matrix(matrix, args.m, args.rank)
        cs = arrangement.enumerate_candidates(
            v_work, args.m, workers=args.threads, backend=args.backend)
        arrangement.write_candidate_dump(cs, args.dump_candidates)
        print(f"candidates_dumped: {len(cs)} -> {args.dump_candidates}")
    if args.oracle:
        try:
            ref = solver.exhaustive_oracle(matrix, args.m)
        except solver.BudgetExceededError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        agree = math.isclose(result.value, ref.value,
                             rel_tol=1e-9, abs_tol=1e-12)
        print(f"oracle_value: {ref.value:.12g}")
        print(f"agreement: {'true' if agree else 'false'}")
        if not agree:
            return 1
    return 0


def _cmd_count(args):
    try:
        print(arrangement.cardinality_formula(args.n, args.d, args.m))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return 0


def _cmd_sim(args):
    try:
        grid = _parse_snr_grid(args.snr_db)
        common = dict(n=args.n, d=args.d, m=args.m, snr_db_grid=grid,
                      channel_trials=args.trials,
                      symbols_per_channel=args.symbols, seed=args.seed)
        if args.application == "mlsd":
            cfg = sims.MlsdConfig(**common)
        else:
            cfg = sims.BeamformingConfig(**common)
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    os.makedirs(args.out, exist_ok=True)
    if args.application == "mlsd":
        tables = sims.simulate_mlsd(cfg, workers=args.threads,
                                    backend=args.backend)
    else:
        tables = (sims.simulate_beamforming(cfg, workers=args.threads,
                                            backend=args.backend),)
    for table in tables:
        path = os.path.join(args.out, f"{table.label}.csv")
        table.to_csv(path)
        print(f"{table.label}: {len(table.rows)} rows -> {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mpskmax",
        description="Exact MPSK maximization of fixed-rank quadratic forms")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one matrix instance")
    p_solve.add_argument("input", help="matrix file path")
    p_solve.add_argument("--m", type=int, required=True, help="alphabet order")
    p_solve.add_argument("--rank", type=int, default=None,
                         help="cap the working rank (principal components)")
    p_solve.add_argument("--oracle", action="store_true",
                         help="cross-check against exhaustive search")
    p_solve.add_argument("--dump-candidates", metavar="PATH", default=None,
                         help="write the candidate set as JSON lines")
    p_solve.add_argument("--format", choices=("json", "csv"), default="json")
    p_solve.add_argument("--threads", type=int, default=_default_threads())
    p_solve.add_argument("--backend", default=None,
                         choices=("auto", "compiled", "python"))
    p_solve.set_defaults(func=_cmd_solve)

    p_count = sub.add_parser("count", help="candidate-set cardinality")
    p_count.add_argument("n", type=int)
    p_count.add_argument("d", type=int)
    p_count.add_argument("m", type=int)
    p_count.set_defaults(func=_cmd_count)

    p_sim = sub.add_parser("sim", help="Monte-Carlo error-rate simulation")
    p_sim.add_argument("application", choices=("mlsd", "beam"))
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--d", type=int, required=True)
    p_sim.add_argument("--m", type=int, required=True)
    p_sim.add_argument("--snr-db", required=True,
                       help="grid as start:step:stop (inclusive) or one value")
    p_sim.add_argument("--trials", type=int, required=True)
    p_sim.add_argument("--symbols", type=int, default=1,
                       help="sequences/symbols per channel draw")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--threads", type=int, default=_default_threads())
    p_sim.add_argument("--backend", default=None,
                       choices=("auto", "compiled", "python"))
    p_sim.set_defaults(func=_cmd_sim)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

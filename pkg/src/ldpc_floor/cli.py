"""Command-line entry point: ``ldpc-floor <command> [options]``.

Every command writes CSV (comma separated, header row, 9 significant
digits) to stdout or to ``--out``. With ``--out`` a run manifest is written
next to the CSV as ``<out>.manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .de_engine import ChannelCondition, EnsembleSpec, de_trajectory, decoding_threshold
from .errors import AlistParseError, BoundNotApplicableError, ConvergenceError, DomainError, ValidationError
from .gauss_phi import phi, phi_bounds
from .growth_bounds import GrowthQuery, required_mean_for_growth, snr_llr_threshold_curve, snr_threshold_breakout
from .ldpc_codes import construct_margulis, degree_profile, generate_regular, load_alist, save_alist
from .spa_decoder import DecoderConfig, monte_carlo_run
from .trapping_set import (
    BUNDLED_TOPOLOGIES,
    TrappingSetTopology,
    build_state_space,
    bundled_topology,
    mean_to_std_ratio,
    spectral_radius,
)
from .ts_search import find_elementary_trapping_sets

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3

SCHEMAS = {
    "phi": ["x", "phi", "lower", "upper"],
    "de": ["iteration", "mean", "variance"],
    "threshold": ["ebn0_db", "bracket_lo_db", "bracket_hi_db", "converged"],
    "thresholds": ["kind", "r", "m_prev", "ebn0_db", "in_bound_regime", "status"],
    "ts": ["a", "b", "n_edges", "r", "method", "r_below_dv_minus_1"],
    "ts-search": ["a", "b", "r", "variables"],
    "simulate": ["iteration", "mean", "variance", "var_over_mean", "var_over_mean_sq", "beta_prime"],
    "code": ["n", "m", "d_v", "rho"],
}


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seeds: list = field(default_factory=list)
    version: str = __version__
    outputs: list = field(default_factory=list)

    def dumps(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    return str(v)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument helpers


def _ensemble(args) -> EnsembleSpec:
    if getattr(args, "rho", None):
        if getattr(args, "dv", None) is None:
            raise ValidationError("--rho needs --dv")
        pairs = []
        for item in args.rho.split(","):
            try:
                j, f = item.split(":")
                pairs.append((int(j), float(f)))
            except ValueError:
                raise ValidationError(f"bad --rho entry {item!r}; expected 'degree:fraction'") from None
        return EnsembleSpec(args.dv, tuple(pairs))
    return EnsembleSpec.parse(args.ensemble)


def _float_list(text: str) -> list[float]:
    """'a,b,c' or 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        try:
            start, stop, step = (float(t) for t in text.split(":"))
        except ValueError:
            raise ValidationError(f"expected start:stop:step, got {text!r}") from None
        if step <= 0 or stop < start:
            raise ValidationError(f"empty range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(count)]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _code(args):
    if args.margulis:
        return construct_margulis()
    if args.alist:
        return load_alist(args.alist)
    if args.n:
        ens = EnsembleSpec.parse(args.ensemble)
        return generate_regular(args.n, ens.d_v, ens.d_c, args.code_seed)
    raise ValidationError("choose a code with --margulis, --alist PATH or --n N")


def _topology(spec: str) -> TrappingSetTopology:
    if spec in BUNDLED_TOPOLOGIES:
        return bundled_topology(spec)
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"no topology file {spec!r} (bundled: {', '.join(BUNDLED_TOPOLOGIES)})")
    return TrappingSetTopology.load(path)


# ---------------------------------------------------------------------------
# commands; each returns (rows, seeds)


def cmd_phi(args):
    xs = _float_list(args.range) if args.range else [args.x]
    rows = []
    for x in xs:
        lo = hi = None
        if x > 0:
            lo, hi = phi_bounds(x)
        rows.append((x, phi(x), lo, hi))
    return rows, []


def cmd_de(args):
    ens = _ensemble(args)
    traj = de_trajectory(ens, ChannelCondition(args.ebn0_db, ens.rate), args.iters)
    return [(l + 1, m, v) for l, (m, v) in enumerate(zip(traj.means, traj.variances))], []


def cmd_threshold(args):
    res = decoding_threshold(_ensemble(args), tol_db=args.tol_db, max_iters=args.iters)
    return [(res.ebn0_db, res.bracket[0], res.bracket[1], res.converged)], []


def cmd_thresholds(args):
    ens = _ensemble(args)
    rows = [("breakout", None, None, snr_threshold_breakout(ens, args.breakout_delta), None, "ok")]
    grid = _float_list(args.m_grid)
    for r in _float_list(args.r):
        q = GrowthQuery(ens, r)
        for p in snr_llr_threshold_curve(q, grid, delta=args.delta):
            rows.append(("curve", r, p.m_prev, p.ebn0_db, p.in_bound_regime, p.status))
        if args.ebn0_db is not None:
            m = required_mean_for_growth(q, args.ebn0_db, delta=args.delta)
            rows.append(("required_mean", r, m, args.ebn0_db, None, "ok"))
    return rows, []


def cmd_ts(args):
    ts = _topology(args.ts)
    model = build_state_space(ts)
    r, method = spectral_radius(model.A, with_method=True)
    return [(ts.a, ts.b, ts.n_edges, r, method, r < ts.d_v - 1)], []


def cmd_ts_search(args):
    H = _code(args)
    roots = [int(t) for t in args.roots.split(",")]
    found = find_elementary_trapping_sets(H, args.a, args.b, roots=roots, max_cycle=args.max_cycle, b_cap=args.b_cap)
    rows = []
    for k, t in enumerate(found):
        topo = t.topology(H)
        r = spectral_radius(build_state_space(topo).A)
        rows.append((t.a, t.b, r, " ".join(map(str, t.variables))))
        if args.save_dir:
            Path(args.save_dir).mkdir(parents=True, exist_ok=True)
            topo.save(Path(args.save_dir) / f"ts_{t.a}_{t.b}_{k:04d}.json")
    return rows, []


def cmd_simulate(args):
    H = _code(args)
    rate = args.rate if args.rate is not None else degree_profile(H).rate
    cfg = DecoderConfig(args.iters, args.saturate, args.early_termination)
    res = monte_carlo_run(H, args.ebn0_db, rate, args.frames, cfg, args.seed)
    st = res.stats
    var = st.variance
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = mean_to_std_ratio(st.mean, np.nan_to_num(var, nan=0.0))
        rows = [
            (l + 1, st.mean[l], var[l], var[l] / st.mean[l], var[l] / st.mean[l] ** 2, beta[l])
            for l in range(st.iterations)
        ]
    if args.summary:
        print(f"frames={res.frames} frame_errors={res.frame_errors} bit_errors={res.bit_errors}", file=sys.stderr)
    return rows, [args.seed, args.code_seed] if args.n else [args.seed]


def cmd_code(args):
    H = _code(args)
    if args.alist_out:
        save_alist(H, args.alist_out)
    ens = degree_profile(H)
    rho = " ".join(f"{j}:{f:.9g}" for j, f in ens.rho)
    return [(H.n, H.m, ens.d_v, rho)], [args.code_seed] if args.n else []


# ---------------------------------------------------------------------------


def _add_ensemble(p):
    p.add_argument("--ensemble", default="3:6", help="regular ensemble as dv:dc (default 3:6)")
    p.add_argument("--rho", help="check-irregular edge distribution, e.g. '5:0.5,7:0.5' (needs --dv)")
    p.add_argument("--dv", type=int, help="variable degree used with --rho")


def _add_code(p):
    g = p.add_argument_group("code")
    g.add_argument("--margulis", action="store_true", help="use the (2640, 1320) Margulis code")
    g.add_argument("--alist", help="load the parity-check matrix from an alist file")
    g.add_argument("--n", type=int, help="generate a random regular code of this length (uses --ensemble)")
    g.add_argument("--ensemble", default="3:6", help="dv:dc for --n (default 3:6)")
    g.add_argument("--code-seed", type=int, default=1, help="seed for --n (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpc-floor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="write CSV here (plus <out>.manifest.json) instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("phi", cmd_phi, "phi(x) with its closed-form bounds")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", type=float)
    g.add_argument("--range", help="start:stop:step (inclusive) or comma list")

    p = add("de", cmd_de, "density-evolution mean trajectory")
    _add_ensemble(p)
    p.add_argument("--ebn0-db", type=float, required=True)
    p.add_argument("--iters", type=int, default=20)

    p = add("threshold", cmd_threshold, "DE decoding threshold by bisection")
    _add_ensemble(p)
    p.add_argument("--tol-db", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=2000, help="iteration budget per probe")

    p = add("thresholds", cmd_thresholds, "SNR-vs-mean growth threshold curves")
    _add_ensemble(p)
    p.add_argument("--r", default="1.696,1.761", help="growth rates (comma list)")
    p.add_argument("--m-grid", default="1:50:1", help="incoming means, start:stop:step or comma list")
    p.add_argument("--delta", type=float, help="fixed delta (default: resolved from DE per point)")
    p.add_argument("--breakout-delta", type=float, default=1.0)
    p.add_argument("--ebn0-db", type=float, help="also report the required mean at this Eb/N0")

    p = add("ts", cmd_ts, "spectral radius of a trapping-set topology")
    p.add_argument("--ts", required=True, help=f"topology JSON path or one of: {', '.join(BUNDLED_TOPOLOGIES)}")

    p = add("ts-search", cmd_ts_search, "search a code for elementary trapping sets")
    _add_code(p)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--roots", default="0", help="comma list of seed variables")
    p.add_argument("--max-cycle", type=int, default=6)
    p.add_argument("--b-cap", type=int)
    p.add_argument("--save-dir", help="write each topology found as JSON here")

    p = add("simulate", cmd_simulate, "Monte-Carlo SPA decoding with per-iteration LLR statistics")
    _add_code(p)
    p.add_argument("--ebn0-db", type=float, required=True)
    p.add_argument("--rate", type=float, help="code rate for the noise level (default: design rate)")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--saturate", type=float, metavar="L", help="clip messages at +-L")
    p.add_argument("--early-termination", action="store_true")
    p.add_argument("--summary", action="store_true", help="print error counts to stderr")

    p = add("code", cmd_code, "build a code and report its degree profile")
    _add_code(p)
    p.add_argument("--alist-out", help="save the matrix in alist format")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows, seeds = args.func(args)
    except (ValidationError, DomainError, AlistParseError, BoundNotApplicableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    text = render_csv(SCHEMAS[args.command], rows)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
        manifest = RunManifest(args.command, params, [s for s in seeds if s is not None], outputs=[str(out)])
        Path(str(out) + ".manifest.json").write_text(manifest.dumps())
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

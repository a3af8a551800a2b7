"""Command-line front end: every experiment writes one self-describing CSV."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import subprocess
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import rates
from .channel import ChannelParams, error_rate_closed_form, error_rate_monte_carlo
from .codes.algebraic import BCHCode, RSCode
from .codes.bounds import uncoded_bit_error, union_bound_bch, union_bound_rs
from .codes.registry import KNOWN_CODES, get_code
from .errors import (
    BudgetExceeded,
    DomainError,
    DomainWarning,
    NoBracket,
    NonConvergence,
    ProtocolError,
    SessionAborted,
)

EXIT_OK = 0
EXIT_PROTOCOL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("teqkd")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def describe_version() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--tags", "--dirty"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def parse_sweep(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list of dB values."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [round(start + k * step, 10) for k in range(max(count, 0))]
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep {text!r}; use START:STOP:STEP or a comma list") from None
    if not vals:
        raise ConfigError(f"sweep {text!r} is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"sweep {text!r} must be strictly increasing")
    return vals


def parse_int_list(text: str) -> list[int]:
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None
    if not vals:
        raise ConfigError("empty list")
    return vals


def point_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """One child seed per sweep index, independent of how points are scheduled."""
    return np.random.SeedSequence(seed).spawn(count)


def fan_out(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(args, columns: list[str], units: dict, rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# teqkd {args.command}\n")
    buf.write(f"# version: {describe_version()}\n")
    buf.write(f"# seed: {args.seed}\n")
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "workers", "verbose")}
    buf.write("# params: " + "; ".join(f"{k}={v}" for k, v in echo.items()) + "\n")
    buf.write("# units: " + "; ".join(f"{c}={units.get(c, '-')}" for c in columns) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _params(n_bins: int, snr_db: float, normalized: bool = False) -> ChannelParams:
    if normalized:
        return ChannelParams.from_normalized_snr_db(n_bins, snr_db)
    return ChannelParams.from_snr_db(n_bins, snr_db)


# ---------------------------------------------------------------- pe-curve


def _pe_job(job):
    n, snr, normalized, events, seed_seq = job
    p = _params(n, snr, normalized)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        closed = error_rate_closed_form(p)
    mc = se = float("nan")
    if events > 0:
        mc, se = error_rate_monte_carlo(p, events, np.random.default_rng(seed_seq))
    return [n, snr, p.snr_db, p.snr_bar_db, closed, mc, se]


def cmd_pe_curve(args) -> int:
    ns = parse_int_list(args.n_bins)
    snrs = parse_sweep(args.snr)
    if args.events and args.events < 100:
        raise ConfigError("--events must be 0 (closed form only) or >= 100")
    grid = [(n, s) for n in ns for s in snrs]
    seeds = point_seeds(args.seed, len(grid))
    jobs = [(n, s, args.normalized, args.events, seeds[k]) for k, (n, s) in enumerate(grid)]
    rows = fan_out(_pe_job, jobs, args.workers)
    cols = ["n_bins", "sweep_db", "snr_db", "snr_bar_db", "pe_closed_form", "pe_monte_carlo", "mc_std_err"]
    units = {"sweep_db": "dB", "snr_db": "dB", "snr_bar_db": "dB", "pe_closed_form": "probability",
             "pe_monte_carlo": "probability", "mc_std_err": "probability"}
    write_csv(args, cols, units, rows)
    return EXIT_OK


# ---------------------------------------------------------------- mi-curve


def _safe(fn, *a):
    try:
        return fn(*a)
    except DomainError:
        return float("nan")


def _mi_job(job):
    n, snr, mode, d = job
    p = ChannelParams.from_snr_db(n, snr)
    hard = rates.mutual_info_hard(p)
    if mode == "hard":
        return [n, snr, hard, _safe(rates.mutual_info_hard_highsnr, p),
                rates.mutual_info_hard_truncated(p, d), rates.mutual_info_hard_circular(p), math.log2(n)]
    soft = rates.mutual_info_soft(p)
    sig = p.sigma / n
    return [n, snr, hard, soft, rates.secrecy_capacity(sig),
            rates.secrecy_capacity_highsnr(p.gamma_bar), math.log2(n)]


def cmd_mi_curve(args) -> int:
    ns = parse_int_list(args.n_bins)
    snrs = parse_sweep(args.snr)
    jobs = [(n, s, args.mode, args.truncation_d) for n in ns for s in snrs]
    rows = fan_out(_mi_job, jobs, args.workers)
    if args.mode == "hard":
        cols = ["n_bins", "snr_db", "mi_hard", "approx_highsnr", f"approx_truncated_d{args.truncation_d}",
                "approx_circular", "log2_n"]
    else:
        cols = ["n_bins", "snr_db", "mi_hard", "mi_soft", "capacity", "capacity_highsnr", "log2_n"]
    units = {c: "bits" for c in cols}
    units.update(n_bins="-", snr_db="dB")
    write_csv(args, cols, units, rows)
    return EXIT_OK


# ---------------------------------------------------------------- limits


def _limit_job(job):
    n, rate, mode, tol = job
    return rates.shannon_limit_snr(n, rate, mode, tol_db=tol)


def cmd_limits(args) -> int:
    table = rates.LIMIT_ROWS
    if args.rows:
        table = []
        for item in args.rows.split(","):
            try:
                n, r = item.split("@")
                table.append((int(n), Fraction(r)))
            except ValueError:
                raise ConfigError(f"bad row {item!r}; use N@k/n") from None
    jobs = [(n, r, mode, args.tol_db) for n, r in table for mode in ("hard", "soft")]
    vals = fan_out(_limit_job, jobs, args.workers)
    rows = []
    for k, (n, r) in enumerate(table):
        h, s = vals[2 * k], vals[2 * k + 1]
        bits = float(r) * math.log2(n)
        rows.append(["limit", n, bits, str(r), h, rates.sigma_over_n(n, h), s, rates.sigma_over_n(n, s)])
    for b in (1, 2):
        g = rates.backoff_snr_db(b)
        rows.append([f"backoff_b{b}", "", "", "", "", "", g, ""])
    cols = ["kind", "n_bins", "bits_per_photon", "code_rate", "hard_snr_db", "hard_sigma_over_n",
            "soft_snr_db", "soft_sigma_over_n"]
    units = {"bits_per_photon": "bits", "hard_snr_db": "dB", "soft_snr_db": "dB",
             "hard_sigma_over_n": "-", "soft_sigma_over_n": "-"}
    write_csv(args, cols, units, rows)
    return EXIT_OK


# ---------------------------------------------------------------- simulate-code


def _sim_job(job):
    from .reconcile.protocol import bits_per_photon, key_rate
    from .simulate import simulate_algebraic, simulate_ldpc

    code_id, mode, n, snr, events, max_blocks, seed_seq = job
    code = get_code(code_id)
    p = ChannelParams.from_snr_db(n, snr)
    rng = np.random.default_rng(seed_seq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        if isinstance(code, (RSCode, BCHCode)):
            r = simulate_algebraic(p, code, rng, target_events=events, max_blocks=max_blocks, snr_db=snr)
            bound = union_bound_rs(p, code) if isinstance(code, RSCode) else union_bound_bch(p, code)
        else:
            r = simulate_ldpc(p, code, mode, rng, target_events=events, max_blocks=max_blocks, snr_db=snr)
            bound = float("nan")
        unc = uncoded_bit_error(p)
    rate = key_rate(code, bits_per_photon(n))
    return [snr, r.blocks, r.block_errors, r.bit_errors, r.bits, r.ber, r.ber_std_err,
            r.decode_failures, bound, unc, rate]


def cmd_simulate_code(args) -> int:
    snrs = parse_sweep(args.snr)
    try:
        get_code(args.code)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    if args.events < 1 or args.max_blocks < 1:
        raise ConfigError("--events and --max-blocks must be positive")
    seeds = point_seeds(args.seed, len(snrs))
    jobs = [(args.code, args.mode, args.n_bins, s, args.events, args.max_blocks, seeds[k])
            for k, s in enumerate(snrs)]
    rows = fan_out(_sim_job, jobs, args.workers)
    cols = ["snr_db", "blocks", "block_errors", "bit_errors", "bits", "ber", "ber_std_err",
            "decode_failures", "union_bound", "uncoded_ber", "key_rate"]
    units = {"snr_db": "dB", "ber": "probability", "ber_std_err": "probability",
             "union_bound": "probability", "uncoded_ber": "probability", "key_rate": "bits/photon"}
    write_csv(args, cols, units, rows)
    return EXIT_OK


# ---------------------------------------------------------------- bound


def cmd_bound(args) -> int:
    snrs = parse_sweep(args.snr)
    codes = [get_code(c) for c in args.codes.split(",")]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        for s in snrs:
            p = ChannelParams.from_snr_db(args.n_bins, s)
            row = [s, error_rate_closed_form(p), uncoded_bit_error(p)]
            for c in codes:
                if isinstance(c, RSCode):
                    row.append(union_bound_rs(p, c))
                elif isinstance(c, BCHCode):
                    row.append(union_bound_bch(p, c, errors_per_block=args.errors_per_block))
                else:
                    raise ConfigError(f"no union bound for {c.code_id}")
            rows.append(row)
    cols = ["snr_db", "uncoded_symbol", "uncoded_bit"] + [f"bound_{c.code_id}" for c in codes]
    units = {c: "probability" for c in cols}
    units["snr_db"] = "dB"
    write_csv(args, cols, units, rows)
    return EXIT_OK


# ---------------------------------------------------------------- reconcile


def cmd_reconcile_serve(args) -> int:
    from .reconcile.transport import BobServer

    server = BobServer(args.host, args.port, seed=args.seed, app_mode=args.app_mode, timeout=args.timeout)
    host, port = server.address
    print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


def cmd_reconcile_connect(args) -> int:
    from .reconcile.transport import run_alice

    if (args.sigma is None) == (args.snr_db is None):
        raise ConfigError("give exactly one of --sigma or --snr-db")
    p = ChannelParams(args.n_bins, args.sigma) if args.sigma is not None else ChannelParams.from_snr_db(
        args.n_bins, args.snr_db)
    try:
        get_code(args.code)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    nonce, report = None, None
    for attempt in range(args.resume_retries + 1):
        try:
            report = run_alice(args.host, args.port, p, args.code, args.seed, args.blocks,
                               nonce=nonce, timeout=args.timeout, report=report)
            break
        except SessionAborted as exc:
            if attempt == args.resume_retries:
                raise
            log.warning("%s; resuming", exc)
            nonce = exc.nonce
    rows = [[i, int(report.statuses[i])] for i in sorted(report.statuses)]
    write_csv(args, ["block_index", "status"], {"status": "0=ok,1=failed"}, rows)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="teqkd", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sweep_default=None):
        p.add_argument("--seed", type=int, default=0, help="root seed (u64)")
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        if sweep_default is not None:
            p.add_argument("--snr", default=sweep_default, help="dB sweep START:STOP:STEP or list")

    p = sub.add_parser("pe-curve", help="uncoded bin error rate, closed form and Monte Carlo")
    common(p, "10:40:1")
    p.add_argument("--n-bins", default="2,4,8,16")
    p.add_argument("--normalized", action="store_true", help="sweep is frame SNR N^2/sigma^2")
    p.add_argument("--events", type=int, default=200, help="error events per point (0: closed form only)")
    p.set_defaults(func=cmd_pe_curve)

    p = sub.add_parser("mi-curve", help="mutual information curves")
    common(p, "0:45:1")
    p.add_argument("--n-bins", default="4,8,16")
    p.add_argument("--mode", choices=("hard", "soft"), default="hard")
    p.add_argument("--truncation-d", type=int, default=2)
    p.set_defaults(func=cmd_mi_curve)

    p = sub.add_parser("limits", help="Shannon-limit SNRs for (N, rate) rows")
    common(p)
    p.add_argument("--rows", default="", help="N@k/n list, e.g. 8@2/3,16@3/4 (default: standard six)")
    p.add_argument("--tol-db", type=float, default=0.01)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("simulate-code", help="Monte Carlo of syndrome reconciliation")
    common(p, "20:32:2")
    p.add_argument("--code", default="rs63_43", help=f"one of {', '.join(KNOWN_CODES)} or ldpc<n>[@seed]")
    p.add_argument("--mode", choices=("exact", "simplified", "hard"), default="exact",
                   help="bit APP mode for LDPC codes")
    p.add_argument("--n-bins", type=int, default=8)
    p.add_argument("--events", type=int, default=200, help="block error events per point")
    p.add_argument("--max-blocks", type=int, default=10**6)
    p.set_defaults(func=cmd_simulate_code)

    p = sub.add_parser("bound", help="analytic union bounds of the algebraic codes")
    common(p, "10:60:1")
    p.add_argument("--codes", default="rs63_43,bch378_261")
    p.add_argument("--n-bins", type=int, default=8)
    p.add_argument("--errors-per-block", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("reconcile-serve", help="run Bob's reconciliation server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=5577)
    p.add_argument("--seed", type=int, default=0, help="channel seed shared out of band")
    p.add_argument("--app-mode", choices=("exact", "simplified", "hard"), default="exact")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_reconcile_serve)

    p = sub.add_parser("reconcile-connect", help="run Alice against a server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=5577)
    p.add_argument("--seed", type=int, default=0, help="channel seed shared out of band")
    p.add_argument("--out", default="-")
    p.add_argument("--n-bins", type=int, default=8)
    p.add_argument("--sigma", type=float)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--code", default="rs63_43")
    p.add_argument("--blocks", type=int, default=100)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--resume-retries", type=int, default=3)
    p.set_defaults(func=cmd_reconcile_connect)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, KeyError, ValueError) as exc:
        print(f"teqkd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, NoBracket, BudgetExceeded) as exc:
        print(f"teqkd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ProtocolError, ConnectionError, OSError) as exc:
        print(f"teqkd: protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    raise SystemExit(main())

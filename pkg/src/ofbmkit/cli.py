"""Command-line front end: synth, estimate, mc, sliding.

Every command is deterministic given its full flag set; outputs are written
atomically (temp file + rename).  Exit codes: 0 ok, 2 usage or file problems,
3 model validation, 4 data/estimation, 5 internal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
from contextlib import contextmanager

import numpy as np

from . import __version__
from .analysis import (
    ESTIMATORS,
    McConfig,
    bh_reject,
    qq_pairs,
    report_to_dict,
    run_mc,
    sliding_window_estimates,
    wilcoxon_ranksum,
)
from .errors import DataError, ModelValidationError, OfbmkitError, WindowTooSmall
from .estimation import ScalingRangeConfig, record_to_dict, scaling_range
from .model import load_params
from .synthesis import (
    RNG_ID,
    CirculantEmbedding,
    path_from_csv,
    path_sidecar,
    path_to_csv,
)
from .wavelet import filter_bank

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_DATA = 4
EXIT_INTERNAL = 5


def _taps_hash() -> str:
    f = filter_bank()
    return hashlib.sha256(f.lowpass.tobytes() + f.highpass.tobytes()).hexdigest()[:16]


def version_string() -> str:
    return f"ofbmkit {__version__} (filter db2 taps sha256/16={_taps_hash()}, rng {RNG_ID})"


@contextmanager
def _atomic_open(path, mode="w"):
    """Write to a sibling temp file then rename over the target."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-ofbmkit-")
    try:
        newline = "" if "b" not in mode else None
        with os.fdopen(fd, mode, newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_json(path, payload: dict) -> None:
    with _atomic_open(path) as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _range_config(args) -> ScalingRangeConfig:
    return ScalingRangeConfig(beta=args.beta, n0=args.n0)

def _resolve_range(args, n: int) -> tuple[int, int]:
    if (args.j1 is None) != (args.j2 is None):
        raise WindowTooSmall("pass --j1 and --j2 together or neither")
    if args.j1 is not None:
        if args.j2 <= args.j1:
            raise WindowTooSmall(f"need --j2 > --j1, got ({args.j1}, {args.j2})")
        return args.j1, args.j2
    return scaling_range(n, _range_config(args))


def _weights_mode(args) -> str:
    return args.weights.replace("-", "_")


def _read_series(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return path_from_csv(fh)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    params = load_params(args.params)
    emb = CirculantEmbedding(params, args.n)
    kind = "mfBm" if args.kind == "mfbm" else "mfGn"
    path = emb.sample(args.seed, kind=kind)
    out = args.out
    if args.format == "csv":
        with _atomic_open(out) as fh:
            path_to_csv(path, fh)
    else:
        with _atomic_open(out, "wb") as fh:
            fh.write(np.ascontiguousarray(path.data, dtype="<f8").tobytes())
        _write_json(out + ".json", path_sidecar(path))
    _write_json(out + ".embedding.json", emb.report.to_dict())
    return EXIT_OK


def cmd_estimate(args) -> int:
    from .estimation import analyze
    from .wavelet import dwt, spectra_to_csv, spectrum_set

    x = _read_series(args.input)
    j1, j2 = _resolve_range(args, x.shape[1])
    f = filter_bank(args.filter)
    pyr = dwt(x, j2, f)
    rec = analyze(pyr, j1, j2, f=f, balance=_weights_mode(args))
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "estimate.json"), record_to_dict(rec))
    with _atomic_open(os.path.join(args.out_dir, "spectra.csv")) as fh:
        spectra_to_csv(spectrum_set(pyr, j1, j2), fh)
    with _atomic_open(os.path.join(args.out_dir, "logeig.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "m", "log_diag", "log_eig", "log_eig_bc"])
        for row, j in enumerate(range(rec.j1, rec.j2 + 1)):
            for m in range(rec.h_m.size):
                writer.writerow(
                    [
                        j,
                        m + 1,
                        repr(float(rec.diag_logs[row, m])),
                        repr(float(rec.log_eig[row, m])),
                        repr(float(rec.log_eig_bc[row, m])),
                    ]
                )
    return EXIT_OK


def cmd_mc(args) -> int:
    params = load_params(args.params)
    cfg = McConfig(
        params=params,
        n=args.n,
        n_mc=args.n_mc,
        seed0=args.seed,
        range_cfg=_range_config(args),
        filter_name=args.filter,
        balance=_weights_mode(args),
        j1=args.j1,
        j2=args.j2,
    )
    rep = run_mc(cfg, threads=args.threads)
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "mc_report.json"), report_to_dict(rep))

    with _atomic_open(os.path.join(out, "estimates.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "estimator", "m", "value"])
        for code in ESTIMATORS:
            arr = rep.estimates[code]
            for r in range(arr.shape[0]):
                for m in range(arr.shape[1]):
                    writer.writerow([r + 1, code, m + 1, repr(float(arr[r, m]))])

    with _atomic_open(os.path.join(out, "qq.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "p", "chi2_quantile", "mahalanobis_quantile"])
        dof = rep.h_true.size
        for code in ESTIMATORS:
            samples = rep.mahalanobis[code]
            if np.any(np.isnan(samples)):
                continue
            probs, theo, emp = qq_pairs(samples, dof)
            for p, t, e in zip(probs, theo, emp):
                writer.writerow([code, repr(float(p)), repr(float(t)), repr(float(e))])

    with _atomic_open(os.path.join(out, "spectral_norms.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "log2_n", "estimator", "matrix", "spectral_norm"])
        for code in ESTIMATORS:
            for name, value in rep.spectral_norms[code].items():
                writer.writerow(
                    [rep.config_n, repr(float(np.log2(rep.config_n))), code, name, repr(float(value))]
                )

    with _atomic_open(os.path.join(out, "corr.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "m", "mp", "corr"])
        for code in ESTIMATORS:
            c = rep.corr[code]
            for a in range(c.shape[0]):
                for b in range(c.shape[1]):
                    writer.writerow([code, a + 1, b + 1, repr(float(c[a, b]))])
    return EXIT_OK


def _window_labels(labels: np.ndarray, window: int, hop: int):
    """Majority label of each window."""
    out = []
    start = 0
    n = labels.size
    while start + window <= n:
        values, counts = np.unique(labels[start : start + window], return_counts=True)
        out.append(values[np.argmax(counts)])
        start += hop
    return out


def cmd_sliding(args) -> int:
    with open(args.input, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    cols = {name.strip().lower(): i for i, name in enumerate(header)}
    label_idx = cols.get(args.label_column.lower()) if args.label_column else None
    skip = {i for i in (cols.get("t"), label_idx) if i is not None}
    data_idx = [i for i in range(len(header)) if i not in skip]
    x = np.asarray([[float(row[i]) for i in data_idx] for row in rows]).T
    labels = np.asarray([row[label_idx] for row in rows]) if label_idx is not None else None

    if args.hop > args.window:
        raise WindowTooSmall(f"hop {args.hop} exceeds window {args.window}")
    records = sliding_window_estimates(
        x,
        args.window,
        args.hop,
        args.j1,
        args.j2,
        f=filter_bank(args.filter),
        balance=_weights_mode(args),
    )
    os.makedirs(args.out_dir, exist_ok=True)
    with _atomic_open(os.path.join(args.out_dir, "windows.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_start", "estimator", "m", "value"])
        for rec in records:
            vectors = {"U": rec.h_u, "M": rec.h_m, "BC": rec.h_m_bc}
            for code in ESTIMATORS:
                for m, value in enumerate(vectors[code]):
                    writer.writerow([rec.t_start, code, m + 1, repr(float(value))])

    if labels is not None and records:
        wlabels = _window_labels(labels, args.window, args.hop)
        groups = sorted(set(wlabels))
        if len(groups) != 2:
            raise DataError(f"need exactly two window labels, got {groups}")
        ga, gb = groups
        payload = {"groups": [str(ga), str(gb)], "alpha": args.alpha, "tests": {}}
        with _atomic_open(os.path.join(args.out_dir, "pvalues.csv")) as fh:
            writer = csv.writer(fh)
            writer.writerow(["estimator", "rank", "m", "pvalue", "bh_threshold", "rejected"])
            for code in ESTIMATORS:
                per_window = np.stack(
                    [{"U": r.h_u, "M": r.h_m, "BC": r.h_m_bc}[code] for r in records]
                )
                mask = np.asarray([wl == ga for wl in wlabels])
                pvals = [
                    wilcoxon_ranksum(per_window[mask, m], per_window[~mask, m])
                    for m in range(per_window.shape[1])
                ]
                rep = bh_reject(pvals, args.alpha)
                payload["tests"][code] = rep.to_dict()
                for rank in range(rep.pvalues.size):
                    writer.writerow(
                        [
                            code,
                            rank + 1,
                            int(rep.original_indices[rank]) + 1,
                            repr(float(rep.pvalues[rank])),
                            repr(float(rep.bh_thresholds[rank])),
                            bool(rep.rejected[rank]),
                        ]
                    )
        _write_json(os.path.join(args.out_dir, "groups.json"), payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_range_flags(p: argparse.ArgumentParser):
    p.add_argument("--j1", type=int, default=None, help="first regression octave (overrides auto range)")
    p.add_argument("--j2", type=int, default=None, help="last regression octave")
    p.add_argument("--beta", type=float, default=0.9, help="scaling-range exponent")
    p.add_argument("--n0", type=int, default=2**13, help="reference sample size for the base range")


def _add_analysis_flags(p: argparse.ArgumentParser):
    p.add_argument("--filter", default="db2", help="wavelet filter name (haar, db2, db3, db4)")
    p.add_argument(
        "--weights",
        choices=["uniform", "by-count"],
        default="by-count",
        help="regression weight balance",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofbmkit",
        description="Synthesis and wavelet eigenvalue-regression estimation "
        "of multivariate selfsimilar processes",
    )
    parser.add_argument("--version", action="version", version=version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a sample path")
    p.add_argument("--params", required=True, help="model parameter JSON file")
    p.add_argument("--n", type=int, required=True, help="samples per component")
    p.add_argument("--seed", type=int, required=True, help="64-bit seed")
    p.add_argument("--kind", choices=["mfgn", "mfbm"], default="mfbm")
    p.add_argument("--format", choices=["csv", "bin"], default="csv")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="estimate selfsimilarity exponents of a series")
    p.add_argument("input", help="input series CSV (t, c1..cM)")
    p.add_argument("--out-dir", required=True)
    _add_range_flags(p)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mc", help="Monte Carlo estimator benchmark")
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-mc", type=int, required=True, dest="n_mc")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("OFBMKIT_THREADS", "1")),
        help="worker threads (OFBMKIT_THREADS as fallback); has no effect on output",
    )
    p.add_argument("--out-dir", required=True)
    _add_range_flags(p)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("sliding", help="sliding-window estimation over a long series")
    p.add_argument("input", help="input series CSV (t, c1..cM[, label])")
    p.add_argument("--window", type=int, required=True, help="window length in samples")
    p.add_argument("--hop", type=int, required=True, help="hop between window starts")
    p.add_argument("--j1", type=int, required=True)
    p.add_argument("--j2", type=int, required=True)
    p.add_argument("--label-column", default=None, help="CSV column holding group labels")
    p.add_argument("--alpha", type=float, default=0.05, help="false discovery rate")
    p.add_argument("--out-dir", required=True)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_sliding)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        print(f"model validation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except DataError as exc:
        print(f"estimation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OfbmkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())

"""Selfsimilarity exponent estimators built on wavelet spectra.

Three estimators share one weighted log2-regression across octaves j1..j2:

* univariate: regress log2 of the spectrum diagonals (valid without mixing);
* multivariate: regress log2 of the sorted spectrum eigenvalues;
* bias-corrected multivariate: eigenvalues are computed on fixed-size windows
  (the coarsest-scale count n_j2) at every octave and their logs averaged
  across windows before regression, so the finite-sample eigenvalue repulsion
  is equally strong at all scales and cancels from the slope.

Each estimate is H_m = (sum_j w_j y_m(j) - 1) / 2 with weights satisfying
sum w_j = 0 and sum j w_j = 1.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateRange,
    DimensionMismatch,
    NonPositiveDiagonal,
    NonPositiveEigenvalue,
    NotSymmetric,
    RankDeficient,
    SampleTooSmall,
    ScaleUnavailable,
)
from .wavelet import (
    WaveletPyramid,
    WaveletSpectrumSet,
    dwt,
    spectrum_set,
    windowed_spectra,
)

WEIGHT_MODES = ("uniform", "by_count")


@dataclass(frozen=True)
class RegressionWeights:
    """Slope weights over octaves j1..j2 with sum w = 0 and sum j*w = 1."""

    j1: int
    j2: int
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).copy()
        if w.size != self.j2 - self.j1 + 1:
            raise DimensionMismatch("weight vector does not span j1..j2")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def octaves(self) -> np.ndarray:
        return np.arange(self.j1, self.j2 + 1)


def regression_weights(
    j1: int, j2: int, balance: str = "by_count", counts=None
) -> RegressionWeights:
    """Weighted-least-squares slope weights w_j = b_j (V0 j - V1) / (V0 V2 - V1^2).

    ``balance`` picks b_j = 1 ("uniform") or b_j = n_j ("by_count", the
    default, which requires ``counts`` aligned with j1..j2).
    """
    if j2 <= j1:
        raise DegenerateRange(f"need j2 > j1, got ({j1}, {j2})")
    if balance not in WEIGHT_MODES:
        raise DimensionMismatch(f"balance must be one of {WEIGHT_MODES}")
    j = np.arange(j1, j2 + 1, dtype=float)
    if balance == "uniform":
        b = np.ones_like(j)
    else:
        if counts is None:
            raise DimensionMismatch("by_count weights require per-octave counts")
        b = np.asarray(counts, dtype=float)
        if b.size != j.size or np.any(b <= 0):
            raise DimensionMismatch("counts must be positive and span j1..j2")
    v0 = b.sum()
    v1 = (b * j).sum()
    v2 = (b * j * j).sum()
    w = b * (v0 * j - v1) / (v0 * v2 - v1 * v1)
    return RegressionWeights(j1=j1, j2=j2, w=w)


@dataclass(frozen=True)
class ScalingRangeConfig:
    """Sample-size-driven octave range: base range shifted by log2 a(n).

    ``beta`` must sit in (1/(2*varpi+1), 1) for the asymptotic guarantees;
    pass ``varpi_hint`` (from :func:`varpi` on the true exponents, simulation
    settings only) to get a warning when it does not.
    """

    j1_0: int = 6
    j2_0: int = 9
    beta: float = 0.9
    n0: int = 2**13
    varpi_hint: float | None = None

    def __post_init__(self):
        if self.j1_0 >= self.j2_0:
            raise DegenerateRange(f"need j1_0 < j2_0, got ({self.j1_0}, {self.j2_0})")
        if not (0.0 < self.beta < 1.0):
            raise DimensionMismatch(f"beta must be in (0, 1), got {self.beta}")
        if self.n0 < 2**self.j2_0:
            raise DimensionMismatch(f"n0 = {self.n0} cannot support octave {self.j2_0}")


def varpi(h) -> float:
    """Scaling-range exponent bound: min of the positive gaps of (0, H_1..H_M)
    and H_1/2 + 1/4."""
    hv = np.atleast_1d(np.asarray(h, dtype=float))
    padded = np.concatenate([[0.0], hv])
    gaps = np.diff(padded)
    positive = gaps[gaps > 0.0]
    out = hv[0] / 2.0 + 0.25
    if positive.size:
        out = min(out, float(positive.min()))
    return out


def scaling_range(n: int, cfg: ScalingRangeConfig) -> tuple[int, int]:
    """Octave range for sample size n: (j1_0, j2_0) shifted by floor(beta*log2(n/n0))."""
    if n < cfg.n0:
        raise SampleTooSmall(f"sample size {n} below the reference size {cfg.n0}")
    if cfg.varpi_hint is not None and cfg.beta <= 1.0 / (2.0 * cfg.varpi_hint + 1.0):
        warnings.warn(
            f"beta = {cfg.beta} is at or below 1/(2*varpi+1) = "
            f"{1.0 / (2.0 * cfg.varpi_hint + 1.0):.4f}; the shifted range loses "
            "its asymptotic guarantee",
            stacklevel=2,
        )
    shift = math.floor(cfg.beta * math.log2(n / cfg.n0))
    return cfg.j1_0 + shift, cfg.j2_0 + shift


def sorted_eigenvalues(s: np.ndarray) -> np.ndarray:
    """Ascending real eigenvalues of a symmetric matrix."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {s.shape}")
    scale = np.abs(s).max()
    if scale > 0 and np.abs(s - s.T).max() > 1e-8 * scale:
        raise NotSymmetric("matrix is asymmetric beyond tolerance")
    return np.linalg.eigvalsh(0.5 * (s + s.T))


def _check_range(spectra: WaveletSpectrumSet, w: RegressionWeights):
    for j in range(w.j1, w.j2 + 1):
        if j not in spectra.scales:
            raise ScaleUnavailable(f"octave {j} missing from the spectrum set")


def estimate_univariate(spectra: WaveletSpectrumSet, w: RegressionWeights) -> np.ndarray:
    """Component-wise estimate from the spectrum diagonals."""
    _check_range(spectra, w)
    diags = np.stack(
        [np.diag(spectra.at(j)) for j in range(w.j1, w.j2 + 1)]
    )  # (n_j, M)
    if np.any(diags <= 0.0):
        raise NonPositiveDiagonal("spectrum diagonal entries must be positive")
    return 0.5 * (w.w @ np.log2(diags) - 1.0)


def estimate_multivariate(spectra: WaveletSpectrumSet, w: RegressionWeights) -> np.ndarray:
    """Estimate from sorted eigenvalues of the full-sample spectra."""
    _check_range(spectra, w)
    m = spectra.m
    rows = []
    for j in range(w.j1, w.j2 + 1):
        if spectra.counts[spectra.scales.index(j)] < m:
            raise RankDeficient(
                f"octave {j} has fewer coefficients than components ({m})"
            )
        lam = sorted_eigenvalues(spectra.at(j))
        if lam[0] <= 0.0:
            raise NonPositiveEigenvalue(
                f"octave {j} spectrum has a non-positive eigenvalue {lam[0]:.3e}"
            )
        rows.append(np.log2(lam))
    return 0.5 * (w.w @ np.stack(rows) - 1.0)


def averaged_log_eigenvalues(windows: np.ndarray) -> np.ndarray:
    """Mean over windows of sorted log2 eigenvalues; windows is (T, M, M)."""
    lam = np.linalg.eigvalsh(windows)
    if np.any(lam <= 0.0):
        raise NonPositiveEigenvalue(
            "a windowed spectrum has a non-positive eigenvalue; "
            "increase the window size n_j2 relative to M"
        )
    return np.log2(lam).mean(axis=0)


def estimate_multivariate_bc(
    pyr: WaveletPyramid, j1: int, j2: int, w: RegressionWeights
) -> np.ndarray:
    """Repulsion-corrected estimate from window-averaged log eigenvalues."""
    if (w.j1, w.j2) != (j1, j2):
        raise DimensionMismatch("weights do not match the requested octave range")
    rows = [averaged_log_eigenvalues(windowed_spectra(pyr, j, j2)) for j in range(j1, j2 + 1)]
    return 0.5 * (w.w @ np.stack(rows) - 1.0)


@dataclass(frozen=True)
class EstimateRecord:
    """All three estimates plus the log-eigenvalue tables behind them."""

    h_u: np.ndarray
    h_m: np.ndarray
    h_m_bc: np.ndarray
    j1: int
    j2: int
    weights: RegressionWeights
    log_eig: np.ndarray  # (n_octaves, M) sorted log2 eigenvalues
    log_eig_bc: np.ndarray  # (n_octaves, M) window-averaged log2 eigenvalues
    diag_logs: np.ndarray  # (n_octaves, M) log2 spectrum diagonals
    t_start: int | None = field(default=None)


def analyze(
    x: np.ndarray | WaveletPyramid,
    j1: int,
    j2: int,
    f=None,
    balance: str = "by_count",
    t_start: int | None = None,
) -> EstimateRecord:
    """Run the full estimation pipeline on a series (or prebuilt pyramid)."""
    pyr = x if isinstance(x, WaveletPyramid) else dwt(np.asarray(x, dtype=float), j2, f)
    if pyr.j_max < j2:
        raise ScaleUnavailable(f"pyramid reaches octave {pyr.j_max}, need {j2}")
    counts = [pyr.counts[j - 1] for j in range(j1, j2 + 1)]
    w = regression_weights(j1, j2, balance=balance, counts=counts)
    spectra = spectrum_set(pyr, j1, j2)

    diags = np.stack([np.diag(spectra.at(j)) for j in range(j1, j2 + 1)])
    if np.any(diags <= 0.0):
        raise NonPositiveDiagonal("spectrum diagonal entries must be positive")
    log_diag = np.log2(diags)

    lam = np.stack([sorted_eigenvalues(spectra.at(j)) for j in range(j1, j2 + 1)])
    if np.any(lam <= 0.0):
        raise NonPositiveEigenvalue("a full-sample spectrum has a non-positive eigenvalue")
    log_eig = np.log2(lam)

    log_eig_bc = np.stack(
        [averaged_log_eigenvalues(windowed_spectra(pyr, j, j2)) for j in range(j1, j2 + 1)]
    )

    return EstimateRecord(
        h_u=0.5 * (w.w @ log_diag - 1.0),
        h_m=0.5 * (w.w @ log_eig - 1.0),
        h_m_bc=0.5 * (w.w @ log_eig_bc - 1.0),
        j1=j1,
        j2=j2,
        weights=w,
        log_eig=log_eig,
        log_eig_bc=log_eig_bc,
        diag_logs=log_diag,
        t_start=t_start,
    )


def record_to_dict(r: EstimateRecord) -> dict:
    out = {
        "H_U": r.h_u.tolist(),
        "H_M": r.h_m.tolist(),
        "H_M_bc": r.h_m_bc.tolist(),
        "j1": r.j1,
        "j2": r.j2,
        "weights": r.weights.w.tolist(),
        "log_eig": r.log_eig.tolist(),
        "log_eig_bc": r.log_eig_bc.tolist(),
        "diag_logs": r.diag_logs.tolist(),
    }
    if r.t_start is not None:
        out["t_start"] = r.t_start
    return out


def record_to_json(r: EstimateRecord) -> str:
    return json.dumps(record_to_dict(r), indent=2)

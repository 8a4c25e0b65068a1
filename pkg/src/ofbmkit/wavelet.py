"""Discrete wavelet pyramid and per-scale wavelet spectra.

The transform is the standard orthonormal pyramid (convolve, keep valid
samples, downsample by two) applied independently to each component.  Only
coefficients that depend exclusively on observed data are kept, so the count
at octave j follows n_j = floor((n_{j-1} - L + 1) / 2) rather than exactly
N * 2^-j.  With samples used as the level-0 approximation, detail variances of
an H-selfsimilar signal grow as 2^(j(2H+1)) across octaves, which is the
normalization the estimators build on.

The wavelet spectrum at octave j is the M x M average of coefficient outer
products; windowed spectra split the coefficients at octave j <= j2 into
2^(j2-j) non-overlapping windows of the coarsest-scale count n_j2 each, which
equalizes the sample size entering eigenvalue estimation across scales.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadFilter,
    DimensionMismatch,
    InsufficientCoefficients,
    ScaleUnavailable,
    SeriesTooShort,
    WindowTooSmall,
)

_SQRT3 = math.sqrt(3.0)
_NORM4 = 4.0 * math.sqrt(2.0)

# Orthonormal scaling filters (unit L2 norm). db2 is the 4-tap member with two
# vanishing moments, identical to the least-asymmetric member of that order.
_SCALING_TAPS = {
    "haar": (1, [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)]),
    "db2": (
        2,
        [
            (1.0 + _SQRT3) / _NORM4,
            (3.0 + _SQRT3) / _NORM4,
            (3.0 - _SQRT3) / _NORM4,
            (1.0 - _SQRT3) / _NORM4,
        ],
    ),
    "db3": (
        3,
        [
            0.332670552950083,
            0.806891509311092,
            0.459877502118491,
            -0.135011020010255,
            -0.0854412738820267,
            0.0352262918857095,
        ],
    ),
    "db4": (
        4,
        [
            0.230377813308855,
            0.714846570552542,
            0.630880767929590,
            -0.0279837694169839,
            -0.187034811718881,
            0.0308413818359870,
            0.0328830116669829,
            -0.0105974017849973,
        ],
    ),
}
_ALIASES = {"db1": "haar", "sym2": "db2"}

DEFAULT_FILTER = "db2"


@dataclass(frozen=True)
class WaveletFilter:
    """Orthonormal quadrature-mirror pair with n_vanishing vanishing moments."""

    name: str
    n_vanishing: int
    lowpass: np.ndarray
    highpass: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.lowpass, dtype=float)
        hp = np.asarray(self.highpass, dtype=float)
        if lp.ndim != 1 or lp.shape != hp.shape or lp.size < 2 or lp.size % 2:
            raise BadFilter("filter taps must be two equal-length even-sized vectors")
        if self.n_vanishing < 1:
            raise BadFilter("need at least one vanishing moment")
        if abs(np.dot(lp, lp) - 1.0) > 1e-10:
            raise BadFilter("lowpass taps are not unit-norm")
        for shift in range(2, lp.size, 2):
            if abs(np.dot(lp[:-shift], lp[shift:])) > 1e-10:
                raise BadFilter(f"lowpass taps fail orthonormality at shift {shift}")
        k = np.arange(lp.size, dtype=float)
        for p in range(self.n_vanishing):
            if abs(np.dot(k**p, hp)) > 1e-8 * max(1.0, lp.size**p):
                raise BadFilter(f"highpass taps fail vanishing moment p={p}")
        lp = lp.copy()
        hp = hp.copy()
        lp.setflags(write=False)
        hp.setflags(write=False)
        object.__setattr__(self, "lowpass", lp)
        object.__setattr__(self, "highpass", hp)

    @property
    def length(self) -> int:
        return self.lowpass.size


def filter_bank(name: str = DEFAULT_FILTER) -> WaveletFilter:
    """Look up a built-in orthonormal filter by name (haar/db1, db2/sym2, db3, db4)."""
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in _SCALING_TAPS:
        raise BadFilter(f"unknown filter {name!r}; available: {sorted(_SCALING_TAPS)}")
    nv, taps = _SCALING_TAPS[key]
    lp = np.asarray(taps)
    hp = np.array([(-1.0) ** k * lp[lp.size - 1 - k] for k in range(lp.size)])
    return WaveletFilter(name=key, n_vanishing=nv, lowpass=lp, highpass=hp)


@dataclass(frozen=True)
class WaveletPyramid:
    """Detail coefficients per octave: coeffs[j-1] is an M x n_j array."""

    coeffs: tuple
    counts: tuple
    filter: WaveletFilter
    source_len: int

    @property
    def m(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def j_max(self) -> int:
        return len(self.coeffs)

    def details(self, j: int) -> np.ndarray:
        if not (1 <= j <= self.j_max):
            raise ScaleUnavailable(f"octave {j} outside 1..{self.j_max}")
        return self.coeffs[j - 1]


@dataclass(frozen=True)
class WaveletSpectrumSet:
    """Per-octave M x M spectra with the coefficient counts that produced them."""

    scales: tuple
    spectra: np.ndarray  # (n_scales, M, M)
    counts: tuple

    @property
    def m(self) -> int:
        return self.spectra.shape[1]

    def at(self, j: int) -> np.ndarray:
        if j not in self.scales:
            raise ScaleUnavailable(f"octave {j} not in {self.scales}")
        return self.spectra[self.scales.index(j)]


def _count_after(n: int, length: int) -> int:
    return (n - length + 1) // 2


def dwt(x: np.ndarray, j_max: int | None = None, f: WaveletFilter | None = None) -> WaveletPyramid:
    """Pyramid transform of an M x N array (a 1-d array is treated as M=1).

    Stops at octave ``j_max`` when given, otherwise at the deepest octave with
    at least one coefficient.  Raises SeriesTooShort when ``j_max`` cannot be
    reached.
    """
    if f is None:
        f = filter_bank(DEFAULT_FILTER)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionMismatch("input must be 1-d or 2-d (components x time)")
    n = x.shape[1]
    length = f.length
    if _count_after(n, length) < 1:
        raise SeriesTooShort(f"series of length {n} supports no octave with filter length {length}")

    coeffs = []
    counts = []
    approx = x
    j = 0
    while True:
        j += 1
        nj = _count_after(approx.shape[1], length)
        if nj < 1:
            break
        det = np.empty((x.shape[0], nj))
        app = np.empty((x.shape[0], nj))
        for row in range(x.shape[0]):
            det[row] = np.convolve(approx[row], f.highpass, mode="valid")[1::2][:nj]
            app[row] = np.convolve(approx[row], f.lowpass, mode="valid")[1::2][:nj]
        coeffs.append(det)
        counts.append(nj)
        approx = app
        if j_max is not None and j >= j_max:
            break

    if j_max is not None and len(coeffs) < j_max:
        raise SeriesTooShort(
            f"series of length {n} reaches only octave {len(coeffs)}, requested {j_max}"
        )
    return WaveletPyramid(
        coeffs=tuple(coeffs), counts=tuple(counts), filter=f, source_len=n
    )


def wavelet_spectrum(p: WaveletPyramid, j: int) -> np.ndarray:
    """Average of coefficient outer products at octave j (symmetric M x M)."""
    d = p.details(j)
    s = d @ d.T / d.shape[1]
    return 0.5 * (s + s.T)


def spectrum_set(p: WaveletPyramid, j1: int = 1, j2: int | None = None) -> WaveletSpectrumSet:
    """Spectra for octaves j1..j2 (j2 defaults to the deepest available)."""
    if j2 is None:
        j2 = p.j_max
    scales = tuple(range(j1, j2 + 1))
    spectra = np.stack([wavelet_spectrum(p, j) for j in scales])
    counts = tuple(p.counts[j - 1] for j in scales)
    return WaveletSpectrumSet(scales=scales, spectra=spectra, counts=counts)


def windowed_spectra(p: WaveletPyramid, j: int, j2: int) -> np.ndarray:
    """Spectra over 2^(j2-j) disjoint windows of n_j2 coefficients at octave j.

    Window tau covers coefficient indices (tau-1)*n_j2 .. tau*n_j2 - 1;
    trailing coefficients beyond the last full window are discarded.
    """
    if not (1 <= j <= j2 <= p.j_max):
        raise ScaleUnavailable(f"need 1 <= j <= j2 <= {p.j_max}, got ({j}, {j2})")
    nw = p.counts[j2 - 1]
    m = p.m
    if nw < m:
        raise WindowTooSmall(
            f"window size n_j2 = {nw} is below the dimension M = {m}; "
            "spectra would be rank-deficient"
        )
    n_windows = 2 ** (j2 - j)
    d = p.details(j)
    if d.shape[1] < n_windows * nw:
        raise InsufficientCoefficients(
            f"octave {j} has {d.shape[1]} coefficients, need {n_windows * nw}"
        )
    blocks = d[:, : n_windows * nw].reshape(m, n_windows, nw)
    s = np.einsum("mtk,ntk->tmn", blocks, blocks) / nw
    return 0.5 * (s + np.swapaxes(s, 1, 2))


def spectra_to_csv(s: WaveletSpectrumSet, fh) -> None:
    """Rows (j, m, m', S_mm'(2^j), n_j), 1-based component indices."""
    writer = csv.writer(fh)
    writer.writerow(["j", "m", "mp", "s", "n_j"])
    for idx, j in enumerate(s.scales):
        for a in range(s.m):
            for b in range(s.m):
                writer.writerow([j, a + 1, b + 1, repr(float(s.spectra[idx, a, b])), s.counts[idx]])

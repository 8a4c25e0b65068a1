"""Exact Gaussian synthesis of multivariate fractional noise and motion.

The increment process of a mixture of correlated fractional Brownian motions
is stationary with a closed-form matrix covariance sequence.  Sample paths are
drawn by block-circulant embedding: the covariance sequence is periodized,
diagonalized frequency-by-frequency with small Hermitian eigendecompositions,
and driven by complex Gaussian noise.  The resulting paths carry the target
covariance exactly whenever the embedding is positive semidefinite; negative
spectral mass is clipped and reported.

Reproducibility: all randomness flows through a counter-based Philox generator
keyed by a 64-bit seed, and normal variates are produced by inverse-CDF from
fixed-point uniforms, so identical (params, n, seed) inputs give bit-identical
paths on any platform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionMismatch, EmbeddingFailed, IndexOutOfRange
from .model import ModelParams, params_to_dict

# Identifier of the noise pipeline, stored in output metadata.
RNG_ID = "philox4x64-10/u53/invnorm"

# Above this relative clipped spectral mass the embedding is considered broken.
CLIP_TOL = 1e-6
# Negative eigenvalues below this relative magnitude count as numerical dust
# and do not trigger embedding doubling.
PSD_DUST_RTOL = 1e-12
# Hard cap on embedding growth: sizes beyond 2^16 * n are not attempted.
MAX_SIZE_FACTOR = 2**16


def gaussian_variates(seed: int, shape) -> np.ndarray:
    """Deterministic standard-normal array for a 64-bit seed.

    Philox raw 64-bit words are mapped to uniforms (k + 1/2) * 2^-53 and pushed
    through the inverse normal CDF; the layout of ``shape`` is part of the
    stream contract.
    """
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    raw = gen.integers(0, 2**64, size=shape, dtype=np.uint64, endpoint=False)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def mfgn_cross_covariance(p: ModelParams, m: int, m2: int, k: int) -> float:
    """Pre-mixing increment covariance Gamma(k)[m, m2]; even in the lag k."""
    if not (0 <= m < p.m and 0 <= m2 < p.m):
        raise IndexOutOfRange(f"component indices ({m}, {m2}) outside 0..{p.m - 1}")
    h = p.hurst.values[m] + p.hurst.values[m2]
    sig = p.sigma.sigma[m, m2]
    ak = abs(int(k))
    return 0.5 * sig * (abs(ak - 1) ** h - 2.0 * ak**h + (ak + 1) ** h)


def mfgn_covariance_matrices(p: ModelParams, lags) -> np.ndarray:
    """Stack of pre-mixing covariance matrices Gamma(k) for the given lags."""
    lags = np.atleast_1d(np.asarray(lags, dtype=int))
    hsum = p.hurst.values[:, None] + p.hurst.values[None, :]
    sig = p.sigma.sigma
    ak = np.abs(lags)[:, None, None].astype(float)
    h = hsum[None, :, :]
    return 0.5 * sig[None, :, :] * (np.abs(ak - 1) ** h - 2.0 * ak**h + (ak + 1) ** h)


@dataclass(frozen=True)
class MfgnCovarianceSequence:
    """Covariance matrices Gamma(0..K) of the pre-mixing increment process."""

    lags: np.ndarray
    gamma: np.ndarray  # (K+1, M, M)


def mfgn_covariance_sequence(p: ModelParams, max_lag: int) -> MfgnCovarianceSequence:
    lags = np.arange(max_lag + 1)
    return MfgnCovarianceSequence(lags=lags, gamma=mfgn_covariance_matrices(p, lags))


@dataclass(frozen=True)
class EmbeddingReport:
    """Diagnostics of the circulant embedding actually used."""

    embedding_size: int
    min_spectral_eigenvalue: float
    clipped_mass: float

    def to_dict(self) -> dict:
        return {
            "embedding_size": self.embedding_size,
            "min_spectral_eigenvalue": self.min_spectral_eigenvalue,
            "clipped_mass": self.clipped_mass,
        }


@dataclass(frozen=True)
class SamplePath:
    """An M x N realization plus the metadata needed to regenerate it."""

    data: np.ndarray
    params: ModelParams
    seed: int
    kind: str  # "mfGn" or "mfBm"

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim != 2:
            raise DimensionMismatch("sample path data must be a 2-d array")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


class CirculantEmbedding:
    """Spectral factorization of the mfGn covariance, reusable across seeds.

    Precomputing the factorization once and drawing many seeds through
    :meth:`sample` is the fast path for Monte Carlo work.
    """

    def __init__(self, params: ModelParams, n: int, clip_tol: float = CLIP_TOL):
        if n < 2:
            raise DimensionMismatch(f"need at least 2 samples, got {n}")
        self.params = params
        self.n = int(n)
        m = params.m

        size = 1
        while size < 2 * (self.n - 1):
            size *= 2
        size = max(size, 4)

        while True:
            evals, evecs, spec_min = self._spectrum(params, size)
            neg = np.abs(np.minimum(evals, 0.0))
            # f = 0 and f = size/2 occur once in the full spectrum, others twice
            wts = np.full(evals.shape[0], 2.0)
            wts[0] = 1.0
            wts[-1] = 1.0
            total = float(np.sum(wts[:, None] * np.abs(evals)))
            clipped = float(np.sum(wts[:, None] * neg))
            mass = clipped / total if total > 0.0 else 0.0
            if mass <= PSD_DUST_RTOL or size * 2 > MAX_SIZE_FACTOR * self.n:
                break
            size *= 2

        if mass > clip_tol:
            raise EmbeddingFailed(
                f"embedding of size {size} clips {mass:.3e} of spectral mass "
                f"(tolerance {clip_tol:.1e})"
            )

        clipped_evals = np.maximum(evals, 0.0)
        # B(f) = U sqrt(L) U^T, real symmetric PSD, one matrix per frequency
        self._b_half = np.einsum(
            "fij,fj,fkj->fik", evecs, np.sqrt(clipped_evals), evecs
        )
        self._evals = clipped_evals
        self._evecs = evecs
        self.size = size
        self.report = EmbeddingReport(
            embedding_size=size,
            min_spectral_eigenvalue=spec_min,
            clipped_mass=mass,
        )

    @staticmethod
    def _spectrum(params: ModelParams, size: int):
        """Eigendecompose the block spectrum on frequencies 0..size/2."""
        half = size // 2
        gam = mfgn_covariance_matrices(params, np.arange(half + 1))
        m = params.m
        ext = np.empty((size, m, m))
        ext[: half + 1] = gam
        ext[half + 1 :] = gam[1:half][::-1]
        lam = np.fft.rfft(ext, axis=0)
        # blocks are symmetric in the lag, so the spectrum is real
        lam = lam.real
        lam = 0.5 * (lam + np.swapaxes(lam, 1, 2))
        evals, evecs = np.linalg.eigh(lam)
        return evals, evecs, float(evals.min())

    def sample(self, seed: int, kind: str = "mfGn") -> SamplePath:
        """Draw one mixed M x n realization for the given seed."""
        m = self.params.m
        size = self.size
        half = size // 2
        z = gaussian_variates(seed, (2, m, size))
        eps = z[0] + 1j * z[1]
        v = np.empty((m, size), dtype=complex)
        v[:, : half + 1] = np.einsum("fij,jf->if", self._b_half, eps[:, : half + 1])
        if half > 1:
            v[:, half + 1 :] = np.einsum(
                "fij,jf->if", self._b_half[1:half][::-1], eps[:, half + 1 :]
            )
        y = np.fft.ifft(v, axis=1)[:, : self.n]
        x = np.sqrt(size) * y.real
        data = self.params.mixing.entries @ x
        if kind == "mfBm":
            data = np.cumsum(data, axis=1)
        return SamplePath(data=data, params=self.params, seed=int(seed), kind=kind)

    def sample_batch(self, seeds, kind: str = "mfGn") -> list[SamplePath]:
        """Independent realizations, one per seed; order never affects content."""
        return [self.sample(int(s), kind=kind) for s in seeds]

    def realized_covariance(self, max_lag: int) -> np.ndarray:
        """Exact mixed covariance of the sampling map, lags 0..max_lag.

        Computed in closed form from the (possibly clipped) spectral matrices;
        equals W Gamma(k) W^T whenever nothing was clipped.
        """
        lam = np.einsum("fij,fj,fkj->fik", self._evecs, self._evals, self._evecs)
        c = np.fft.irfft(lam, n=self.size, axis=0)[: max_lag + 1]
        w = self.params.mixing.entries
        return np.einsum("ij,fjk,lk->fil", w, c, w)


def synthesize_mfgn(p: ModelParams, n: int, seed: int):
    """One exact-covariance mfGn realization -> (SamplePath, EmbeddingReport)."""
    emb = CirculantEmbedding(p, n)
    return emb.sample(seed, kind="mfGn"), emb.report


def synthesize_mfgn_batch(p: ModelParams, n: int, seeds):
    """Batch variant sharing one embedding; accepts an explicit seed sequence."""
    emb = CirculantEmbedding(p, n)
    return emb.sample_batch(seeds, kind="mfGn"), emb.report


def synthesize_mfbm(p: ModelParams, n: int, seed: int) -> SamplePath:
    """Cumulative sum of the mfGn path: path[t] = sum of increments 0..t.

    The path has exactly n samples and no leading zero; its first differences
    reproduce the mfGn realization exactly.
    """
    emb = CirculantEmbedding(p, n)
    return emb.sample(seed, kind="mfBm")


# ---------------------------------------------------------------------------
# On-disk formats: CSV (t, c1..cM) and raw float64 + JSON sidecar
# ---------------------------------------------------------------------------

def path_to_csv(path: SamplePath, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["t"] + [f"c{i + 1}" for i in range(path.m)])
    for t in range(path.n):
        writer.writerow([t] + [repr(float(v)) for v in path.data[:, t]])


def path_from_csv(fh) -> np.ndarray:
    """Read an M x N array back from the CSV layout written by path_to_csv."""
    reader = csv.reader(fh)
    header = next(reader)
    drop = 1 if header and header[0].strip().lower() == "t" else 0
    rows = [[float(v) for v in row[drop:]] for row in reader if row]
    if not rows:
        raise DimensionMismatch("empty series file")
    return np.asarray(rows, dtype=float).T


def path_sidecar(path: SamplePath) -> dict:
    return {
        "M": path.m,
        "N": path.n,
        "seed": path.seed,
        "kind": path.kind,
        "params": params_to_dict(path.params),
        "rng": RNG_ID,
    }


def path_to_binary(path: SamplePath, data_file, sidecar_file) -> None:
    """Raw little-endian float64, component-contiguous, plus a JSON sidecar."""
    arr = np.ascontiguousarray(path.data, dtype="<f8")
    data_file.write(arr.tobytes())
    sidecar_file.write(json.dumps(path_sidecar(path), indent=2))
    sidecar_file.write("\n")


def path_from_binary(data_file, sidecar_file) -> tuple[np.ndarray, dict]:
    meta = json.load(sidecar_file)
    raw = np.frombuffer(data_file.read(), dtype="<f8")
    arr = raw.reshape(meta["M"], meta["N"])
    return arr, meta

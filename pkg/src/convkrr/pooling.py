"""Frequency reweighting by pooling, and the translate-mixing matrices.

Width-w average pooling acts on the d cyclic frequencies through the
triangular (Fejer) weights

    kappa_f = 1 + 2 sum_{k=1}^{w-1} (1 - k/w) cos(2 pi f k / d)
            = |sum_{s=1}^{w} e^{2 pi i f s / d}|^2 / w ,

so kappa_0 = w (the shift-invariant direction), kappa_f = kappa_{d-f} >= 0,
and kappa_f = 0 exactly when d divides f*w with f != 0; there are
gcd(w, d) - 1 such zeros.  (Frequency f = 0 here plays the role usually
written as j = d with the convention e^{2 pi i j k / d}.)

With downsampling by delta the mixing of the d translates of a diameter-r
set is no longer circulant but block-circulant with period delta.  The
matrix is a pure counting object:

    count[i, j] = |{(k, s, s', t) : k in [d/delta], s, s' in [w],
                    0 <= t <= q - r,
                    k delta + s + t = i (mod d),  k delta + s' + t = j (mod d)}|

(positions 1-based in the counting, stored 0-based).  Two normalizations of
the counts are useful and both are exposed:

    spectral   : delta / (w (q+1-r))   -- the scaling under which the kernel
                 eigenvalues on the family of a diameter-r, degree-ell class
                 are xi_ell (q+1-r) / d times the matrix eigenvalues; it is
                 the identity when delta = w = 1 and has trace d;
    unit_trace : delta / (d w (q+1-r)) -- trace exactly 1.

Block-circulant symmetric matrices diagonalize per frequency block: writing
M = Circulant(B_1, ..., B_m) with delta x delta blocks and m = d/delta, the
Hermitian blocks H_j = sum_k rho_j^{k-1} B_k (rho_j = e^{2 pi i j/m}) carry
the spectrum, and an eigenvector v of H_j lifts to
[v, rho_j v, ..., rho_j^{m-1} v]/sqrt(m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "kappa_weights",
    "kappa_zero_count",
    "filter_kappa_weights",
    "gaussian_filter_row",
    "PoolingMatrix",
    "pooling_matrix",
    "block_circulant_eig",
    "block_circulant_real_eigenbasis",
    "downsample_perturbation",
    "DownsamplePerturbation",
]


def kappa_weights(d: int, omega: int) -> np.ndarray:
    """Fejer frequency weights of width-omega average pooling on d sites.

    Entry f (0-based, f = 0 being the shift-invariant direction) is
    kappa_f = (1/omega) |sum_{s<omega} e^{2 pi i f s/d}|^2, with the exact
    divisibility zeros snapped to 0.0 and kappa_0 = omega exactly.
    """
    if not (1 <= omega <= d):
        raise ValueError(f"need 1 <= omega <= d, got omega={omega}, d={d}")
    f = np.arange(d)
    kappa = np.empty(d)
    kappa[0] = float(omega)
    if d > 1:
        num = np.sin(np.pi * f[1:] * omega / d)
        den = np.sin(np.pi * f[1:] / d)
        kappa[1:] = (num / den) ** 2 / omega
        exact_zero = (f[1:] * omega) % d == 0
        kappa[1:][exact_zero] = 0.0
    return kappa


def kappa_zero_count(d: int, omega: int) -> int:
    """Number of zero weights among f = 1..d-1: gcd(omega, d) - 1."""
    return math.gcd(omega, d) - 1


def filter_kappa_weights(filter_row: np.ndarray) -> np.ndarray:
    """Frequency weights of weighted pooling: |DFT(filter row)|^2.

    `filter_row[s]` is the filter value at shift s (s = 0..d-1), typically
    tau(min(s, d-s)) for a symmetric filter tau over distances.  The result
    is the DFT of the filter's cyclic autocorrelation, hence nonnegative.
    """
    row = np.asarray(filter_row, dtype=float)
    kappa = np.abs(np.fft.fft(row)) ** 2
    kappa[kappa < 0] = 0.0
    return kappa


def gaussian_filter_row(d: int, sigma: float) -> np.ndarray:
    """Symmetric Gaussian filter tau(dist) = exp(-dist^2/(2 sigma^2))/(sqrt(2 pi) sigma)."""
    dist = np.minimum(np.arange(d), d - np.arange(d)).astype(float)
    return np.exp(-(dist**2) / (2.0 * sigma**2)) / (math.sqrt(2.0 * math.pi) * sigma)


# -- translate-mixing matrices ------------------------------------------------


def _mixing_counts(d: int, q: int, omega: int, delta: int, r: int) -> np.ndarray:
    """Integer count matrix of the quadruple congruences (exact arithmetic)."""
    if d % delta != 0:
        raise ValueError(f"downsampling factor {delta} must divide d={d}")
    if not (1 <= r <= q):
        raise ValueError(f"need 1 <= r <= q, got r={r}")
    if not (1 <= omega <= d):
        raise ValueError(f"need 1 <= omega <= d")
    counts = np.zeros((d, d), dtype=np.int64)
    ks = np.arange(1, d // delta + 1) * delta  # k*delta for k in [d/delta]
    for s in range(1, omega + 1):
        for sp in range(1, omega + 1):
            for t in range(0, q - r + 1):
                i = (ks + s + t - 1) % d  # 1-based positions stored 0-based
                j = (ks + sp + t - 1) % d
                np.add.at(counts, (i, j), 1)
    return counts


@dataclass(frozen=True)
class PoolingMatrix:
    """Translate-mixing matrix for sets of cyclic diameter r, as raw counts."""

    r: int
    d: int
    q: int
    omega: int
    delta: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def window_count(self) -> int:
        """q + 1 - r: number of length-q windows containing a diameter-r set."""
        return self.q + 1 - self.r

    def spectral_prefactor(self) -> Fraction:
        return Fraction(self.delta, self.omega * self.window_count)

    def unit_trace_prefactor(self) -> Fraction:
        return Fraction(self.delta, self.d * self.omega * self.window_count)

    def matrix(self, normalization: str = "spectral") -> np.ndarray:
        if normalization == "spectral":
            pref = self.spectral_prefactor()
        elif normalization == "unit_trace":
            pref = self.unit_trace_prefactor()
        else:
            raise ValueError(f"unknown normalization {normalization!r}")
        return self.counts.astype(float) * (pref.numerator / pref.denominator)

    def trace_fraction(self, normalization: str = "unit_trace") -> Fraction:
        """Exact trace under the chosen normalization."""
        diag = int(np.trace(self.counts))
        pref = self.unit_trace_prefactor() if normalization == "unit_trace" else self.spectral_prefactor()
        return diag * pref

    def check_structure(self, tol: float = 0.0) -> None:
        """Validate symmetry, block-circulant periodicity, and bandedness."""
        c = self.counts
        d, delta, omega = self.d, self.delta, self.omega
        if not np.array_equal(c, c.T):
            raise ValueError("mixing matrix is not symmetric")
        rolled = np.roll(np.roll(c, delta, axis=0), delta, axis=1)
        if not np.array_equal(c, rolled):
            raise ValueError(f"mixing matrix is not block-circulant with period {delta}")
        i = np.arange(d)
        dist = np.minimum(np.abs(i[:, None] - i[None, :]), d - np.abs(i[:, None] - i[None, :]))
        if np.any(c[dist >= min(omega, d)] != 0):
            raise ValueError("mixing matrix has entries outside the pooling band")

    def to_csv(self, normalization: str = "spectral") -> str:
        m = self.matrix(normalization)
        return "\n".join(",".join(f"{v:.17g}" for v in row) for row in m) + "\n"


def pooling_matrix(r: int, d: int, q: int, omega: int, delta: int) -> PoolingMatrix:
    """Build the translate-mixing matrix for diameter parameter r."""
    pm = PoolingMatrix(r=r, d=d, q=q, omega=omega, delta=delta, counts=_mixing_counts(d, q, omega, delta, r))
    pm.check_structure()
    return pm


# -- block-circulant diagonalization ------------------------------------------


def _blocks(M: np.ndarray, delta: int) -> np.ndarray:
    d = M.shape[0]
    m = d // delta
    return np.stack([M[0:delta, k * delta : (k + 1) * delta] for k in range(m)])


def _check_block_circulant(M: np.ndarray, delta: int, tol: float = 1e-12) -> None:
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if d % delta != 0:
        raise ValueError(f"block size {delta} must divide matrix size {d}")
    scale = max(1.0, np.abs(M).max())
    if np.abs(M - M.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric")
    rolled = np.roll(np.roll(M, delta, axis=0), delta, axis=1)
    if np.abs(M - rolled).max() > tol * scale:
        raise ValueError(f"matrix is not block-circulant with period {delta}")


def block_circulant_eig(M: np.ndarray, delta: int = 1) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of a symmetric block-circulant matrix via frequency blocks.

    Returns all d pairs (eigenvalue, complex eigenvector), grouped by block
    frequency j = 0..m-1.  For delta = 1 the eigenvalues are the DFT of the
    first row and the eigenvectors the Fourier vectors.
    """
    M = np.asarray(M, dtype=float)
    _check_block_circulant(M, delta)
    d = M.shape[0]
    m = d // delta
    B = _blocks(M, delta)
    pairs: list[tuple[float, np.ndarray]] = []
    for j in range(m):
        rho = np.exp(2j * np.pi * j / m)
        H = np.tensordot(rho ** np.arange(m), B, axes=(0, 0))
        vals, vecs = np.linalg.eigh(H)
        lift = rho ** np.arange(m)
        for s in range(delta):
            v = np.concatenate([lift[t] * vecs[:, s] for t in range(m)]) / math.sqrt(m)
            pairs.append((float(vals[s]), v))
    return pairs


def block_circulant_real_eigenbasis(M: np.ndarray, delta: int = 1) -> list[tuple[float, int, np.ndarray]]:
    """Real orthonormal eigenbasis of a symmetric block-circulant matrix.

    Conjugate frequency blocks j and m-j carry identical spectra; their
    complex eigenvectors are combined into cosine/sine pairs, so the result
    is a list of (eigenvalue, block frequency j in [0, m/2], vectors) where
    `vectors` has shape (1, d) for the self-conjugate blocks j = 0 and
    j = m/2, and (2, d) otherwise.
    """
    M = np.asarray(M, dtype=float)
    _check_block_circulant(M, delta)
    d = M.shape[0]
    m = d // delta
    B = _blocks(M, delta)
    out: list[tuple[float, int, np.ndarray]] = []
    for j in range(m // 2 + 1):
        rho = np.exp(2j * np.pi * j / m)
        H = np.tensordot(rho ** np.arange(m), B, axes=(0, 0))
        if j == 0 or (m % 2 == 0 and j == m // 2):
            vals, vecs = np.linalg.eigh(H.real)
            signs = np.real(rho ** np.arange(m))  # +1...+1 or alternating
            for s in range(delta):
                v = np.concatenate([signs[t] * vecs[:, s] for t in range(m)]) / math.sqrt(m)
                out.append((float(vals[s]), j, v[None, :]))
        else:
            vals, vecs = np.linalg.eigh(H)
            lift = rho ** np.arange(m)
            for s in range(delta):
                w = np.concatenate([lift[t] * vecs[:, s] for t in range(m)]) / math.sqrt(m)
                pair = np.stack([math.sqrt(2.0) * w.real, math.sqrt(2.0) * w.imag])
                out.append((float(vals[s]), j, pair))
    return out


# -- downsampling perturbation -------------------------------------------------


@dataclass(frozen=True)
class DownsamplePerturbation:
    """Difference analysis A = M(omega, delta=omega) - M(omega, delta=1)."""

    r: int
    d: int
    q: int
    omega: int
    perturbation: np.ndarray  # A, spectral normalization
    h0: np.ndarray            # sum of the omega x omega blocks of A

    @property
    def h0_max(self) -> float:
        return float(np.abs(self.h0).max())

    @property
    def ones_image_max(self) -> float:
        return float(np.abs(self.perturbation @ np.ones(self.d)).max())

    @property
    def is_zero(self) -> bool:
        return float(np.abs(self.perturbation).max()) == 0.0


def downsample_perturbation(r: int, d: int, q: int, omega: int, delta: int | None = None) -> DownsamplePerturbation:
    """How downsampling by delta = omega perturbs the translate mixing.

    Only delta = omega is analyzed exactly: the aggregated block sum of the
    perturbation vanishes, so the shift-invariant eigenspace is untouched,
    and the perturbation is identically zero whenever omega divides q+1-r.
    Other delta <= omega cases are a numerical comparison, not an identity;
    use the mixing matrices directly for those.
    """
    if delta is not None and delta != omega:
        raise ValueError(
            "exact downsampling invariance analysis requires delta == omega; "
            "for delta < omega compare mixing matrices numerically"
        )
    if d % omega != 0:
        raise ValueError(f"need omega | d for the delta = omega analysis, got d={d}, omega={omega}")
    base = pooling_matrix(r, d, q, omega, 1).matrix("spectral")
    down = pooling_matrix(r, d, q, omega, omega).matrix("spectral")
    A = down - base
    m = d // omega
    h0 = sum(A[0:omega, k * omega : (k + 1) * omega] for k in range(m))
    return DownsamplePerturbation(r=r, d=d, q=q, omega=omega, perturbation=A, h0=np.asarray(h0))

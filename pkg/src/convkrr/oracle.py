"""Brute-force spectral oracles for kernel operators on the full hypercube.

Two oracles are provided.  `brute_force_spectrum` forms the 2^d x 2^d
matrix (1/2^d) H(x, y) over all pairs of points and diagonalizes it densely;
it assumes nothing and is the ground truth at small d.

`block_oracle_spectrum` conjugates the same dense matrix into the parity
basis with a fast Walsh-Hadamard transform (a structure-free orthogonal
change of basis), then *numerically verifies* that the resulting operator
matrix is block-diagonal across translate families before diagonalizing the
small verified blocks.  When the verification fails it raises, so using it
never assumes the block structure -- it certifies it.  This keeps large-d
grids affordable: the expensive object is the kernel matrix itself, not a
2^d-dimensional dense eigensolve.

Comparison helpers measure eigenvalue multiset deviation and per-eigenvalue
subspace deviation ||P_closed - P_oracle||_op = sqrt(1 - sigma_min^2) via
principal angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .architecture import ConvArchitecture
from .gram import gram_matrix, translate_parity_values
from .hypercube import IndexSet, canonical_window
from .innerkernel import InnerProductKernel
from .spectral import KernelSpectrum

__all__ = [
    "enumerate_hypercube",
    "fwht",
    "DenseSpectrum",
    "brute_force_spectrum",
    "BlockSpectrum",
    "BlockStructureError",
    "block_oracle_spectrum",
    "SpectrumComparison",
    "compare_to_dense",
    "compare_to_blocks",
]

BRUTE_FORCE_MAX_DIM = 14


def enumerate_hypercube(d: int) -> np.ndarray:
    """All 2^d sign vectors; row j has coordinate i equal to (-1)^{bit_i(j)}."""
    j = np.arange(1 << d, dtype=np.int64)
    bits = (j[:, None] >> np.arange(d)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def fwht(A: np.ndarray) -> np.ndarray:
    """Fast Walsh-Hadamard transform along axis 0 (Sylvester convention).

    Output row s is sum_j (-1)^{popcount(j & s)} A[j]; with the point
    enumeration above this is exactly sum_x Y_S(x) A[x].
    """
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    if n & (n - 1):
        raise ValueError("leading dimension must be a power of two")
    orig_shape = A.shape
    A = A.reshape(n, -1)
    h = 1
    while h < n:
        A = A.reshape(n // (2 * h), 2, h, A.shape[-1])
        top = A[:, 0] + A[:, 1]
        bot = A[:, 0] - A[:, 1]
        A = np.concatenate([top[:, None], bot[:, None]], axis=1).reshape(n, -1)
        h *= 2
    return A.reshape(orig_shape)


def _operator_matrix(arch: ConvArchitecture, kernel: InnerProductKernel) -> np.ndarray:
    X = enumerate_hypercube(arch.d)
    return gram_matrix(arch, kernel, X, method="direct") / float(1 << arch.d)


@dataclass(frozen=True)
class DenseSpectrum:
    """Dense eigendecomposition of the kernel operator over all 2^d points."""

    d: int
    values: np.ndarray    # descending
    vectors: np.ndarray   # column i is the eigenvector (point basis, unit Euclidean norm)

    @property
    def dim(self) -> int:
        return 1 << self.d


def brute_force_spectrum(arch: ConvArchitecture, kernel: InnerProductKernel) -> DenseSpectrum:
    """Dense diagonalization of (1/2^d)[H(x,y)]; requires d <= 14."""
    if arch.d > BRUTE_FORCE_MAX_DIM:
        raise ValueError(f"brute-force spectrum needs d <= {BRUTE_FORCE_MAX_DIM}, got d={arch.d}")
    A = _operator_matrix(arch, kernel)
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(vals)[::-1]
    return DenseSpectrum(d=arch.d, values=vals[order], vectors=vecs[:, order])


# -- verified-block oracle -----------------------------------------------------


class BlockStructureError(RuntimeError):
    """The parity-basis operator matrix failed the block-diagonality check."""


def _family_labels(d: int, q: int) -> tuple[np.ndarray, np.ndarray, list[tuple[int, tuple[int, ...]]]]:
    """Label each parity mask with its translate family.

    Returns (labels, translate_start, families) where labels[mask] is -1 for
    null sets (window longer than q), 0 for the empty set, and 1 + family
    index otherwise; translate_start[mask] is the 0-based start of the
    mask's covering window; families lists (degree, class offsets).
    """
    n = 1 << d
    labels = np.full(n, -1, dtype=np.int64)
    starts = np.zeros(n, dtype=np.int64)
    fam_index: dict[tuple[int, ...], int] = {}
    families: list[tuple[int, tuple[int, ...]]] = []
    labels[0] = 0
    for mask in range(1, n):
        positions = [i for i in range(d) if (mask >> i) & 1]
        S = IndexSet(tuple(positions), d)
        start, offsets = canonical_window(S)
        if 1 + offsets[-1] > q:
            continue
        key = offsets
        if key not in fam_index:
            fam_index[key] = len(families)
            families.append((len(offsets), offsets))
        labels[mask] = 1 + fam_index[key]
        starts[mask] = start
    return labels, starts, families


@dataclass(frozen=True)
class FamilyBlock:
    degree: int
    offsets: tuple[int, ...]
    values: np.ndarray    # d eigenvalues of the family block
    vectors: np.ndarray   # (d, d) orthonormal columns, coordinates = translate start 0..d-1


@dataclass(frozen=True)
class BlockSpectrum:
    d: int
    q: int
    constant_value: float
    blocks: tuple[FamilyBlock, ...]
    null_dim: int
    off_block_max: float

    def eigenvalues(self) -> np.ndarray:
        vals = [np.array([self.constant_value])]
        vals.extend(b.values for b in self.blocks)
        vals.append(np.zeros(self.null_dim))
        out = np.concatenate(vals)
        return np.sort(out)[::-1]


def block_oracle_spectrum(
    arch: ConvArchitecture,
    kernel: InnerProductKernel,
    structure_tol: float = 1e-10,
) -> BlockSpectrum:
    """Diagonalize the operator after certifying its translate-family block structure."""
    if not (2 * arch.q <= arch.d):
        raise ValueError("the translate-family oracle needs q <= d/2")
    d, q = arch.d, arch.q
    n = 1 << d
    A = _operator_matrix(arch, kernel)
    B = fwht(fwht(A).T).T / n  # operator matrix in the orthonormal parity basis
    labels, starts, families = _family_labels(d, q)

    scale = max(1.0, float(np.abs(B).max()))
    tol = structure_tol * scale
    resid = np.abs(B)
    # zero out the claimed blocks, then everything left must vanish
    const_col = np.flatnonzero(labels == 0)
    resid[const_col[:, None], const_col[None, :]] = 0.0
    mask_order = np.arange(n)
    for fi in range(len(families)):
        cols = mask_order[labels == 1 + fi]
        resid[np.ix_(cols, cols)] = 0.0
    off_max = float(resid.max())
    if off_max > tol:
        raise BlockStructureError(
            f"off-family entries reach {off_max:.3e} > {tol:.3e}; structure not certified"
        )

    constant_value = float(B[0, 0])
    blocks = []
    for fi, (degree, offsets) in enumerate(families):
        cols = mask_order[labels == 1 + fi]
        order = np.argsort(starts[cols])
        cols = cols[order]
        sub = B[np.ix_(cols, cols)]
        vals, vecs = np.linalg.eigh(sub)
        blocks.append(FamilyBlock(degree=degree, offsets=offsets, values=vals, vectors=vecs))
    null_dim = int(np.count_nonzero(labels == -1))
    return BlockSpectrum(
        d=d, q=q, constant_value=constant_value, blocks=tuple(blocks), null_dim=null_dim, off_block_max=off_max
    )


# -- comparisons ----------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumComparison:
    eigenvalue_deviation: float
    projector_deviation: float
    n_clusters: int

    def within(self, eig_tol: float, proj_tol: float) -> bool:
        return self.eigenvalue_deviation <= eig_tol and self.projector_deviation <= proj_tol


def _clusters(values: np.ndarray, merge_gap: float) -> list[tuple[float, float]]:
    """Merge sorted distinct values into clusters; returns (lo, hi) intervals."""
    vals = np.sort(np.unique(values))[::-1]
    out: list[list[float]] = []
    for v in vals:
        if out and out[-1][-1] - v <= merge_gap:
            out[-1].append(v)
        else:
            out.append([v])
    return [(group[-1], group[0]) for group in out]


def _subspace_deviation(U: np.ndarray, V: np.ndarray) -> float:
    """||P_U - P_V||_op for orthonormal column frames of equal dimension."""
    if U.shape[1] != V.shape[1]:
        return 1.0
    if U.shape[1] == 0:
        return 0.0
    sv = np.linalg.svd(U.T @ V, compute_uv=False)
    smin = min(1.0, float(sv.min()))
    return math.sqrt(max(0.0, 1.0 - smin * smin))


def _closed_point_values(mode, X: np.ndarray) -> np.ndarray:
    """Orthonormal (Euclidean) point-value columns of a closed-form mode."""
    n = X.shape[0]
    root = math.sqrt(n)
    if mode.kind == "constant":
        return np.ones((n, 1)) / root
    if mode.kind == "degree":
        from itertools import combinations

        d = X.shape[1]
        cols = []
        for S in combinations(range(d), mode.degree):
            cols.append(X[:, list(S)].prod(axis=1))
        return np.stack(cols, axis=1) / root
    if mode.kind == "parity":
        T = translate_parity_values(X, mode.class_offsets)
        return T / root
    if mode.block is not None:
        w = mode.vectors.shape[1]
        d = X.shape[1]
        cols = []
        for vec in mode.vectors:
            acc = np.zeros(n)
            for a in range(w):
                offs = [mode.block * w + ((a + o) % w) for o in mode.class_offsets]
                acc += vec[a] * X[:, offs].prod(axis=1)
            cols.append(acc)
        return np.stack(cols, axis=1) / root
    T = translate_parity_values(X, mode.class_offsets)
    return (T @ mode.vectors.T) / root


def compare_to_dense(
    closed: KernelSpectrum,
    dense: DenseSpectrum,
    merge_gap: float = 2e-8,
    zero_floor: float = 1e-10,
) -> SpectrumComparison:
    """Eigenvalue multiset and per-cluster projector deviation vs dense oracle."""
    n = dense.dim
    closed_vals = closed.eigenvalues(pad_to=n)
    eig_dev = float(np.abs(closed_vals - dense.values).max())

    X = enumerate_hypercube(closed.d).astype(np.float64)
    proj_dev = 0.0
    clusters = [c for c in _clusters(closed.eigenvalues(), merge_gap) if c[1] > zero_floor]
    for lo, hi in clusters:
        sel = (dense.values >= lo - merge_gap) & (dense.values <= hi + merge_gap)
        V = dense.vectors[:, sel]
        cols = [
            _closed_point_values(m, X)
            for m in closed.modes
            if lo <= m.value <= hi
        ]
        U = np.concatenate(cols, axis=1)
        proj_dev = max(proj_dev, _subspace_deviation(U, V))
    return SpectrumComparison(eigenvalue_deviation=eig_dev, projector_deviation=proj_dev, n_clusters=len(clusters))


def compare_to_blocks(
    closed: KernelSpectrum,
    oracle: BlockSpectrum,
    merge_gap: float = 2e-8,
    zero_floor: float = 1e-10,
) -> SpectrumComparison:
    """Same comparison against the verified-block oracle, family by family."""
    n = 1 << closed.d
    closed_vals = closed.eigenvalues(pad_to=n)
    eig_dev = float(np.abs(closed_vals - oracle.eigenvalues()).max())

    by_family: dict[tuple[int, ...], FamilyBlock] = {b.offsets: b for b in oracle.blocks}
    proj_dev = 0.0
    clusters = [c for c in _clusters(closed.eigenvalues(), merge_gap) if c[1] > zero_floor]
    for lo, hi in clusters:
        closed_in = [m for m in closed.modes if lo <= m.value <= hi]
        for m in closed_in:
            if m.kind == "constant":
                dev = 0.0 if abs(oracle.constant_value - m.value) <= merge_gap else 1.0
                proj_dev = max(proj_dev, dev)
                continue
            if m.kind == "degree" or m.block is not None:
                raise ValueError("block-oracle comparison covers translate-family spectra only")
            blk = by_family.get(tuple(m.class_offsets))
            if blk is None:
                proj_dev = 1.0
                continue
            sel = (blk.values >= lo - merge_gap) & (blk.values <= hi + merge_gap)
            V = blk.vectors[:, sel]
            if m.kind == "parity":
                U = np.eye(closed.d)
            else:
                peers = [
                    p for p in closed_in
                    if p.kind == m.kind and p.class_offsets == m.class_offsets
                ]
                if peers[0] is not m:
                    continue  # handle the family once per cluster
                U = np.concatenate([p.vectors for p in peers], axis=0).T
            proj_dev = max(proj_dev, _subspace_deviation(U, V))
    return SpectrumComparison(eigenvalue_deviation=eig_dev, projector_deviation=proj_dev, n_clusters=len(clusters))

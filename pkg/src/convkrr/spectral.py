"""Closed-form eigendecompositions of the convolutional kernel families.

For patch size q <= d/2 the kernel operator acting on L^2 of the hypercube
splits over translate families: the constant function, and for each
translation class S of degree ell (with r(S) = q+1-gamma(S) windows
containing it) the d-dimensional span of the translates Y_{a+S}.  On that
span the operator acts as xi_ell r(S)/d times a translate-mixing matrix:

    no pooling            identity            -> each translate is an
                                                 eigenfunction, value
                                                 xi_ell r(S)/d
    average pooling (w)   circulant Fejer     -> Fourier modes, values
                                                 xi_ell r(S) kappa_f / d
    global pooling        rank-one (all ones) -> the cyclic average, value
                                                 xi_ell r(S)
    weighted pooling      circulant |DFT|^2   -> Fourier modes with the
                                                 squared-filter weights
    with downsampling     block-circulant     -> numerically diagonalized
                                                 per frequency block

The full-size-patch kernel (q = d, no pooling) instead acts as xi_ell on
every degree-ell parity.  Nonoverlapping segment pooling decomposes into
independent global-pooling kernels per segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .architecture import ConvArchitecture
from .hypercube import translation_classes
from .innerkernel import InnerProductKernel
from .pooling import (
    block_circulant_real_eigenbasis,
    filter_kappa_weights,
    kappa_weights,
    pooling_matrix,
)

__all__ = ["SpectralMode", "KernelSpectrum", "spectrum", "mixing_matrix"]

ZERO_TOL = 1e-14


@dataclass(frozen=True)
class SpectralMode:
    """One eigenvalue record of a kernel operator.

    kind is one of
      "constant" : the constant function (vectors None),
      "parity"   : all d translates of the class are eigenfunctions with this
                   value (vectors None; multiplicity d),
      "degree"   : every degree-`degree` parity shares this value
                   (full-size-patch kernel; multiplicity C(d, degree)),
      "vector"   : explicit coefficient rows over the class translates
                   (vectors has shape (multiplicity, span)).
    """

    value: float
    degree: int
    kind: str
    class_offsets: tuple[int, ...] = ()
    freq: int | None = None
    multiplicity: int = 1
    vectors: np.ndarray | None = None
    block: int | None = None

    def sort_key(self):
        return (
            -self.value,
            self.degree,
            self.class_offsets,
            -1 if self.freq is None else self.freq,
            -1 if self.block is None else self.block,
        )

    def json_record(self, d: int) -> dict:
        rec = {
            "lambda": self.value,
            "degree": self.degree,
            "class": [o + 1 for o in self.class_offsets],
            "freq": self.freq if self.freq is not None else "parity",
            "multiplicity": self.multiplicity,
        }
        if self.kind == "degree":
            rec["class"] = None
        if self.block is not None:
            rec["block"] = self.block
        return rec


@dataclass(frozen=True)
class KernelSpectrum:
    """Complete positive spectrum of a kernel operator, deterministically ordered."""

    arch: ConvArchitecture
    kernel_source: dict
    modes: tuple[SpectralMode, ...]
    zero_tol: float = ZERO_TOL

    @property
    def d(self) -> int:
        return self.arch.d

    @property
    def total_trace(self) -> float:
        return float(sum(m.value * m.multiplicity for m in self.modes))

    @property
    def rank(self) -> int:
        return int(sum(m.multiplicity for m in self.modes))

    def eigenvalues(self, pad_to: int | None = None) -> np.ndarray:
        """Eigenvalues with multiplicity, descending; optionally zero-padded."""
        vals = np.concatenate([np.full(m.multiplicity, m.value) for m in self.modes]) if self.modes else np.zeros(0)
        vals = np.sort(vals)[::-1]
        if pad_to is not None:
            if pad_to < vals.size:
                raise ValueError("pad_to smaller than the number of positive modes")
            vals = np.concatenate([vals, np.zeros(pad_to - vals.size)])
        return vals

    def tail_trace(self, s: int) -> float:
        """Trace mass of modes with parity degree above s (drives the effective ridge)."""
        return float(sum(m.value * m.multiplicity for m in self.modes if m.degree > s))

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(m.json_record(self.d)) for m in self.modes) + "\n"


def mixing_matrix(arch: ConvArchitecture, r: int):
    """Translate-mixing matrix of the architecture for diameter parameter r."""
    return pooling_matrix(r, arch.d, arch.q, arch.omega, arch.downsample)


def _fourier_vectors(d: int, f: int) -> np.ndarray:
    """Real orthonormal Fourier rows over translates for frequency f in [0, d/2]."""
    a = np.arange(d)
    if f == 0:
        return np.ones((1, d)) / math.sqrt(d)
    if d % 2 == 0 and f == d // 2:
        return (np.where(a % 2 == 0, 1.0, -1.0) / math.sqrt(d))[None, :]
    c = np.cos(2 * np.pi * f * a / d) * math.sqrt(2.0 / d)
    s = np.sin(2 * np.pi * f * a / d) * math.sqrt(2.0 / d)
    return np.stack([c, s])


def _kappa_modes(d: int, kappa: np.ndarray, base: float, degree: int, offsets, zero_tol: float):
    """Modes of a circulant translate mixing with frequency weights kappa."""
    out = []
    for f in range(d // 2 + 1):
        lam = base * kappa[f]
        if lam <= zero_tol:
            continue
        vecs = _fourier_vectors(d, f)
        out.append(
            SpectralMode(
                value=float(lam),
                degree=degree,
                kind="vector",
                class_offsets=tuple(offsets),
                freq=f,
                multiplicity=vecs.shape[0],
                vectors=vecs,
            )
        )
    return out


def spectrum(arch: ConvArchitecture, kernel: InnerProductKernel, zero_tol: float = ZERO_TOL) -> KernelSpectrum:
    """Closed-form kernel spectrum; only eigenvalues above zero_tol are stored."""
    if kernel.q != arch.q:
        raise ValueError(f"kernel is on q={kernel.q}, architecture needs q={arch.q}")
    if not arch.spectrum_supported():
        raise ValueError(
            "closed-form spectrum needs q <= d/2 (or the plain full-patch kernel); "
            f"got q={arch.q}, d={arch.d}, pooling={arch.pooling.kind}"
        )
    d, q = arch.d, arch.q
    xi = kernel.xi
    modes: list[SpectralMode] = []

    if arch.is_fc:
        for ell in range(d + 1):
            if xi[ell] > zero_tol:
                modes.append(
                    SpectralMode(
                        value=float(xi[ell]),
                        degree=ell,
                        kind="degree" if ell else "constant",
                        multiplicity=math.comb(d, ell),
                    )
                )
        return KernelSpectrum(arch=arch, kernel_source=kernel.descriptor(), modes=_ordered(modes), zero_tol=zero_tol)

    const = arch.constant_weight() * xi[0]
    if const > zero_tol:
        modes.append(SpectralMode(value=float(const), degree=0, kind="constant"))

    kind = arch.pooling.kind
    delta = arch.downsample

    if kind == "nonoverlap":
        w = arch.pooling.width
        for ell in range(1, q + 1):
            if xi[ell] <= zero_tol:
                continue
            for rep in translation_classes(q, ell):
                lam = float(xi[ell] * rep.r)
                if lam <= zero_tol:
                    continue
                vec = np.ones((1, w)) / math.sqrt(w)
                for blk in range(d // w):
                    modes.append(
                        SpectralMode(
                            value=lam,
                            degree=ell,
                            kind="vector",
                            class_offsets=rep.offsets,
                            freq=0,
                            multiplicity=1,
                            vectors=vec,
                            block=blk,
                        )
                    )
        return KernelSpectrum(arch=arch, kernel_source=kernel.descriptor(), modes=_ordered(modes), zero_tol=zero_tol)

    if kind == "global":
        kappa = np.zeros(d)
        kappa[0] = d
    elif kind == "weighted":
        kappa = filter_kappa_weights(np.asarray(arch.pooling.filter_row))
    elif kind == "average" and delta == 1:
        kappa = kappa_weights(d, arch.pooling.width)
    else:
        kappa = None

    mixing_cache: dict[int, list] = {}
    for ell in range(1, q + 1):
        if xi[ell] <= zero_tol:
            continue
        for rep in translation_classes(q, ell):
            base = xi[ell] * rep.r / d
            if kind == "none" and delta == 1:
                if base > zero_tol:
                    modes.append(
                        SpectralMode(
                            value=float(base),
                            degree=ell,
                            kind="parity",
                            class_offsets=rep.offsets,
                            multiplicity=d,
                        )
                    )
            elif kappa is not None:
                modes.extend(_kappa_modes(d, kappa, base, ell, rep.offsets, zero_tol))
            else:
                if rep.gamma not in mixing_cache:
                    M = pooling_matrix(rep.gamma, d, q, arch.omega, delta).matrix("spectral")
                    mixing_cache[rep.gamma] = block_circulant_real_eigenbasis(M, delta)
                for kap, j, vecs in mixing_cache[rep.gamma]:
                    lam = base * kap
                    if lam <= zero_tol:
                        continue
                    modes.append(
                        SpectralMode(
                            value=float(lam),
                            degree=ell,
                            kind="vector",
                            class_offsets=rep.offsets,
                            freq=j,
                            multiplicity=vecs.shape[0],
                            vectors=vecs,
                        )
                    )
    return KernelSpectrum(arch=arch, kernel_source=kernel.descriptor(), modes=_ordered(modes), zero_tol=zero_tol)


def _ordered(modes: list[SpectralMode]) -> tuple[SpectralMode, ...]:
    return tuple(sorted(modes, key=SpectralMode.sort_key))

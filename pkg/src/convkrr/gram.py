"""Kernel evaluation and Gram assembly for the convolutional families.

All families reduce to weighted sums of patch comparisons
h(<x_(a), y_(a - delta)>/q) over window starts a and offsets delta.  The
builders below exploit three structural facts:

  * patch inner products are integer-valued, so h is applied through a
    (q+1)-entry lookup table instead of per-entry arithmetic;
  * the +delta and -delta offset sums are transposes of each other on a
    symmetric Gram, halving the work;
  * window inner products for a fixed (start, offset) pair are a single
    (n x q) @ (q x n) product, done in float32 (exact for +-1 data).

Global pooling with q < d additionally admits an exact low-rank feature
factorization through the translation-class averages; it is exposed as
method="features" and used by the experiment driver, while verification
paths always use the direct summation.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .architecture import ConvArchitecture
from .hypercube import BinarySignal, signal_matrix, translation_classes
from .innerkernel import InnerProductKernel

__all__ = [
    "GramMemoryError",
    "gram_matrix",
    "kernel_eval",
    "kernel_eval_reference",
    "diag_values",
    "translate_parity_values",
    "global_pool_features",
]

FEATURE_METHOD_MAX_CLASSES = 1 << 14


class GramMemoryError(MemoryError):
    """Raised before allocating a Gram that would exceed the configured cap."""


def _check_mem(n1: int, n2: int, mem_cap: int | None) -> None:
    if mem_cap is None:
        return
    # output + one float32 scratch + one index scratch
    need = n1 * n2 * (8 + 4 + 8)
    if need > mem_cap:
        raise GramMemoryError(
            f"projected Gram working set {need / 1e9:.2f} GB exceeds cap {mem_cap / 1e9:.2f} GB"
        )


def _window_index(d: int, q: int) -> np.ndarray:
    """W[a, i] = (a + i) mod d: the q columns of the window starting at a."""
    return (np.arange(d)[:, None] + np.arange(q)[None, :]) % d


def _value_table(kernel: InnerProductKernel) -> np.ndarray:
    return np.asarray(kernel.values, dtype=np.float64)


def _lookup(P: np.ndarray, table: np.ndarray, q: int) -> np.ndarray:
    """table[(P + q)/2] for an integer-valued float array P."""
    idx = ((P + q) * 0.5).astype(np.intp)
    return table[idx]


def _offset_weights(omega: int, delta: int) -> dict[tuple[int, int], int]:
    """c[(offset, residue)] = #{s in [omega] : s-offset in [omega], s = residue+1 mod delta}.

    `residue` is the 0-based window start modulo delta.
    """
    c: dict[tuple[int, int], int] = {}
    for off in range(-(omega - 1), omega):
        for s in range(max(1, 1 + off), min(omega, omega + off) + 1):
            rho = (s - 1) % delta
            c[(off, rho)] = c.get((off, rho), 0) + 1
    return c


def _average_configs(d: int, q: int, omega: int, delta: int) -> Iterator[tuple[int, np.ndarray, float]]:
    """Yield (offset, starts, weight) for the averaged/downsampled family.

    The kernel is weight * sum_{a in starts} h(<x_(a), y_(a - offset)>/q)
    summed over the yielded configs; offsets run over the full signed range.
    """
    c = _offset_weights(omega, delta)
    pref = delta / (d * omega)
    base = np.arange(d)
    for (off, rho), cnt in sorted(c.items()):
        starts = base[base % delta == rho] if delta > 1 else base
        yield off, starts, cnt * pref


def _none_configs(d: int, q: int, delta: int) -> Iterator[tuple[int, np.ndarray, float]]:
    starts = (np.arange(1, d // delta + 1) * delta) % d
    yield 0, np.sort(starts), delta / d


def _cyclic_configs(d: int, weights: np.ndarray) -> Iterator[tuple[int, np.ndarray, float]]:
    """Full cyclic offset loop with per-offset weights (global/weighted pooling)."""
    starts = np.arange(d)
    for off in range(d):
        if weights[off] != 0.0:
            yield off, starts, float(weights[off])


def _configs(arch: ConvArchitecture) -> Iterator[tuple[int, np.ndarray, float]]:
    d = arch.d
    kind = arch.pooling.kind
    if kind == "none":
        return _none_configs(d, arch.q, arch.downsample)
    if kind == "average":
        return _average_configs(d, arch.q, arch.pooling.width, arch.downsample)
    if kind == "global":
        return _cyclic_configs(d, np.full(d, 1.0 / d))
    if kind == "weighted":
        row = np.asarray(arch.pooling.filter_row, dtype=float)
        auto = np.array([np.dot(row, np.roll(row, off)) for off in range(d)])
        return _cyclic_configs(d, auto / d)
    raise ValueError(f"no offset configs for pooling kind {kind!r}")


def _accumulate_direct(
    arch: ConvArchitecture,
    kernel: InnerProductKernel,
    X: np.ndarray,
    Y: np.ndarray | None,
) -> np.ndarray:
    """Direct offset-sum Gram for the none/average/global/weighted kinds."""
    d, q = arch.d, arch.q
    table = _value_table(kernel)
    W = _window_index(d, q)
    Xf = X.astype(np.float32)
    symmetric = Y is None
    Yf = Xf if symmetric else Y.astype(np.float32)
    n1, n2 = Xf.shape[0], Yf.shape[0]
    K = np.zeros((n1, n2))

    configs = list(_configs(arch))
    if symmetric:
        # keep offsets >= 0 (canonical) and transpose-add the mirror
        by_off: dict[int, list[tuple[np.ndarray, float]]] = {}
        for off, starts, w in configs:
            by_off.setdefault(off, []).append((starts, w))
        for off in sorted(by_off):
            if arch.pooling.kind in ("none", "average"):
                if off < 0:
                    continue
                self_mirror = off == 0
            else:
                if off > d // 2:
                    continue
                self_mirror = off == 0 or (d % 2 == 0 and off == d // 2)
            G = np.zeros((n1, n2))
            for starts, w in by_off[off]:
                for a in starts:
                    P = Xf[:, W[a]] @ Yf[:, W[(a - off) % d]].T
                    G += w * _lookup(P, table, q)
            K += G if self_mirror else G + G.T
    else:
        for off, starts, w in configs:
            for a in starts:
                P = Xf[:, W[a]] @ Yf[:, W[(a - off) % d]].T
                K += w * _lookup(P, table, q)
    return K


def _fc_gram(kernel: InnerProductKernel, X: np.ndarray, Y: np.ndarray | None) -> np.ndarray:
    d = X.shape[1]
    table = _value_table(kernel)
    Xf = X.astype(np.float32)
    Yf = Xf if Y is None else Y.astype(np.float32)
    return _lookup(Xf @ Yf.T, table, d)


def _fc_gp_gram(kernel: InnerProductKernel, X: np.ndarray, Y: np.ndarray | None) -> np.ndarray:
    """Full-size patches with global pooling: sum over cyclic lags of h(z_lag/d)."""
    d = X.shape[1]
    table = _value_table(kernel)
    Xf = X.astype(np.float32)
    symmetric = Y is None
    Yf = Xf if symmetric else Y.astype(np.float32)
    K = np.zeros((Xf.shape[0], Yf.shape[0]))
    if symmetric:
        for lag in range(d // 2 + 1):
            G = _lookup(Xf @ np.roll(Yf, lag, axis=1).T, table, d)
            if lag == 0 or (d % 2 == 0 and lag == d // 2):
                K += G
            else:
                K += G + G.T
    else:
        for lag in range(d):
            K += _lookup(Xf @ np.roll(Yf, lag, axis=1).T, table, d)
    return K


def _nonoverlap_gram(
    arch: ConvArchitecture, kernel: InnerProductKernel, X: np.ndarray, Y: np.ndarray | None
) -> np.ndarray:
    """Sum of per-segment global-pooling kernels (windows wrap inside segments)."""
    d, q, w = arch.d, arch.q, arch.pooling.width
    table = _value_table(kernel)
    Xf = X.astype(np.float32)
    symmetric = Y is None
    Yf = Xf if symmetric else Y.astype(np.float32)
    K = np.zeros((Xf.shape[0], Yf.shape[0]))
    win = (np.arange(w)[:, None] + np.arange(q)[None, :]) % w
    for blk in range(d // w):
        cols = blk * w + np.arange(w)
        Xb, Yb = Xf[:, cols], Yf[:, cols]
        for lag in range(w):
            if symmetric and lag > w // 2:
                continue
            G = np.zeros_like(K)
            for a in range(w):
                P = Xb[:, win[a]] @ Yb[:, win[(a - lag) % w]].T
                G += _lookup(P, table, q)
            G /= w
            if symmetric:
                if lag == 0 or (w % 2 == 0 and lag == w // 2):
                    K += G
                else:
                    K += G + G.T
            else:
                K += G
    return K


def global_pool_features(arch: ConvArchitecture, kernel: InnerProductKernel, X: np.ndarray) -> np.ndarray:
    """Exact feature factorization of the global-pooling kernel (q < d).

    Column 0 carries the constant direction with squared weight d*xi_0;
    each further column is sqrt(xi_ell * r(S)) times the cyclic average
    (1/sqrt d) sum_a Y_{a+S}(x) of one translation class S.
    """
    if arch.pooling.kind != "global" or arch.q >= arch.d:
        raise ValueError("feature factorization applies to global pooling with q < d")
    d, q = arch.d, arch.q
    xi = kernel.xi
    cols = [np.full((X.shape[0], 1), math.sqrt(max(d * xi[0], 0.0)))]
    for ell in range(1, q + 1):
        if xi[ell] <= 0.0:
            continue
        for rep in translation_classes(q, ell):
            psi = translate_parity_values(X, rep.offsets).sum(axis=1) / math.sqrt(d)
            cols.append((math.sqrt(xi[ell] * rep.r) * psi)[:, None])
    return np.concatenate(cols, axis=1)


def translate_parity_values(X: np.ndarray, offsets) -> np.ndarray:
    """T[i, a] = Y_{a + S}(x_i) for the offset pattern S, all d translates a."""
    X = np.asarray(X)
    d = X.shape[1]
    idx = (np.arange(d)[:, None] + np.asarray(offsets, dtype=np.int64)[None, :]) % d
    return X[:, idx].prod(axis=2).astype(np.float64)


def gram_matrix(
    arch: ConvArchitecture,
    kernel: InnerProductKernel,
    X,
    Y=None,
    method: str = "auto",
    mem_cap: int | None = None,
) -> np.ndarray:
    """Kernel matrix H(x_i, y_j); symmetric PSD when Y is omitted.

    method="direct" is the definitional patch summation; "features" uses the
    low-rank factorization (global pooling with q < d only); "auto" picks
    features when available and affordable.
    """
    if kernel.q != arch.q:
        raise ValueError(f"kernel is on q={kernel.q}, architecture needs q={arch.q}")
    X = signal_matrix(X)
    Ym = None if Y is None else signal_matrix(Y)
    if X.shape[1] != arch.d or (Ym is not None and Ym.shape[1] != arch.d):
        raise ValueError("signal dimension does not match the architecture")
    _check_mem(X.shape[0], X.shape[0] if Ym is None else Ym.shape[0], mem_cap)

    use_features = False
    if arch.pooling.kind == "global" and arch.q < arch.d:
        n_classes = 2 ** (arch.q - 1)
        if method == "features":
            use_features = True
        elif method == "auto" and n_classes <= FEATURE_METHOD_MAX_CLASSES:
            use_features = True
    elif method == "features":
        raise ValueError("feature factorization only applies to global pooling with q < d")

    if use_features:
        F = global_pool_features(arch, kernel, X)
        G = global_pool_features(arch, kernel, Ym) if Ym is not None else F
        K = F @ G.T
    elif arch.is_fc:
        K = _fc_gram(kernel, X, Ym)
    elif arch.is_fc_gp:
        K = _fc_gp_gram(kernel, X, Ym)
    elif arch.pooling.kind == "nonoverlap":
        K = _nonoverlap_gram(arch, kernel, X, Ym)
    else:
        K = _accumulate_direct(arch, kernel, X, Ym)

    if not np.all(np.isfinite(K)):
        raise ValueError("non-finite Gram entry")
    if Ym is None:
        K = (K + K.T) / 2.0
    return K


def kernel_eval(arch: ConvArchitecture, kernel: InnerProductKernel, x, y) -> float:
    """H(x, y) for a single pair."""
    x = x.entries if isinstance(x, BinarySignal) else np.asarray(x)
    y = y.entries if isinstance(y, BinarySignal) else np.asarray(y)
    return float(gram_matrix(arch, kernel, x[None, :], y[None, :], method="direct")[0, 0])


def kernel_eval_reference(arch: ConvArchitecture, kernel: InnerProductKernel, x, y) -> float:
    """Slow definitional evaluation by explicit patch loops (for testing)."""
    x = x.entries if isinstance(x, BinarySignal) else np.asarray(x)
    y = y.entries if isinstance(y, BinarySignal) else np.asarray(y)
    d, q = arch.d, arch.q
    h = kernel.value_at
    kind = arch.pooling.kind

    def ip(a: int, b: int) -> int:
        ia = (a + np.arange(q)) % d
        ib = (b + np.arange(q)) % d
        return int(np.dot(x[ia], y[ib]))

    if arch.is_fc:
        return h(int(np.dot(x, y)))
    if kind == "global":
        return sum(h(ip(a, b)) for a in range(d) for b in range(d)) / d
    if kind == "none":
        delta = arch.downsample
        starts = [(k * delta) % d for k in range(1, d // delta + 1)]
        return (delta / d) * sum(h(ip(a, a)) for a in starts)
    if kind == "average":
        w, delta = arch.pooling.width, arch.downsample
        total = 0.0
        for k in range(1, d // delta + 1):
            for s in range(1, w + 1):
                for sp in range(1, w + 1):
                    total += h(ip((k * delta + s - 1) % d, (k * delta + sp - 1) % d))
        return delta / (d * w) * total
    if kind == "weighted":
        row = np.asarray(arch.pooling.filter_row)
        total = 0.0
        for k in range(d):
            for s in range(d):
                for sp in range(d):
                    total += row[s] * row[sp] * h(ip((k + s) % d, (k + sp) % d))
        return total / d
    if kind == "nonoverlap":
        w = arch.pooling.width
        total = 0.0
        for blk in range(d // w):
            xb, yb = x[blk * w : (blk + 1) * w], y[blk * w : (blk + 1) * w]
            for i in range(w):
                for j in range(w):
                    ia = (i + np.arange(q)) % w
                    ib = (j + np.arange(q)) % w
                    total += h(int(np.dot(xb[ia], yb[ib]))) / w
        return total
    raise ValueError(f"unsupported pooling kind {kind!r}")


def diag_values(arch: ConvArchitecture, kernel: InnerProductKernel, X) -> np.ndarray:
    """H(x_i, x_i) per row, without forming the full Gram."""
    X = signal_matrix(X)
    d, q = arch.d, arch.q
    table = _value_table(kernel)
    if arch.is_fc:
        return np.full(X.shape[0], kernel.h_one)
    if arch.is_fc_gp:
        out = np.zeros(X.shape[0])
        Xf = X.astype(np.float32)
        for lag in range(d):
            z = (Xf * np.roll(Xf, -lag, axis=1)).sum(axis=1)
            out += _lookup(z, table, d)
        return out
    if arch.pooling.kind == "nonoverlap":
        w = arch.pooling.width
        win = (np.arange(w)[:, None] + np.arange(q)[None, :]) % w
        out = np.zeros(X.shape[0])
        Xf = X.astype(np.float32)
        for blk in range(d // w):
            Xb = Xf[:, blk * w + np.arange(w)]
            for a in range(w):
                for b in range(w):
                    z = (Xb[:, win[a]] * Xb[:, win[b]]).sum(axis=1)
                    out += _lookup(z, table, q) / w
        return out
    W = _window_index(d, q)
    Xf = X.astype(np.float32)
    out = np.zeros(X.shape[0])
    for off, starts, w in _configs(arch):
        for a in starts:
            z = (Xf[:, W[a]] * Xf[:, W[(a - off) % d]]).sum(axis=1)
            out += w * _lookup(z, table, q)
    return out

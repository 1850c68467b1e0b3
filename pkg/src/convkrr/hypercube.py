"""Signals, index sets, and window combinatorics on the cyclic hypercube {-1,+1}^d.

Everything here lives on a circle of d sites.  A signal is a point of
{-1,+1}^d; a patch is a length-q cyclic window of it; a parity function
Y_S(x) = prod_{i in S} x_i is one of the 2^d orthonormal Fourier characters
of the uniform measure.  Index sets are presented 1-based at the API surface
(matching the usual convention for positions on [d]) but stored 0-based.

The combinatorial layer enumerates the degree-ell sets that fit inside some
length-q window, grouped into translation classes.  For a set S with cyclic
diameter gamma(S) (the length of the shortest window containing it), the
number of length-q windows that contain S is r(S) = q + 1 - gamma(S); this
quantity drives all the spectral weights downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "BinarySignal",
    "IndexSet",
    "LocalSetFamily",
    "ClassRep",
    "diameter",
    "parity_eval",
    "patch",
    "shift",
    "enumerate_local_sets",
    "translation_classes",
    "canonical_window",
    "signal_matrix",
]


def _as_pm1_array(entries: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(entries, dtype=np.int8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a binary signal must be a nonempty 1-D vector")
    if not np.all(np.abs(arr) == 1):
        raise ValueError("signal coordinates must be exactly -1 or +1")
    return arr


@dataclass(frozen=True)
class BinarySignal:
    """A point of {-1,+1}^d with cyclic site indexing."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_pm1_array(self.entries)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return int(self.entries.size)

    def patch(self, k: int, q: int) -> "BinarySignal":
        """Length-q cyclic window starting at site k (1-based)."""
        return patch(self, k, q)

    def shift(self, k: int) -> "BinarySignal":
        """Cyclic shift by k sites: coordinate i of the result is x_{i+k}."""
        return shift(self, k)

    def to_string(self) -> str:
        return "".join("+" if v > 0 else "-" for v in self.entries)

    @classmethod
    def from_string(cls, s: str) -> "BinarySignal":
        table = {"+": 1, "-": -1, "−": -1}
        try:
            vals = [table[c] for c in s]
        except KeyError as exc:
            raise ValueError(f"invalid signal character {exc.args[0]!r}") from exc
        return cls(np.array(vals, dtype=np.int8))

    def to_json(self) -> str:
        return json.dumps([int(v) for v in self.entries])

    @classmethod
    def from_json(cls, text: str) -> "BinarySignal":
        return cls(np.asarray(json.loads(text), dtype=np.int8))

    def __eq__(self, other) -> bool:
        return isinstance(other, BinarySignal) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.dim, self.entries.tobytes()))


@dataclass(frozen=True)
class IndexSet:
    """A subset of circle sites, stored 0-based, presented 1-based."""

    members: tuple[int, ...]
    ambient_dim: int

    def __post_init__(self):
        d = self.ambient_dim
        if d < 1:
            raise ValueError("ambient dimension must be positive")
        mem = tuple(sorted(int(m) for m in self.members))
        if len(set(mem)) != len(mem):
            raise ValueError("index set members must be distinct")
        if mem and not (0 <= mem[0] and mem[-1] < d):
            raise ValueError(f"members {mem} outside [0, {d})")
        object.__setattr__(self, "members", mem)

    @classmethod
    def from_1based(cls, positions: Iterable[int], d: int) -> "IndexSet":
        return cls(tuple(p - 1 for p in positions), d)

    @property
    def positions(self) -> tuple[int, ...]:
        """1-based positions, ascending."""
        return tuple(m + 1 for m in self.members)

    @property
    def size(self) -> int:
        return len(self.members)

    def translate(self, k: int) -> "IndexSet":
        """Cyclic translate k + S."""
        d = self.ambient_dim
        return IndexSet(tuple((m + k) % d for m in self.members), d)

    def diameter(self) -> int:
        return diameter(self)

    def to_json(self) -> str:
        return json.dumps(list(self.positions))

    @classmethod
    def from_json(cls, text: str, d: int) -> "IndexSet":
        return cls.from_1based(json.loads(text), d)


def diameter(S: IndexSet) -> int:
    """Cyclic diameter gamma(S): length of the shortest cyclic window covering S.

    Computed as d - (largest circular gap between consecutive members) + 1.
    On sets that fit in a half circle this agrees with the pairwise form
    max_{i,j in S} min(mod(j-i,d)+1, mod(i-j,d)+1); the window form is the
    one that equals "d minus contiguous free space" and makes
    r(S) = q + 1 - gamma(S) count the length-q windows containing S.
    """
    if not S.members:
        raise ValueError("diameter undefined for empty set")
    d = S.ambient_dim
    mem = np.asarray(S.members)
    if mem.size == 1:
        return 1
    gaps = np.diff(np.concatenate([mem, [mem[0] + d]]))
    return int(d - gaps.max() + 1)


def canonical_window(S: IndexSet) -> tuple[int, tuple[int, ...]]:
    """Decompose S as (start + offsets) mod d with the offsets starting at 0.

    Returns (start, offsets) where offsets is strictly increasing, begins at
    0, and spans exactly gamma(S) sites.  `start` is 0-based.  For sets whose
    diameter exceeds d/2 the covering window may be non-unique; the smallest
    admissible start is chosen.
    """
    if not S.members:
        raise ValueError("empty set has no covering window")
    d = S.ambient_dim
    mem = np.asarray(S.members)
    if mem.size == 1:
        return int(mem[0]), (0,)
    gaps = np.diff(np.concatenate([mem, [mem[0] + d]]))
    best = int(np.argmax(gaps))
    start = int(mem[(best + 1) % mem.size])
    offsets = tuple(sorted((int(m) - start) % d for m in mem))
    return start, offsets


def parity_eval(S: IndexSet, x: BinarySignal) -> int:
    """Fourier character Y_S(x) = prod_{i in S} x_i; Y_emptyset = 1."""
    if S.ambient_dim != x.dim:
        raise ValueError(f"dimension mismatch: set on [{S.ambient_dim}], signal on [{x.dim}]")
    if not S.members:
        return 1
    return int(np.prod(x.entries[list(S.members)]))


def patch(x: BinarySignal, k: int, q: int) -> BinarySignal:
    """The window (x_k, ..., x_{k+q-1}) with cyclic wraparound, k 1-based."""
    d = x.dim
    if not (1 <= q <= d):
        raise ValueError(f"patch size q={q} must satisfy 1 <= q <= d={d}")
    start = (k - 1) % d
    idx = (start + np.arange(q)) % d
    return BinarySignal(x.entries[idx])


def shift(x: BinarySignal, k: int) -> BinarySignal:
    """Cyclic shift t_k . x = (x_{k+1}, ..., x_d, x_1, ..., x_k)."""
    return BinarySignal(np.roll(x.entries, -k))


def signal_matrix(signals: Sequence[BinarySignal] | np.ndarray) -> np.ndarray:
    """Stack signals into an (n, d) int8 matrix, validating entries."""
    if isinstance(signals, np.ndarray):
        arr = np.asarray(signals, dtype=np.int8)
        if arr.ndim == 1:
            arr = arr[None, :]
        if not np.all(np.abs(arr) == 1):
            raise ValueError("signal coordinates must be exactly -1 or +1")
        return arr
    return np.stack([s.entries for s in signals]).astype(np.int8)


@dataclass(frozen=True)
class ClassRep:
    """A translation-class representative: offsets within a window, first at 0."""

    offsets: tuple[int, ...]
    degree: int
    gamma: int  # cyclic diameter; equals 1 + max(offsets)
    r: int      # q + 1 - gamma: number of length-q windows containing the set

    def member(self, start: int, d: int) -> IndexSet:
        """The translate of this class starting at 0-based site `start`."""
        return IndexSet(tuple((start + o) % d for o in self.offsets), d)


def translation_classes(q: int, ell: int) -> list[ClassRep]:
    """Representatives of degree-ell translation classes inside a q-window.

    A class is identified by its offset pattern {0, o_2, ..., o_ell} with
    0 < o_2 < ... < o_ell <= q-1.  There are C(q-1, ell-1) of them; the one
    with largest offset h-1 has diameter h and is contained in r = q+1-h
    windows of length q.
    """
    if not (1 <= ell <= q):
        raise ValueError(f"need 1 <= ell <= q, got ell={ell}, q={q}")
    reps = []
    for rest in _sorted_combinations(range(1, q), ell - 1):
        offsets = (0,) + rest
        gamma = 1 + (offsets[-1] if len(offsets) > 1 else 0)
        reps.append(ClassRep(offsets=offsets, degree=ell, gamma=gamma, r=q + 1 - gamma))
    assert len(reps) == math.comb(q - 1, ell - 1)
    return reps


def _sorted_combinations(pool: range, k: int) -> Iterator[tuple[int, ...]]:
    from itertools import combinations

    return combinations(pool, k)


@dataclass(frozen=True)
class LocalSetFamily:
    """All degree-ell sets with cyclic diameter <= q, with their class structure.

    `classes` lists the C(q-1, ell-1) translation-class representatives; the
    family itself has d * C(q-1, ell-1) members (each class has d distinct
    cyclic translates when q <= d/2).
    """

    d: int
    q: int
    degree: int
    classes: tuple[ClassRep, ...]
    _members: tuple[tuple[IndexSet, int, int], ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self._members)

    def __iter__(self) -> Iterator[tuple[IndexSet, int, int]]:
        """Yields (set, gamma(set), class index)."""
        return iter(self._members)

    def sets(self) -> list[IndexSet]:
        return [m[0] for m in self._members]

    def class_of(self, S: IndexSet) -> tuple[int, int]:
        """Return (class index, translate start) for a member set.

        Raises ValueError when S is not in the family (diameter > q or wrong
        degree).
        """
        if S.size != self.degree:
            raise ValueError(f"set has degree {S.size}, family holds degree {self.degree}")
        start, offsets = canonical_window(S)
        key = tuple(offsets)
        try:
            return self._class_lookup()[key], start
        except KeyError:
            raise ValueError(f"set {S.positions} has diameter > q={self.q}") from None

    def _class_lookup(self) -> dict:
        cache = getattr(self, "_lookup_cache", None)
        if cache is None:
            cache = {rep.offsets: i for i, rep in enumerate(self.classes)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache


def enumerate_local_sets(d: int, q: int, ell: int) -> LocalSetFamily:
    """Enumerate all S with |S| = ell and gamma(S) <= q, tagged by class.

    Requires q <= d/2 so that distinct translates of distinct class
    representatives never collide and the counting identities
    |family| = d * C(q-1, ell-1) hold exactly.
    """
    if 2 * q > d:
        raise ValueError(
            f"patch overlap regime unsupported: need q <= d/2, got q={q}, d={d}"
        )
    if not (1 <= ell <= q):
        raise ValueError(f"need 1 <= ell <= q, got ell={ell}")
    classes = tuple(translation_classes(q, ell))
    members = []
    for ci, rep in enumerate(classes):
        for k in range(d):
            members.append((rep.member(k, d), rep.gamma, ci))
    fam = LocalSetFamily(d=d, q=q, degree=ell, classes=classes, _members=tuple(members))
    assert fam.size == d * math.comb(q - 1, ell - 1)
    return fam

"""Architecture descriptors selecting a convolutional kernel family.

A ConvArchitecture is the tuple (d, q, pooling, downsample) that picks one of
the kernel families built from patch comparisons of length-q windows:

    none,     delta=1 : (1/d) sum_k h(<x_(k), y_(k)>/q)
    average w, delta   : (delta/(d w)) sum_{k in [d/delta]} sum_{s,s' in [w]}
                          h(<x_(k delta+s), y_(k delta+s')>/q)
    global             : (1/d) sum_{k,k'} h(<x_(k), y_(k')>/q)
    weighted tau       : (1/d) sum_{k,s,s'} tau(dist(s)) tau(dist(s')) h(...)
    nonoverlap w       : sum over d/w disjoint length-w segments of the
                          global-pooling kernel restricted to the segment

with q = d and no pooling reducing to the plain inner-product kernel
h(<x,y>/d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Pooling", "ConvArchitecture"]


@dataclass(frozen=True)
class Pooling:
    """Pooling selector: none | average(width) | global | weighted(filter) | nonoverlap(width)."""

    kind: str
    width: int = 1
    filter_row: tuple[float, ...] | None = None  # weighted: value tau(dist(s)) at shift s in [d]

    KINDS = ("none", "average", "global", "weighted", "nonoverlap")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown pooling kind {self.kind!r}")
        if self.width < 1:
            raise ValueError("pooling width must be >= 1")
        if self.kind == "weighted" and self.filter_row is None:
            raise ValueError("weighted pooling needs a filter row")

    @staticmethod
    def none() -> "Pooling":
        return Pooling("none", 1)

    @staticmethod
    def average(width: int) -> "Pooling":
        return Pooling("average", width)

    @staticmethod
    def global_() -> "Pooling":
        return Pooling("global", 1)

    @staticmethod
    def weighted(filter_row) -> "Pooling":
        row = tuple(float(v) for v in filter_row)
        return Pooling("weighted", len(row), filter_row=row)

    @staticmethod
    def nonoverlap(width: int) -> "Pooling":
        return Pooling("nonoverlap", width)


@dataclass(frozen=True)
class ConvArchitecture:
    d: int
    q: int
    pooling: Pooling = field(default_factory=Pooling.none)
    downsample: int = 1

    def __post_init__(self):
        d, q = self.d, self.q
        if d < 1 or not (1 <= q <= d):
            raise ValueError(f"need 1 <= q <= d, got q={q}, d={d}")
        if self.downsample < 1 or d % self.downsample != 0:
            raise ValueError(f"downsampling factor {self.downsample} must divide d={d}")
        p = self.pooling
        if p.kind == "average":
            if not (1 <= p.width <= d):
                raise ValueError(f"pooling width {p.width} must lie in [1, d={d}]")
            if p.width == d:
                # width-d average pooling IS global pooling
                object.__setattr__(self, "pooling", Pooling("global", 1))
            elif p.width == 1:
                object.__setattr__(self, "pooling", Pooling.none())
        elif p.kind == "weighted":
            if len(p.filter_row) != d:
                raise ValueError(f"weighted filter row must have length d={d}")
            if self.downsample != 1:
                raise ValueError("weighted pooling with downsampling is not supported")
        elif p.kind == "nonoverlap":
            w = p.width
            if d % w != 0:
                raise ValueError(f"nonoverlap segment width {w} must divide d={d}")
            if 2 * q > w:
                raise ValueError(f"nonoverlap pooling needs q <= width/2, got q={q}, width={w}")
            if self.downsample != 1:
                raise ValueError("nonoverlap pooling with downsampling is not supported")

    # -- derived quantities --------------------------------------------------

    @property
    def omega(self) -> int:
        """Effective averaging width: 1 for none, d for global."""
        if self.pooling.kind == "global":
            return self.d
        if self.pooling.kind in ("average", "nonoverlap"):
            return self.pooling.width
        return 1

    @property
    def is_fc(self) -> bool:
        """Plain inner-product kernel: full-size patch, no pooling."""
        return self.q == self.d and self.pooling.kind == "none"

    @property
    def is_fc_gp(self) -> bool:
        return self.q == self.d and self.pooling.kind == "global"

    def constant_weight(self) -> float:
        """Eigenvalue multiplier of the constant function relative to xi_0.

        The constant parity enters every patch comparison, so its eigenvalue
        is xi_0 times the total comparison weight: 1 for no pooling, omega
        for average pooling (any downsampling), d for global pooling, d for
        nonoverlap pooling ((d/w) segments times w each), and the squared
        filter sum for weighted pooling.
        """
        k = self.pooling.kind
        if k == "none":
            return 1.0
        if k == "average":
            return float(self.pooling.width)
        if k == "global":
            return float(self.d)
        if k == "nonoverlap":
            return float(self.d)
        row = np.asarray(self.pooling.filter_row)
        return float(row.sum() ** 2)

    def label(self) -> str:
        p = self.pooling
        if self.is_fc:
            return f"fc(d={self.d})"
        if self.is_fc_gp:
            return f"fc-gp(d={self.d})"
        base = f"d={self.d},q={self.q}"
        if p.kind == "none":
            s = f"ck({base})"
        elif p.kind == "average":
            s = f"ck-lp({base},w={p.width})"
        elif p.kind == "global":
            s = f"ck-gp({base})"
        elif p.kind == "nonoverlap":
            s = f"ck-no({base},w={p.width})"
        else:
            s = f"ck-wp({base})"
        if self.downsample > 1:
            s += f",ds={self.downsample}"
        return s

    def to_dict(self) -> dict:
        out = {"d": self.d, "q": self.q, "pooling": self.pooling.kind, "downsample": self.downsample}
        if self.pooling.kind in ("average", "nonoverlap"):
            out["width"] = self.pooling.width
        if self.pooling.kind == "weighted":
            out["filter_row"] = list(self.pooling.filter_row)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConvArchitecture":
        kind = data.get("pooling", "none")
        if kind == "none":
            pooling = Pooling.none()
        elif kind == "average":
            pooling = Pooling.average(int(data["width"]))
        elif kind == "global":
            pooling = Pooling.global_()
        elif kind == "weighted":
            pooling = Pooling.weighted(data["filter_row"])
        elif kind == "nonoverlap":
            pooling = Pooling.nonoverlap(int(data["width"]))
        else:
            raise ValueError(f"unknown pooling kind {kind!r}")
        return cls(d=int(data["d"]), q=int(data["q"]), pooling=pooling, downsample=int(data.get("downsample", 1)))

    # -- convenience constructors for the named families ----------------------

    @classmethod
    def fc(cls, d: int) -> "ConvArchitecture":
        return cls(d=d, q=d)

    @classmethod
    def fc_gp(cls, d: int) -> "ConvArchitecture":
        return cls(d=d, q=d, pooling=Pooling.global_())

    @classmethod
    def ck(cls, d: int, q: int, downsample: int = 1) -> "ConvArchitecture":
        return cls(d=d, q=q, downsample=downsample)

    @classmethod
    def ck_ap(cls, d: int, q: int, width: int, downsample: int = 1) -> "ConvArchitecture":
        return cls(d=d, q=q, pooling=Pooling.average(width), downsample=downsample)

    @classmethod
    def ck_gp(cls, d: int, q: int) -> "ConvArchitecture":
        return cls(d=d, q=q, pooling=Pooling.global_())

    @classmethod
    def ck_no(cls, d: int, q: int, width: int) -> "ConvArchitecture":
        return cls(d=d, q=q, pooling=Pooling.nonoverlap(width))

    def spectrum_supported(self) -> bool:
        """True when the closed-form eigendecomposition applies."""
        if self.is_fc:
            return True
        return 2 * self.q <= self.d

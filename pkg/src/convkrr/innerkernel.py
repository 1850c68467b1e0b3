"""Scalar inner-product kernels on {-1,+1}^q and their Gegenbauer spectra.

An inner-product kernel h(<u,v>/q) on the q-dimensional hypercube is fully
described by its values on the q+1 admissible inner products
m in {-q, -q+2, ..., q}.  Its eigendecomposition is carried by the hypercubic
Gegenbauer polynomials

    Q_ell(m) = (1 / C(q,ell)) * sum_{|S|=ell} Y_S(u) Y_S(v),   m = <u,v>,

which satisfy Q_0 = 1, Q_1(m) = m/q and the three-term recurrence

    (m/q) Q_ell(m) = (ell/q) Q_{ell-1}(m) + ((q-ell)/q) Q_{ell+1}(m),

with Q_{-1} = Q_{q+1} = 0.  The coefficient

    xi_ell = E_u[ h(<u,e>/q) Q_ell(<u,e>) ]

is the eigenvalue of the kernel operator on degree-ell parities; since
<u,e> follows the shifted binomial law (q - 2 Bin(q, 1/2)), the expectation
is an exact (q+1)-point sum.  All coefficient extraction here uses that
quadrature; nothing ever enumerates 2^q points.

The tangent kernel of a one-hidden-layer model with activation sigma is the
sum of two inner-product kernels: from sigma itself (coefficients chi_ell^2)
and from sigma' damped by <u,v>/q.  The damping acts on squared coefficients
through the same three-term recurrence:

    zeta_ell^2 = (ell/q) kap_{ell-1}^2 + ((q-ell)/q) kap_{ell+1}^2,

where kap_ell are the coefficients of sigma'.  The resulting kernel has
xi_ell = chi_ell^2 + zeta_ell^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "admissible_inner_products",
    "binomial_weights",
    "gegenbauer_eval",
    "gegenbauer_table",
    "InnerProductKernel",
    "gegenbauer_coeffs",
    "tail_mass",
    "Activation",
    "ACTIVATIONS",
    "ActivationNTK",
    "activation_ntk",
    "ntk_from_activation",
]

PSD_HARD_LIMIT = 1e-9       # below -1e-9 the kernel is treated as genuinely indefinite
RECONSTRUCTION_TOL = 1e-10


def admissible_inner_products(q: int) -> np.ndarray:
    """The q+1 possible values of <u,v> on {-1,+1}^q, ascending."""
    return np.arange(-q, q + 1, 2, dtype=np.int64)


def binomial_weights(q: int) -> np.ndarray:
    """P[<u,e> = m] for m ascending over the admissible values.

    <u,e> = q - 2k with k ~ Bin(q, 1/2), so the weight at m = -q + 2j is
    C(q, j) / 2^q.
    """
    return np.array([math.comb(q, j) for j in range(q + 1)], dtype=float) / 2.0**q


def _check_admissible(q: int, m: int) -> None:
    if abs(m) > q or (m - q) % 2 != 0:
        raise ValueError(f"inner product m={m} not admissible for q={q} (parity/range)")


def gegenbauer_table(q: int, lmax: int | None = None) -> np.ndarray:
    """Matrix Q[ell, j] = Q_ell(m_j) over ascending admissible m, ell <= lmax.

    Built by the upward recurrence; all values lie in [-1, 1] so the
    recursion is numerically benign.
    """
    if lmax is None:
        lmax = q
    if not (0 <= lmax <= q):
        raise ValueError(f"need 0 <= lmax <= q, got lmax={lmax}")
    m = admissible_inner_products(q).astype(float)
    table = np.zeros((lmax + 1, q + 1))
    table[0] = 1.0
    if lmax >= 1:
        table[1] = m / q
    for ell in range(1, lmax):
        table[ell + 1] = (m * table[ell] - ell * table[ell - 1]) / (q - ell)
    return table


def gegenbauer_eval(q: int, ell: int, m: int) -> float:
    """Q_ell(m) on the q-hypercube for an admissible integer inner product m."""
    if not (0 <= ell <= q):
        raise ValueError(f"need 0 <= ell <= q, got ell={ell}, q={q}")
    _check_admissible(q, m)
    j = (m + q) // 2
    return float(gegenbauer_table(q, ell)[ell, j])


def _clamp_psd(xi: np.ndarray, context: str) -> np.ndarray:
    """Zero out tiny negative coefficients; reject genuinely negative ones."""
    xi = np.asarray(xi, dtype=float).copy()
    worst = xi.min() if xi.size else 0.0
    if worst < -PSD_HARD_LIMIT:
        raise ValueError(
            f"kernel not positive semidefinite: coefficient {worst:.3e} < -{PSD_HARD_LIMIT:.0e}"
            f" ({context})"
        )
    mask = (xi < 0) & (xi >= -PSD_HARD_LIMIT)
    if mask.any():
        warnings.warn(
            f"clamped {int(mask.sum())} slightly negative coefficient(s) to 0 ({context})",
            stacklevel=3,
        )
        xi[mask] = 0.0
    return xi


@dataclass(frozen=True)
class InnerProductKernel:
    """An inner-product kernel on {-1,+1}^q in canonical tabulated form.

    `values[j]` is h(m_j / q) at the ascending admissible inner products m_j;
    `xi[ell]` is the degree-ell Gegenbauer coefficient.  The two views agree
    through the exact reconstruction

        h(m/q) = sum_ell xi_ell C(q,ell) Q_ell(m),

    which is validated at construction for exact sources (the Monte-Carlo
    path is allowed its sampling noise).
    """

    q: int
    xi: np.ndarray
    values: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if xi.shape != (self.q + 1,) or values.shape != (self.q + 1,):
            raise ValueError("xi and values must both have length q+1")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(values))):
            raise ValueError("kernel coefficients/values must be finite")
        if not self.source.get("noisy", False):
            xi = _clamp_psd(xi, context=f"q={self.q}")
        xi.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", values)
        if not self.source.get("noisy", False):
            degrees = np.array([math.comb(self.q, l) for l in range(self.q + 1)], dtype=float)
            recon = (self.xi * degrees) @ gegenbauer_table(self.q)
            err = np.abs(recon - self.values).max()
            if err > RECONSTRUCTION_TOL:
                raise ValueError(
                    f"Gegenbauer reconstruction off by {err:.3e} > {RECONSTRUCTION_TOL:.0e}"
                )
            mass = float(self.xi @ degrees)
            if abs(mass - self.h_one) > 1e-10 * max(1.0, abs(self.h_one)):
                raise ValueError("coefficient mass does not reproduce h(1)")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_values(cls, values: Sequence[float], q: int, source: dict | None = None) -> "InnerProductKernel":
        values = np.asarray(values, dtype=float)
        if values.shape != (q + 1,):
            raise ValueError(f"need {q + 1} values on the admissible inner products")
        w = binomial_weights(q)
        xi = gegenbauer_table(q) @ (w * values)
        return cls(q=q, xi=xi, values=values, source=source or {"kind": "table"})

    @classmethod
    def from_callable(cls, h: Callable[[float], float], q: int, source: dict | None = None) -> "InnerProductKernel":
        m = admissible_inner_products(q)
        values = np.array([h(v / q) for v in m], dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel function produced non-finite values")
        return cls.from_values(values, q, source or {"kind": "callable"})

    @classmethod
    def from_polynomial(cls, coeffs: Sequence[float], q: int) -> "InnerProductKernel":
        """Kernel h(t) = sum_i coeffs[i] * t^i."""
        coeffs = list(map(float, coeffs))
        m = admissible_inner_products(q) / q
        values = np.polyval(coeffs[::-1], m)
        return cls.from_values(values, q, {"kind": "poly", "coeffs": coeffs})

    @classmethod
    def from_descriptor(cls, desc: dict, q: int, seed: int | None = None) -> "InnerProductKernel":
        """Build from the JSON descriptor format.

        {"kind":"poly","coeffs":[...]} | {"kind":"table","values":[...]} |
        {"kind":"ntk","activation":"relu|identity|tanh|poly","params":[...]}
        """
        kind = desc.get("kind")
        if kind == "poly":
            return cls.from_polynomial(desc["coeffs"], q)
        if kind == "table":
            return cls.from_values(desc["values"], q, dict(desc))
        if kind == "ntk":
            act = make_activation(desc["activation"], desc.get("params"))
            return ntk_from_activation(act, q, quadrature=desc.get("quadrature", "exact"), seed=seed)
        raise ValueError(f"unknown kernel descriptor kind {kind!r}")

    # -- views --------------------------------------------------------------

    @property
    def h_one(self) -> float:
        """h(1), the diagonal value."""
        return float(self.values[-1])

    def value_at(self, m: int) -> float:
        _check_admissible(self.q, m)
        return float(self.values[(m + self.q) // 2])

    def reconstruct(self, m: int) -> float:
        """Evaluate h(m/q) from the coefficient side of the decomposition."""
        _check_admissible(self.q, m)
        j = (m + self.q) // 2
        degrees = np.array([math.comb(self.q, l) for l in range(self.q + 1)])
        return float((self.xi * degrees) @ gegenbauer_table(self.q)[:, j])

    def degree_masses(self) -> np.ndarray:
        """xi_ell * C(q, ell) for each ell; sums to h(1)."""
        degrees = np.array([math.comb(self.q, l) for l in range(self.q + 1)], dtype=float)
        return self.xi * degrees

    def tail_mass(self, s: int) -> float:
        return tail_mass(self, s)

    def descriptor(self) -> dict:
        return dict(self.source) if self.source else {"kind": "table", "values": list(self.values)}


def gegenbauer_coeffs(h, q: int) -> InnerProductKernel:
    """Extract the Gegenbauer coefficient vector of a scalar kernel.

    `h` may be a callable t -> h(t), a polynomial coefficient sequence, a
    length-(q+1) value table, or a JSON descriptor dict.
    """
    if isinstance(h, InnerProductKernel):
        if h.q != q:
            raise ValueError(f"kernel is on q={h.q}, requested q={q}")
        return h
    if isinstance(h, dict):
        return InnerProductKernel.from_descriptor(h, q)
    if callable(h):
        return InnerProductKernel.from_callable(h, q)
    arr = np.asarray(h, dtype=float)
    if arr.shape == (q + 1,):
        return InnerProductKernel.from_values(arr, q)
    raise TypeError("unsupported kernel description")


def tail_mass(kernel: InnerProductKernel, s: int) -> float:
    """h_{q,>s}(1) = sum_{ell > s} xi_ell C(q, ell): the mass above degree s."""
    if not (0 <= s <= kernel.q):
        raise ValueError(f"need 0 <= s <= q, got s={s}")
    masses = kernel.degree_masses()
    return float(masses[s + 1 :].sum())


# -- tangent kernels from activations ---------------------------------------


@dataclass(frozen=True)
class Activation:
    """An activation with its derivative, for tangent-kernel construction."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    params: tuple = ()


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    # subgradient at 0 taken as 0; only reachable for even q
    return (x > 0).astype(float)


def _poly_activation(coeffs: Sequence[float]) -> Activation:
    c = np.asarray(coeffs, dtype=float)
    dc = c[1:] * np.arange(1, len(c))

    def f(x):
        return np.polyval(c[::-1], x)

    def df(x):
        return np.polyval(dc[::-1], x) if dc.size else np.zeros_like(np.asarray(x, dtype=float))

    return Activation("poly", f, df, params=tuple(float(v) for v in c))


ACTIVATIONS = {
    "relu": Activation("relu", _relu, _relu_grad),
    "identity": Activation("identity", lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float))),
    "tanh": Activation("tanh", np.tanh, lambda x: 1.0 / np.cosh(x) ** 2),
}


def make_activation(name: str, params: Sequence[float] | None = None) -> Activation:
    if name == "poly":
        if not params:
            raise ValueError("poly activation needs coefficient params")
        return _poly_activation(params)
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}") from None


@dataclass(frozen=True)
class ActivationNTK:
    """Tangent-kernel decomposition of an activation on the q-hypercube.

    chi[ell], kap[ell] are the Gegenbauer coefficients of sigma(./sqrt(q))
    and sigma'(./sqrt(q)); zeta_sq[ell] is the recurrence image of kap^2 and
    the kernel coefficients are xi = chi^2 + zeta_sq.
    """

    activation: Activation
    q: int
    chi: np.ndarray
    kap: np.ndarray
    zeta_sq: np.ndarray
    kernel: InnerProductKernel


def _zeta_from_kap(kap: np.ndarray, q: int) -> np.ndarray:
    kap_sq = kap**2
    zeta = np.zeros(q + 1)
    for ell in range(q + 1):
        lo = kap_sq[ell - 1] if ell - 1 >= 0 else 0.0
        hi = kap_sq[ell + 1] if ell + 1 <= q else 0.0
        zeta[ell] = (ell / q) * lo + ((q - ell) / q) * hi
    return zeta


def activation_ntk(activation: Activation | str, q: int) -> ActivationNTK:
    """Exact tangent-kernel coefficients via binomial quadrature.

    Both sigma and sigma' are projected onto the Gegenbauer basis with the
    (q+1)-point quadrature; the <u,v>/q damping of the derivative term turns
    kap^2 into zeta^2 by the three-term recurrence, so no pairwise or weight
    enumeration is ever needed.
    """
    if isinstance(activation, str):
        activation = make_activation(activation)
    m = admissible_inner_products(q).astype(float)
    sig = np.asarray(activation.f(m / math.sqrt(q)), dtype=float)
    dsig = np.asarray(activation.df(m / math.sqrt(q)), dtype=float)
    if not (np.all(np.isfinite(sig)) and np.all(np.isfinite(dsig))):
        raise ValueError("activation produced non-finite values on the quadrature nodes")
    w = binomial_weights(q)
    table = gegenbauer_table(q)
    chi = table @ (w * sig)
    kap = table @ (w * dsig)
    zeta_sq = _zeta_from_kap(kap, q)
    xi = chi**2 + zeta_sq
    degrees = np.array([math.comb(q, l) for l in range(q + 1)], dtype=float)
    values = (xi * degrees) @ table
    kernel = InnerProductKernel(
        q=q,
        xi=xi,
        values=values,
        source={"kind": "ntk", "activation": activation.name, "params": list(activation.params)},
    )
    return ActivationNTK(activation=activation, q=q, chi=chi, kap=kap, zeta_sq=zeta_sq, kernel=kernel)


def ntk_from_activation(
    activation: Activation | str,
    q: int,
    quadrature: str = "exact",
    mc_samples: int = 1_000_000,
    seed: int | None = None,
) -> InnerProductKernel:
    """Tangent kernel of a one-hidden-layer model with the given activation.

    quadrature="exact" uses the binomial-law projection (preferred, exact);
    "monte-carlo" estimates the defining expectations

        h(<u,v>/q) = E_w[sigma(<u,w>/sqrt q) sigma(<v,w>/sqrt q)]
                   + E_w[sigma'(<u,w>/sqrt q) sigma'(<v,w>/sqrt q)] <u,v>/q

    with mc_samples hypercube draws of w per admissible inner product
    (independent batches per node, deterministic given `seed`).  The MC
    kernel carries `source["stderr"]` with per-value standard errors.
    """
    if isinstance(activation, str):
        activation = make_activation(activation)
    if quadrature == "exact":
        return activation_ntk(activation, q).kernel
    if quadrature != "monte-carlo":
        raise ValueError(f"unknown quadrature {quadrature!r}")

    rng = np.random.default_rng(seed)
    ms = admissible_inner_products(q)
    values = np.zeros(q + 1)
    stderr = np.zeros(q + 1)
    u = np.ones(q)
    for j, m in enumerate(ms):
        k = (q - m) // 2
        v = np.ones(q)
        v[:k] = -1.0
        w = rng.integers(0, 2, size=(mc_samples, q)).astype(np.float64) * 2.0 - 1.0
        su = (w @ u) / math.sqrt(q)
        sv = (w @ v) / math.sqrt(q)
        samples = activation.f(su) * activation.f(sv) + activation.df(su) * activation.df(sv) * (m / q)
        if not np.all(np.isfinite(samples)):
            raise ValueError("activation produced non-finite Monte-Carlo samples")
        values[j] = samples.mean()
        stderr[j] = samples.std(ddof=1) / math.sqrt(mc_samples)
    w_binom = binomial_weights(q)
    table = gegenbauer_table(q)
    xi = table @ (w_binom * values)
    xi_stderr = np.sqrt((table**2) @ ((w_binom * stderr) ** 2))
    return InnerProductKernel(
        q=q,
        xi=xi,
        values=values,
        source={
            "kind": "ntk",
            "activation": activation.name,
            "params": list(activation.params),
            "quadrature": "monte-carlo",
            "noisy": True,
            "stderr": stderr.tolist(),
            "xi_stderr": xi_stderr.tolist(),
        },
    )

"""Constructors for the single-mode state families and passive linear optics."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .fock_core import (
    NORM_TOL,
    DensityMatrix,
    PureState,
    TruncatedBasis,
    annihilation,
    as_density,
    suggest_dim,
)

SEP_TOL = 1e-6
MIN_ODD_CAT = 1e-3

KINDS = ("fock", "coherent", "sqvac", "cat", "fsup")


class SpecError(ValueError):
    """A state specification could not be parsed or is out of range."""


class DegenerateSuperpositionError(ValueError):
    pass


def parse_complex(token: str) -> complex:
    try:
        return complex(token.strip().replace("i", "j").replace(" ", ""))
    except ValueError:
        raise SpecError(f"cannot parse complex number {token!r}") from None


@dataclass(frozen=True)
class StateSpec:
    """One member of a named pure-state family.

    ``kind`` is one of ``fock(n)``, ``coherent(alpha)``, ``sqvac(r, phi)``,
    ``cat(alpha, parity)`` and ``fsup(n)`` for ``(|0> + |n>)/sqrt 2``.
    """

    kind: str
    n: int = 0
    alpha: complex = 0j
    r: float = 0.0
    phi: float = 0.0
    parity: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown state family {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("fock", "fsup") and (int(self.n) != self.n or self.n < 0):
            raise SpecError(f"photon number must be a non-negative integer, got {self.n}")
        if self.kind == "fsup" and self.n < 1:
            raise SpecError("fsup needs n >= 1")
        if self.kind == "sqvac" and not (self.r >= 0 and 0 <= self.phi < 2 * math.pi):
            raise SpecError(f"sqvac needs r >= 0 and 0 <= phi < 2 pi, got r={self.r}, phi={self.phi}")
        if self.kind == "cat":
            if self.parity not in (1, -1):
                raise SpecError(f"cat parity must be +1 or -1, got {self.parity}")
            if self.parity == -1 and abs(self.alpha) < MIN_ODD_CAT:
                raise SpecError(f"odd cat needs |alpha| >= {MIN_ODD_CAT}, got {abs(self.alpha)}")

    @classmethod
    def parse(cls, text: str) -> "StateSpec":
        """Parse ``fock:3``, ``coherent:1+0.5i``, ``sqvac:0.5:0``, ``cat:+:1.0``, ``fsup:3``."""
        parts = [p.strip() for p in text.strip().split(":")]
        kind, args = parts[0].lower(), parts[1:]
        arity = {"fock": 1, "coherent": 1, "sqvac": (1, 2), "cat": 2, "fsup": 1}
        if kind not in arity:
            raise SpecError(f"unknown state family {parts[0]!r} in {text!r}")
        want = arity[kind]
        if len(args) not in (want if isinstance(want, tuple) else (want,)):
            raise SpecError(f"wrong number of parameters in {text!r}")
        try:
            if kind in ("fock", "fsup"):
                if not re.fullmatch(r"\d+", args[0]):
                    raise SpecError(f"bad photon number {args[0]!r} in {text!r}")
                return cls(kind, n=int(args[0]))
            if kind == "coherent":
                return cls(kind, alpha=parse_complex(args[0]))
            if kind == "sqvac":
                return cls(kind, r=float(args[0]), phi=float(args[1]) if len(args) > 1 else 0.0)
            sign = {"+": 1, "-": -1, "even": 1, "odd": -1}.get(args[0])
            if sign is None:
                raise SpecError(f"bad cat parity {args[0]!r} in {text!r}")
            return cls(kind, alpha=parse_complex(args[1]), parity=sign)
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"bad parameter in {text!r}: {exc}") from None

    def label(self) -> str:
        if self.kind in ("fock", "fsup"):
            return f"{self.kind}:{self.n}"
        if self.kind == "coherent":
            return f"coherent:{_fmt_complex(self.alpha)}"
        if self.kind == "sqvac":
            return f"sqvac:{self.r:g}:{self.phi:g}"
        return f"cat:{'+' if self.parity > 0 else '-'}:{_fmt_complex(self.alpha)}"

    def suggested_dim(self) -> int:
        if self.kind == "fock":
            return suggest_dim(n=self.n)
        if self.kind == "fsup":
            return suggest_dim(n=self.n)
        if self.kind == "sqvac":
            return suggest_dim(r=self.r)
        return suggest_dim(alpha=self.alpha)


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """``e^{-|a|^2/2} a^n / sqrt(n!)`` for ``n < dim`` (not renormalized)."""
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def squeezed_vacuum_amplitudes(r: float, phi: float, dim: int) -> np.ndarray:
    """Even-only recursion ``c_2n = eta sqrt(2n-1)/sqrt(2n) c_{2n-2}``, ``eta = e^{i phi} tanh r``."""
    eta = np.exp(1j * phi) * math.tanh(r)
    c = np.zeros(dim, dtype=complex)
    c[0] = 1 / math.sqrt(math.cosh(r))
    for m in range(2, dim, 2):
        c[m] = eta * math.sqrt(m - 1) / math.sqrt(m) * c[m - 2]
    return c


def cat_norm(alpha: complex, parity: int) -> float:
    """``N_+- = 2 +- 2 exp(-2|alpha|^2)``."""
    return 2 + 2 * parity * math.exp(-2 * abs(alpha) ** 2)


def prepare_pure(spec: StateSpec | str, basis: TruncatedBasis | int | None = None) -> PureState:
    if isinstance(spec, str):
        spec = StateSpec.parse(spec)
    dim = spec.suggested_dim() if basis is None else (basis.dim if isinstance(basis, TruncatedBasis) else int(basis))
    TruncatedBasis(dim)
    if spec.kind == "fock":
        if spec.n >= dim:
            raise _too_small(spec, dim)
        c = np.zeros(dim, dtype=complex)
        c[spec.n] = 1
    elif spec.kind == "fsup":
        if spec.n >= dim:
            raise _too_small(spec, dim)
        c = np.zeros(dim, dtype=complex)
        c[0] = c[spec.n] = 1 / math.sqrt(2)
    elif spec.kind == "coherent":
        c = coherent_amplitudes(spec.alpha, dim)
    elif spec.kind == "sqvac":
        c = squeezed_vacuum_amplitudes(spec.r, spec.phi, dim)
    else:
        n = np.arange(dim)
        c = coherent_amplitudes(spec.alpha, dim) * (1 + spec.parity * (-1.0) ** n)
        c /= math.sqrt(cat_norm(spec.alpha, spec.parity))
    # truncation leaves a norm deficit of the order of the tail mass
    return PureState(c / np.linalg.norm(c))


def _too_small(spec: StateSpec, dim: int):
    from .fock_core import TruncationError

    need = spec.suggested_dim()
    return TruncationError(f"{spec.label()} does not fit in dim {dim}; use dim >= {need}", need)


@dataclass(frozen=True, eq=False)
class CoherentSuperposition:
    """``sum_j c_j |alpha_j>`` with non-orthogonal coherent components."""

    coefficients: np.ndarray
    centers: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        a = np.atleast_1d(np.asarray(self.centers, dtype=complex))
        if c.ndim != 1 or c.shape != a.shape or c.size < 1:
            raise ValueError("coefficients and centers must be equal-length non-empty lists")
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "centers", a)
        d = np.abs(a[:, None] - a[None, :]) + np.eye(a.size)
        if np.any(d < SEP_TOL):
            j, k = np.argwhere(d < SEP_TOL)[0]
            raise DegenerateSuperpositionError(
                f"centers {j} and {k} are closer than {SEP_TOL}; merge them into one component"
            )

    @property
    def size(self) -> int:
        return self.coefficients.size

    @property
    def overlaps(self) -> np.ndarray:
        """``f[j, k] = <alpha_k | alpha_j>``."""
        a = self.centers
        mod = np.abs(a) ** 2
        return np.exp(-(mod[:, None] + mod[None, :]) / 2 + a[:, None] * a[None, :].conj())

    @property
    def distances(self) -> np.ndarray:
        """``d[j, k] = alpha_j - alpha_k``."""
        return self.centers[:, None] - self.centers[None, :]

    def norm_squared(self) -> float:
        c = self.coefficients
        return float(np.real(np.einsum("j,k,jk->", c, c.conj(), self.overlaps)))

    def normalized(self) -> "CoherentSuperposition":
        ns = self.norm_squared()
        if ns < 1e-12 * max(1.0, float(np.sum(np.abs(self.coefficients) ** 2))):
            raise DegenerateSuperpositionError(f"superposition norm^2 {ns:.3e} is numerically zero")
        return CoherentSuperposition(self.coefficients / math.sqrt(ns), self.centers)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1) <= tol

    def suggested_dim(self) -> int:
        return max(suggest_dim(alpha=a) for a in self.centers)

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "CoherentSuperposition":
        """Build from ``[{"c": .., "alpha": ..}, ...]``; values may be numbers, ``[re, im]`` or strings."""
        cs, al = [], []
        for item in pairs:
            cs.append(_to_complex(item["c"]))
            al.append(_to_complex(item["alpha"]))
        return cls(np.array(cs), np.array(al)).normalized()

    def to_pairs(self) -> list[dict]:
        return [
            {"c": [c.real + 0.0, c.imag + 0.0], "alpha": [a.real + 0.0, a.imag + 0.0]}
            for c, a in zip(self.coefficients.tolist(), self.centers.tolist())
        ]


def _to_complex(value) -> complex:
    if isinstance(value, str):
        return parse_complex(value)
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def prepare_superposition(sup: CoherentSuperposition, basis: TruncatedBasis | int | None = None) -> PureState:
    dim = sup.suggested_dim() if basis is None else (basis.dim if isinstance(basis, TruncatedBasis) else int(basis))
    vec = sum(c * coherent_amplitudes(a, dim) for c, a in zip(sup.coefficients, sup.centers))
    norm = np.linalg.norm(vec)
    if norm < 1e-8:
        raise DegenerateSuperpositionError(f"superposition vector norm {norm:.3e} is numerically zero")
    return PureState(vec / norm)


def mix(components: Sequence[tuple[float, PureState | DensityMatrix]]) -> DensityMatrix:
    """Convex combination ``sum_i w_i rho_i``; weights must be positive and sum to one."""
    if not components:
        raise ValueError("mix needs at least one component")
    weights = np.array([float(w) for w, _ in components])
    if np.any(weights <= 0):
        raise ValueError(f"mixture weights must be positive, got {weights.tolist()}")
    if abs(weights.sum() - 1) > NORM_TOL:
        raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
    rhos = [as_density(s) for _, s in components]
    dims = {r.dims for r in rhos}
    if len(dims) != 1:
        raise ValueError(f"components live on different bases: {sorted(dims)}")
    mat = sum(w * r.matrix for w, r in zip(weights, rhos))
    return DensityMatrix(mat, dims=dims.pop())


def rho_p(p: float, dim: int = 4) -> DensityMatrix:
    """``(1 - p)|0><0| + p|1><1|``."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    diag = np.zeros(dim)
    diag[0], diag[1] = 1 - p, p
    return DensityMatrix(np.diag(diag).astype(complex))


@lru_cache(maxsize=16)
def _hopping_eig(da: int, db: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.kron(annihilation(da), np.eye(db))
    b = np.kron(np.eye(da), annihilation(db))
    K = a.conj().T @ b + b.conj().T @ a
    w, V = np.linalg.eigh(K)
    w.setflags(write=False)
    V.setflags(write=False)
    return w, V


def beamsplitter_unitary(tau: float, dims: tuple[int, int] | int) -> np.ndarray:
    """``exp(-i arcsin(sqrt tau) (a^dag b + b^dag a))`` on two truncated modes.

    Exact on every block of total photon number below ``min(dims)``.
    """
    if not 0 <= tau <= 1:
        raise ValueError(f"transmission must lie in [0, 1], got {tau}")
    da, db = (dims, dims) if isinstance(dims, int) else dims
    w, V = _hopping_eig(int(da), int(db))
    theta = math.asin(math.sqrt(tau))
    return (V * np.exp(-1j * theta * w)) @ V.conj().T


def _xlog(n, x):
    """``n log x`` with ``0 log 0 = 0``."""
    n = np.asarray(n, dtype=float)
    if x == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return n * math.log(x)


def loss_kraus(eta: float, dim: int) -> list[np.ndarray]:
    """Kraus operators ``E_k = sum_n sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k><n|`` of pure loss."""
    if not 0 <= eta <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    n = np.arange(dim)
    ops = []
    for k in range(dim):
        E = np.zeros((dim, dim))
        m = n[k:]
        log_binom = np.array([math.lgamma(x + 1) - math.lgamma(k + 1) - math.lgamma(x - k + 1) for x in m])
        log_w = log_binom + _xlog(m - k, eta) + _xlog(k, 1 - eta)
        E[m - k, m] = np.exp(log_w / 2)
        ops.append(E)
    return ops


def loss_channel(rho: PureState | DensityMatrix, eta: float) -> DensityMatrix:
    """Pure loss of transmissivity ``eta``, applied through its Kraus operators."""
    if not 0 <= eta <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    rho = as_density(rho)
    if rho.n_modes != 1:
        raise ValueError("loss_channel acts on single-mode states")
    if eta == 1:
        return rho
    mat = rho.matrix
    out = sum(E @ mat @ E.T for E in loss_kraus(eta, rho.dim))
    return DensityMatrix(out)

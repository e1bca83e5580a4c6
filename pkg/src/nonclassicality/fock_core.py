"""Truncated Fock-space linear algebra for one and two bosonic modes.

States and operators are dense complex numpy arrays.  ``PureState`` and
``DensityMatrix`` validate their invariants on construction and are treated
as immutable afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TAIL_TOL = 1e-10
NORM_TOL = 1e-10
TRACE_TOL = 1e-10
HERM_TOL = 1e-10
PSD_TOL = 1e-9
EIG_TOL = 1e-10
MS_TOL = 1e-9


class TruncationError(ValueError):
    """The truncated basis is too small for the state it has to hold."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


class NotHermitianError(ValueError):
    pass


def suggest_dim(alpha: complex = 0.0, r: float = 0.0, n: int = 0) -> int:
    """Per-mode dimension that keeps the Fock tail of the described content negligible.

    Starts from ``|a|^2 + 6|a| + 10`` for coherent content, ``10 sinh^2 r + 20``
    for squeezing and ``n + 3`` for explicit Fock content, then grows until the
    population of the last level is below ``TAIL_TOL / 100``.
    """
    amp = abs(alpha)
    dim = max(math.ceil(amp**2 + 6 * amp + 10), n + 3)
    if amp > 0:
        logpois = lambda k: -amp**2 + 2 * k * math.log(amp) - math.lgamma(k + 1)
        dim = max(dim, _first_level_below(logpois, start=math.ceil(amp**2)) + 1)
    if r > 0:
        dim = max(dim, math.ceil(10 * math.sinh(r) ** 2 + 20))
        t = math.tanh(r)
        # |c_2k|^2 = tanh^2k r (2k)! / (4^k k!^2 cosh r)
        sq = lambda k: (
            (k * math.log(t) + math.lgamma(k + 1) - 2 * math.lgamma(k / 2 + 1) - k * math.log(2) - math.log(math.cosh(r)))
            if k % 2 == 0
            else -math.inf
        )
        dim = max(dim, _first_level_below(sq) + 1)
    return dim


def _first_level_below(log_pop, start: int = 0, tol: float = TAIL_TOL / 100) -> int:
    """First level past ``start`` (at or beyond the peak) where the population stays below ``tol``."""
    k, below = start, 0
    target = math.log(tol)
    while below < 2:
        below = below + 1 if log_pop(k) < target else 0
        k += 1
    return k - 1


@dataclass(frozen=True)
class TruncatedBasis:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"basis dimension must be an integer >= 2, got {self.dim}")


def _as_dim(basis: TruncatedBasis | int) -> int:
    return basis.dim if isinstance(basis, TruncatedBasis) else TruncatedBasis(int(basis)).dim


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over ``|0>, ..., |dim-1>``."""

    amplitudes: np.ndarray
    check_tail: bool = field(default=True, repr=False)

    def __post_init__(self):
        vec = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        TruncatedBasis(vec.size)
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm:.3e} deviates from 1 by more than {NORM_TOL}")
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        if self.check_tail:
            tail = abs(vec[-1]) ** 2
            if tail > TAIL_TOL:
                raise TruncationError(
                    f"tail mass {tail:.3e} at level {vec.size - 1} exceeds {TAIL_TOL}; "
                    f"use dim >= {_required_dim(vec)}",
                    _required_dim(vec),
                )

    @classmethod
    def normalized(cls, vec, check_tail: bool = True) -> "PureState":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec / np.linalg.norm(vec), check_tail=check_tail)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def basis(self) -> TruncatedBasis:
        return TruncatedBasis(self.dim)

    def projector(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), check_tail=self.check_tail)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    ``dims`` is ``(d,)`` for one mode or ``(d_a, d_b)`` for two modes with
    the first mode as the slow (row-major) index.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()
    check_tail: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        dims = tuple(int(d) for d in self.dims) or (mat.shape[0],)
        if math.prod(dims) != mat.shape[0]:
            raise ValueError(f"factor dims {dims} inconsistent with matrix size {mat.shape[0]}")
        for d in dims:
            TruncatedBasis(d)
        herm = np.linalg.norm(mat - mat.conj().T)
        if herm > HERM_TOL:
            raise NotHermitianError(f"density matrix Hermiticity residual {herm:.3e}")
        mat = (mat + mat.conj().T) / 2
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr!r} deviates from 1 by more than {TRACE_TOL}")
        lo = np.linalg.eigvalsh(mat)[0]
        if lo < -PSD_TOL:
            raise ValueError(f"smallest eigenvalue {lo:.3e} is below -{PSD_TOL}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)
        if self.check_tail:
            _check_tail_mass(mat, dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _required_dim(vec_or_pops: np.ndarray) -> int:
    pops = np.abs(vec_or_pops) ** 2 if np.iscomplexobj(vec_or_pops) else vec_or_pops
    nbar = float(np.dot(np.arange(pops.size), pops))
    return max(2 * pops.size, math.ceil(10 * nbar + 20))


def _check_tail_mass(mat: np.ndarray, dims: tuple[int, ...]) -> None:
    pops = np.real(np.diag(mat)).reshape(dims)
    for axis, d in enumerate(dims):
        other = tuple(i for i in range(len(dims)) if i != axis)
        marginal = pops.sum(axis=other) if other else pops
        if marginal[-1] > TAIL_TOL:
            need = _required_dim(marginal)
            raise TruncationError(
                f"tail mass {marginal[-1]:.3e} of mode {axis} at level {d - 1} exceeds "
                f"{TAIL_TOL}; use dim >= {need}",
                need,
            )


def as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    return state.projector() if isinstance(state, PureState) else state


def annihilation(basis: TruncatedBasis | int) -> np.ndarray:
    dim = _as_dim(basis)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_operator(basis: TruncatedBasis | int) -> np.ndarray:
    return np.diag(np.arange(_as_dim(basis), dtype=float)).astype(complex)


def quadrature(basis: TruncatedBasis | int, mu: float) -> np.ndarray:
    """``X_mu = i (e^{-i mu} a^dag - e^{i mu} a) / sqrt 2``.

    ``mu = pi/2`` gives ``x = (a + a^dag)/sqrt 2`` and ``mu = 0`` gives
    ``p = i (a^dag - a)/sqrt 2``.
    """
    a = annihilation(basis)
    return 1j * (np.exp(-1j * mu) * a.conj().T - np.exp(1j * mu) * a) / np.sqrt(2)


def position(basis: TruncatedBasis | int) -> np.ndarray:
    a = annihilation(basis)
    return (a + a.conj().T) / np.sqrt(2)


def momentum(basis: TruncatedBasis | int) -> np.ndarray:
    a = annihilation(basis)
    return 1j * (a.conj().T - a) / np.sqrt(2)


def hermiticity_residual(H: np.ndarray) -> float:
    return float(np.linalg.norm(H - H.conj().T))


def check_hermitian(H: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NotHermitianError(f"operator must be square, got shape {H.shape}")
    res = hermiticity_residual(H)
    if res > tol * max(1.0, np.linalg.norm(H)):
        raise NotHermitianError(f"operator is not Hermitian: ||H - H^dag||_F = {res:.3e}")
    return H


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T

    def support(self, rel_eps: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs with eigenvalue above ``rel_eps`` times the largest one."""
        top = max(float(self.eigenvalues[-1]), 0.0)
        keep = self.eigenvalues > rel_eps * top
        return self.eigenvalues[keep], self.eigenvectors[:, keep]


def hermitian_eig(H: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix with a fixed eigenvector gauge.

    Each eigenvector is rotated so its largest-magnitude entry is real and
    positive, which makes the output a deterministic function of ``H``.
    """
    H = check_hermitian(H)
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    V = V * (np.abs(lead) / lead)
    return EigenDecomposition(w, V)


def tensor_product(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(A), np.asarray(B))


def partial_trace(rho: DensityMatrix | np.ndarray, keep: int, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Reduce a two-mode state to mode ``keep`` (0 or 1)."""
    if isinstance(rho, DensityMatrix):
        mat, dims = rho.matrix, dims or rho.dims
    else:
        mat = np.asarray(rho, dtype=complex)
    if dims is None or len(dims) != 2:
        raise ValueError("partial_trace needs two declared factor dims")
    da, db = (int(d) for d in dims)
    if da * db != mat.shape[0]:
        raise ValueError(f"factor dims {da}x{db} inconsistent with matrix size {mat.shape[0]}")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep}")
    t = mat.reshape(da, db, da, db)
    red = np.einsum("ijkj->ik", t) if keep == 0 else np.einsum("ijil->jl", t)
    return DensityMatrix(red, check_tail=False)


@dataclass(frozen=True)
class QuadratureMoments:
    nbar: float
    alpha: complex
    xi: complex

    def __post_init__(self):
        if self.nbar < -MS_TOL:
            raise ValueError(f"negative mean photon number {self.nbar}")
        if abs(self.alpha) ** 2 > self.nbar + MS_TOL:
            raise ValueError("moments violate |alpha|^2 <= nbar")
        if abs(self.xi) > math.sqrt(max(self.nbar, 0.0) * (self.nbar + 1)) + MS_TOL:
            raise ValueError("moments violate |xi| <= sqrt(nbar (nbar + 1))")

    @property
    def energy_term(self) -> float:
        """Mean photon number left after removing the displacement."""
        return self.nbar - abs(self.alpha) ** 2

    @property
    def squeezing_term(self) -> float:
        return abs(self.xi - self.alpha**2)

    def to_dict(self) -> dict:
        return {
            "nbar": self.nbar,
            "alpha": [self.alpha.real, self.alpha.imag],
            "xi": [self.xi.real, self.xi.imag],
        }


def moments(state: PureState | DensityMatrix) -> QuadratureMoments:
    if isinstance(state, PureState):
        v = state.amplitudes
        av = annihilation(state.dim) @ v
        nbar = float(np.vdot(av, av).real)
        alpha = complex(np.vdot(v, av))
        xi = complex(np.vdot(v, annihilation(state.dim) @ av))
        return QuadratureMoments(nbar, alpha, xi)
    if state.n_modes != 1:
        raise ValueError("moments are defined for single-mode states")
    rho = state.matrix
    a = annihilation(state.dim)
    n_c = np.trace(a.conj().T @ a @ rho)
    if abs(n_c.imag) > HERM_TOL:
        raise ValueError(f"photon number has imaginary residual {n_c.imag:.3e}")
    return QuadratureMoments(float(n_c.real), complex(np.trace(a @ rho)), complex(np.trace(a @ a @ rho)))


def to_json_doc(array: np.ndarray) -> dict:
    """Row-major ``{"dim", "re", "im"}`` document for a vector or square matrix."""
    arr = np.asarray(array, dtype=complex)
    return {"dim": int(arr.shape[0]), "re": arr.real.ravel().tolist(), "im": arr.imag.ravel().tolist()}


def from_json_doc(doc: dict | str) -> np.ndarray:
    if isinstance(doc, str):
        doc = json.loads(doc)
    dim = int(doc["dim"])
    flat = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    if flat.size == dim:
        return flat
    if flat.size == dim * dim:
        return flat.reshape(dim, dim)
    raise ValueError(f"document holds {flat.size} entries, expected {dim} or {dim * dim}")


def state_from_json(doc: dict | str) -> PureState | DensityMatrix:
    arr = from_json_doc(doc)
    return PureState(arr) if arr.ndim == 1 else DensityMatrix(arr)

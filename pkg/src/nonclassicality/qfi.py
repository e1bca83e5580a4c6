"""Quantum Fisher information in the variance convention (factor 4 dropped).

For ``rho = sum_j p_j |phi_j><phi_j|`` restricted to its support,

    F_G(rho) = Tr[G^2 rho] - sum_jk |<phi_j|G|phi_k>|^2 * 2 p_j p_k / (p_j + p_k).

Generators are applied to the support vectors instead of being squared as
matrices, so the result only sees truncation error through the tail of the
state itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fock_core import (
    DensityMatrix,
    EigenDecomposition,
    PureState,
    QuadratureMoments,
    as_density,
    hermitian_eig,
    momentum,
    moments,
    position,
    quadrature,
)

SUPP_EPS = 1e-12
CONVENTION = "variance"
# quadrature forms closer to isotropic than this report mu_star = 0
ISOTROPY_TOL = 1e-9


@dataclass(frozen=True)
class QFIResult:
    value: float
    mu_star: float
    support_rank: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "mu_star": self.mu_star,
            "convention": CONVENTION,
            "support_rank": self.support_rank,
        }


@dataclass(frozen=True, eq=False)
class Support:
    """Non-negligible eigenpairs of a density matrix."""

    probs: np.ndarray
    vectors: np.ndarray

    @property
    def rank(self) -> int:
        return self.probs.size

    @classmethod
    def of(cls, rho: DensityMatrix | PureState | EigenDecomposition, rel_eps: float = SUPP_EPS) -> "Support":
        if isinstance(rho, PureState):
            return cls(np.ones(1), rho.amplitudes[:, None])
        eig = rho if isinstance(rho, EigenDecomposition) else hermitian_eig(as_density(rho).matrix)
        p, V = eig.support(rel_eps)
        return cls(p, V)

    def harmonic_weights(self) -> np.ndarray:
        p = self.probs
        return 2 * np.outer(p, p) / (p[:, None] + p[None, :])


def qfi_from_images(support: Support, images: np.ndarray, images_b: np.ndarray | None = None) -> float:
    """Support-restricted QFI bilinear form given ``G|phi_j>`` (and optionally ``G'|phi_j>``).

    With one set of images this is ``F_G``; with two it is the symmetric
    bilinear extension ``B(G, G')`` whose diagonal is the QFI.
    """
    V, p = support.vectors, support.probs
    gb = images if images_b is None else images_b
    second = np.real(np.einsum("j,ij,ij->", p, images.conj(), gb))
    Ga = V.conj().T @ images
    Gb = Ga if images_b is None else V.conj().T @ gb
    cross = np.real(np.sum(Ga.conj() * Gb * support.harmonic_weights()))
    return float(second - cross)


def _clamp(value: float) -> float:
    if -1e-12 < value < 0:
        return 0.0
    return value


def qfi_generator(rho: DensityMatrix | PureState | Support, G: np.ndarray) -> float:
    """Variance-convention QFI of ``rho`` for the Hermitian generator ``G``."""
    support = rho if isinstance(rho, Support) else Support.of(rho)
    G = np.asarray(G, dtype=complex)
    if G.shape != (support.vectors.shape[0],) * 2:
        raise ValueError(f"generator shape {G.shape} does not match state dimension {support.vectors.shape[0]}")
    return _clamp(qfi_from_images(support, G @ support.vectors))


def variance(state: PureState, G: np.ndarray) -> float:
    v = state.amplitudes
    gv = G @ v
    mean = np.vdot(v, gv).real
    return float(np.vdot(gv, gv).real - mean**2)


def quadrature_form(rho: DensityMatrix | PureState | Support) -> tuple[np.ndarray, int]:
    """2x2 matrix ``M`` with ``F_{X_mu} = (sin mu, cos mu) M (sin mu, cos mu)^T``."""
    support = rho if isinstance(rho, Support) else Support.of(rho)
    dim = support.vectors.shape[0]
    xv = position(dim) @ support.vectors
    pv = momentum(dim) @ support.vectors
    mxx = qfi_from_images(support, xv)
    mpp = qfi_from_images(support, pv)
    mxp = qfi_from_images(support, xv, pv)
    return np.array([[mxx, mxp], [mxp, mpp]]), support.rank


def _angle_of(vec: np.ndarray) -> float:
    mu = math.atan2(vec[0], vec[1]) % math.pi
    return 0.0 if math.isclose(mu, math.pi, abs_tol=1e-12) else mu


def max_quadrature_qfi(rho: DensityMatrix | PureState | Support) -> QFIResult:
    """Largest quadrature QFI and the angle that attains it (in ``[0, pi)``)."""
    M, rank = quadrature_form(rho)
    w, V = np.linalg.eigh(M)
    if w[1] - w[0] <= ISOTROPY_TOL * max(1.0, abs(w[1])):
        mu = 0.0
    else:
        mu = _angle_of(V[:, 1])
    return QFIResult(_clamp(float(w[1])), mu, rank)


def grid_max_quadrature_qfi(rho: DensityMatrix | PureState, points: int = 720) -> tuple[float, float]:
    """Brute-force maximum of ``F_{X_mu}`` over an even grid in ``[0, pi)``."""
    support = Support.of(rho)
    dim = support.vectors.shape[0]
    best, arg = -math.inf, 0.0
    for mu in np.arange(points) * math.pi / points:
        f = qfi_generator(support, quadrature(dim, mu))
        if f > best:
            best, arg = f, float(mu)
    return best, arg


def grid_resolution_bound(rho: DensityMatrix | PureState | Support, points: int = 720) -> float:
    """Largest possible shortfall of a ``points``-grid maximum below the true one.

    ``F_{X_mu}`` is a sinusoid in ``2 mu`` with amplitude ``(l1 - l2)/2``; a grid
    of spacing ``pi/points`` misses the peak by at most ``pi/(2 points)``.
    """
    M, _ = quadrature_form(rho)
    w = np.linalg.eigvalsh(M)
    return float((w[1] - w[0]) / 2 * (1 - math.cos(math.pi / points)))


def metrological_power(rho: DensityMatrix | PureState | Support) -> float:
    return max(max_quadrature_qfi(rho).value - 0.5, 0.0)


@dataclass(frozen=True)
class PureMeasures:
    N: float
    Q: float
    mu_star: float
    moments: QuadratureMoments


def pure_nonclassicality(psi: PureState | QuadratureMoments) -> PureMeasures:
    """Closed form ``N = nbar - |alpha|^2 + |xi - alpha^2|`` for a pure state.

    ``Q = nbar - |alpha|^2`` is the quadrature-averaged excess variance and
    ``mu_star`` the angle of the largest quadrature variance.
    """
    m = psi if isinstance(psi, QuadratureMoments) else moments(psi)
    sq = m.xi - m.alpha**2
    Q = max(m.energy_term, 0.0)
    if abs(sq) <= ISOTROPY_TOL:
        mu = 0.0
    else:
        mu = ((math.pi - math.atan2(sq.imag, sq.real)) / 2) % math.pi
    return PureMeasures(Q + abs(sq), Q, mu, m)


def ensemble_objective(weights, members) -> tuple[float, float]:
    """Per-ensemble value of the ``N`` objective and of the ``V1`` quantifier.

    ``members`` are pure states or their moments.  ``N_obj`` takes the modulus
    of the averaged squeezing, ``V1_obj`` averages the moduli, so
    ``N_obj <= V1_obj``.
    """
    w = np.asarray(weights, dtype=float)
    ms = [m if isinstance(m, QuadratureMoments) else moments(m) for m in members]
    energy = np.array([m.energy_term for m in ms])
    sq = np.array([m.xi - m.alpha**2 for m in ms])
    n_obj = float(w @ energy + abs(w @ sq))
    v1_obj = float(w @ (energy + np.abs(sq)))
    return n_obj, v1_obj


def batch(fn: Callable, items, workers: int | None = None) -> list:
    """Map ``fn`` over ``items``, optionally on a thread pool; order follows the input."""
    if not workers or workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

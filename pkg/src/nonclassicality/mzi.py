"""Phase QFI of a Mach-Zehnder interferometer fed with ``rho`` and a coherent reference.

Two routes to the interferometer QFI:

* balanced splitter folded into the generator,
  ``G = (a b^dag - a^dag b) / 2i`` acting on ``rho (x) |alpha_r><alpha_r|``;
* an explicit splitter ``U_BS(tau)`` applied to the input support followed by
  the phase generator ``J_z = (a^dag a - b^dag b)/2``, for any ``tau``.

The prediction from the single-mode quadrature QFI is
``F = nbar/4 + |alpha_r|^2/2 * F_X(rho)`` when ``alpha_r = |alpha_r| e^{-i mu*}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fock_core import (
    TAIL_TOL,
    DensityMatrix,
    PureState,
    TruncationError,
    annihilation,
    as_density,
    hermitian_eig,
    moments,
    number_operator,
    suggest_dim,
)
from .qfi import Support, max_quadrature_qfi, qfi_from_images, quadrature_form
from .states import beamsplitter_unitary, coherent_amplitudes


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class MZIConfig:
    """Reference amplitude ``alpha_r = |alpha_r| e^{-i phi}``, splitter transmission, repetitions."""

    alpha_r: complex
    tau: float = 0.5
    reps: int = 1
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        if not 0 <= self.tau <= 1:
            raise ConfigurationError(f"tau must lie in [0, 1], got {self.tau}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigurationError(f"repetition count must be a positive integer, got {self.reps}")

    @property
    def phase(self) -> float:
        return -math.atan2(self.alpha_r.imag, self.alpha_r.real)


@dataclass(frozen=True)
class MZIReport:
    F_exact: float
    F_predicted: float
    N_total_photons: float
    witness_W: float
    crb: float
    N_lower_bound: float
    nbar: float
    mu_star: float
    alpha_r: complex
    tau: float
    dims: tuple[int, int]
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "F_exact": self.F_exact,
            "F_predicted": self.F_predicted,
            "N_total_photons": self.N_total_photons,
            "witness_W": self.witness_W,
            "crb": self.crb,
            "N_lower_bound": self.N_lower_bound,
            "nbar": self.nbar,
            "mu_star": self.mu_star,
            "alpha_r": [self.alpha_r.real, self.alpha_r.imag],
            "tau": self.tau,
            "dims": list(self.dims),
            "convention": "variance",
            "notes": list(self.notes),
        }


def mzi_generators(dims: tuple[int, int] | int) -> tuple[np.ndarray, np.ndarray]:
    """``(J_z, G)`` as dense matrices on the two-mode space (mode a is the slow index)."""
    da, db = (dims, dims) if isinstance(dims, int) else dims
    a = np.kron(annihilation(da), np.eye(db))
    b = np.kron(np.eye(da), annihilation(db))
    Jz = (np.kron(number_operator(da), np.eye(db)) - np.kron(np.eye(da), number_operator(db))) / 2
    G = (a @ b.conj().T - a.conj().T @ b) / 2j
    return Jz, G


def aligned_reference(rho: DensityMatrix | PureState, modulus: float) -> complex:
    """Reference amplitude whose phase matches the best quadrature of ``rho``."""
    mu = max_quadrature_qfi(rho).mu_star
    return modulus * complex(math.cos(mu), -math.sin(mu))


def default_dims(
    rho: DensityMatrix | PureState, alpha_r: complex, tau: float = 0.5, wide: bool = False
) -> tuple[int, int]:
    """Per-mode truncation.

    An explicit splitter can route the whole photon budget into one mode, so
    off-balance settings (or ``wide=True``) give both modes room for it.
    """
    rho = as_density(rho)
    da, db = rho.dim, suggest_dim(alpha=alpha_r)
    if wide or tau != 0.5:
        total = moments(rho).nbar + abs(alpha_r) ** 2
        both = max(da, db, math.ceil(total + 6 * math.sqrt(total) + 10))
        da = db = both
    return da, db


def _pad(rho: DensityMatrix, dim: int) -> DensityMatrix:
    if rho.dim == dim:
        return rho
    if rho.dim > dim:
        raise TruncationError(f"state needs dim {rho.dim} but mode a is truncated at {dim}", rho.dim)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[: rho.dim, : rho.dim] = rho.matrix
    return DensityMatrix(mat)


def _reference(alpha_r: complex, db: int) -> np.ndarray:
    ref = coherent_amplitudes(alpha_r, db)
    return PureState.normalized(ref).amplitudes


def _apply(A: np.ndarray, B: np.ndarray, vecs: np.ndarray, da: int, db: int) -> np.ndarray:
    """``(A (x) B)`` applied to each column of ``vecs`` without forming the Kronecker product."""
    k = vecs.shape[1]
    psi = vecs.T.reshape(k, da, db)
    out = np.einsum("ij,kjl,ml->kim", A, psi, B)
    return out.reshape(k, da * db).T


def joint_support(rho: DensityMatrix, alpha_r: complex, dims: tuple[int, int], joint_eig: bool = False) -> Support:
    """Support of ``rho (x) |alpha_r><alpha_r|``.

    By default the eigenvectors are Kronecker products of the factor
    eigenvectors; ``joint_eig=True`` diagonalizes the two-mode matrix instead.
    """
    da, db = dims
    rho = _pad(rho, da)
    ref = _reference(alpha_r, db)
    if joint_eig:
        sigma = np.kron(rho.matrix, np.outer(ref, ref.conj()))
        return Support.of(hermitian_eig(sigma))
    s = Support.of(rho)
    vecs = np.einsum("ik,j->ijk", s.vectors, ref).reshape(da * db, s.rank)
    return Support(s.probs, vecs)


def _tail_check(vecs: np.ndarray, probs: np.ndarray, da: int, db: int) -> None:
    pops = np.einsum("j,ij->i", probs, np.abs(vecs) ** 2).reshape(da, db)
    ta, tb = pops[-1, :].sum(), pops[:, -1].sum()
    if max(ta, tb) > TAIL_TOL:
        need = 2 * max(da, db)
        raise TruncationError(
            f"evolved two-mode state has tail mass {max(ta, tb):.3e} above {TAIL_TOL}; use per-mode dims >= {need}",
            need,
        )


def mzi_qfi_exact(
    rho: DensityMatrix | PureState,
    cfg: MZIConfig,
    picture: str = "auto",
    joint_eig: bool = False,
) -> float:
    """Interferometer QFI from the two-mode state, variance convention.

    ``picture`` is ``"generator"`` (balanced splitter folded into ``G``, only
    for ``tau = 1/2``), ``"splitter"`` (explicit ``U_BS(tau)`` then ``J_z``) or
    ``"auto"``.
    """
    rho = as_density(rho)
    if picture == "auto":
        picture = "generator" if cfg.tau == 0.5 else "splitter"
    dims = cfg.dims or default_dims(rho, cfg.alpha_r, cfg.tau, wide=picture == "splitter")
    da, db = dims
    support = joint_support(rho, cfg.alpha_r, dims, joint_eig=joint_eig)
    if picture == "generator":
        if cfg.tau != 0.5:
            raise ConfigurationError("the folded generator describes the balanced splitter only")
        a, b = annihilation(da), annihilation(db)
        images = (_apply(a, b.conj().T, support.vectors, da, db) - _apply(a.conj().T, b, support.vectors, da, db)) / 2j
        return max(qfi_from_images(support, images), 0.0)
    if picture != "splitter":
        raise ValueError(f"unknown picture {picture!r}")
    U = beamsplitter_unitary(cfg.tau, dims)
    evolved = U @ support.vectors
    _tail_check(evolved, support.probs, da, db)
    jz = (np.repeat(np.arange(da), db) - np.tile(np.arange(db), da)) / 2
    moved = Support(support.probs, evolved)
    return max(qfi_from_images(moved, jz[:, None] * evolved), 0.0)


def mzi_qfi_predicted(rho: DensityMatrix | PureState, cfg: MZIConfig) -> float:
    """``nbar/4 + |alpha_r|^2/2 * F_X(rho)`` for the balanced interferometer."""
    if cfg.tau != 0.5:
        raise ConfigurationError(f"the quadrature prediction holds for tau = 1/2, got tau = {cfg.tau}")
    nbar = moments(as_density(rho)).nbar
    return nbar / 4 + abs(cfg.alpha_r) ** 2 / 2 * max_quadrature_qfi(rho).value


def phase_prediction(rho: DensityMatrix | PureState, alpha_r: complex) -> float:
    """Balanced-interferometer QFI predicted for the reference phase actually used."""
    M, _ = quadrature_form(as_density(rho))
    phi = -math.atan2(alpha_r.imag, alpha_r.real)
    v = np.array([math.sin(phi), math.cos(phi)])
    return moments(as_density(rho)).nbar / 4 + abs(alpha_r) ** 2 / 2 * float(v @ M @ v)


def witness_from_qfi(F_mzi: float, nbar: float, alpha_r: complex) -> float:
    """Quadrature metrological power read off the interferometer QFI."""
    if abs(alpha_r) == 0:
        raise ConfigurationError("the witness needs a non-zero reference amplitude")
    N = nbar + abs(alpha_r) ** 2
    return max((F_mzi - N / 4) / (abs(alpha_r) ** 2 / 2), 0.0)


def precision_analysis(
    F: float, nbar: float, cfg: MZIConfig, phase_variance: float | None = None
) -> tuple[float, float]:
    """Cramer-Rao variance ``1/(M F)`` and the nonclassicality lower bound it implies.

    The bound ``(4 - N M v) / (2 M |alpha_r|^2 v)`` is evaluated at the
    saturated variance unless an estimator variance ``v`` is given.  It is
    returned unclamped; negative values are vacuous.
    """
    if F <= 0:
        raise ValueError("Fisher information must be positive")
    if abs(cfg.alpha_r) == 0:
        raise ConfigurationError("the lower bound needs a non-zero reference amplitude")
    M = cfg.reps
    crb = 1 / (M * F)
    v = crb if phase_variance is None else phase_variance
    if v < crb * (1 - 1e-12):
        raise ValueError(f"phase variance {v} is below the Cramer-Rao bound {crb}")
    N = nbar + abs(cfg.alpha_r) ** 2
    return crb, (4 - N * M * v) / (2 * M * abs(cfg.alpha_r) ** 2 * v)


def run_mzi(rho: DensityMatrix | PureState, cfg: MZIConfig) -> MZIReport:
    rho = as_density(rho)
    nbar = moments(rho).nbar
    dims = cfg.dims or default_dims(rho, cfg.alpha_r, cfg.tau)
    cfg = replace(cfg, dims=dims)
    F = mzi_qfi_exact(rho, cfg)
    notes = []
    if cfg.tau == 0.5:
        pred = mzi_qfi_predicted(rho, cfg)
    else:
        pred = mzi_qfi_predicted(rho, replace(cfg, tau=0.5))
        notes.append("F_predicted is the balanced-splitter value")
    crb, lower = precision_analysis(F, nbar, cfg) if F > 0 else (math.inf, 0.0)
    return MZIReport(
        F_exact=F,
        F_predicted=pred,
        N_total_photons=nbar + abs(cfg.alpha_r) ** 2,
        witness_W=witness_from_qfi(F, nbar, cfg.alpha_r),
        crb=crb,
        N_lower_bound=lower,
        nbar=nbar,
        mu_star=max_quadrature_qfi(rho).mu_star,
        alpha_r=cfg.alpha_r,
        tau=cfg.tau,
        dims=dims,
        notes=notes,
    )


def tau_scan(rho, modulus: float, taus=None, align: bool = True) -> list[tuple[float, float, float]]:
    """Rows ``(tau, F_exact(tau), F_predicted)`` on a shared truncation."""
    rho = as_density(rho)
    taus = np.round(np.arange(1, 10) / 10, 10) if taus is None else taus
    alpha_r = aligned_reference(rho, modulus) if align else complex(modulus)
    dims = default_dims(rho, alpha_r, tau=0.0)
    pred = mzi_qfi_predicted(rho, MZIConfig(alpha_r))
    return [
        (float(t), mzi_qfi_exact(rho, MZIConfig(alpha_r, tau=float(t), dims=dims), picture="splitter"), pred)
        for t in taus
    ]


def phase_scan(rho, modulus: float, points: int = 36) -> list[tuple[float, float, float]]:
    """Rows ``(phi, F_exact, F_predicted(phi))`` with ``alpha_r = |alpha_r| e^{-i phi}``."""
    rho = as_density(rho)
    rows = []
    for phi in np.arange(points) * 2 * math.pi / points:
        alpha_r = modulus * complex(math.cos(phi), -math.sin(phi))
        cfg = MZIConfig(alpha_r)
        rows.append((float(phi), mzi_qfi_exact(rho, cfg), phase_prediction(rho, alpha_r)))
    return rows


def fit_phase_scan(rows) -> tuple[float, float]:
    """Least-squares ``A + B cos 2phi + C sin 2phi`` through the scan; returns (max, argmax in [0, pi))."""
    phi = np.array([r[0] for r in rows])
    F = np.array([r[1] for r in rows])
    X = np.column_stack([np.ones_like(phi), np.cos(2 * phi), np.sin(2 * phi)])
    (A, B, C), *_ = np.linalg.lstsq(X, F, rcond=None)
    amp = math.hypot(B, C)
    arg = (math.atan2(C, B) / 2) % math.pi if amp > 1e-12 else 0.0
    return float(A + amp), arg


def heisenberg_scan(nbars=(1, 2, 4, 8)) -> list[tuple[float, float, float]]:
    """Squeezed vacuum with ``|alpha_r|^2 = nbar``: rows ``(N, F_exact, F_predicted)``."""
    from .states import StateSpec, prepare_pure

    rows = []
    for nb in nbars:
        r = math.asinh(math.sqrt(nb))
        psi = prepare_pure(StateSpec("sqvac", r=r))
        alpha_r = aligned_reference(psi, math.sqrt(nb))
        cfg = MZIConfig(alpha_r)
        rows.append((2.0 * nb, mzi_qfi_exact(psi, cfg), mzi_qfi_predicted(psi, cfg)))
    return rows


def loglog_slope(rows) -> float:
    x = np.log([r[0] for r in rows])
    y = np.log([r[1] for r in rows])
    return float(np.polyfit(x, y, 1)[0])

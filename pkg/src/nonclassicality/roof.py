"""Upper bounds on the nonclassicality of mixed states by ensemble search.

Every decomposition ``rho = sum_j p_j |psi_j><psi_j|`` can be written as

    sqrt(p_j) |psi_j> = sum_k U_jk sqrt(lambda_k) |phi_k>

for an isometry ``U`` (``m x r``, ``U^dag U = 1``) acting on the eigen-ensemble
``{lambda_k, |phi_k>}`` of ``rho``.  Each restart first runs quasi-Newton
descent on an unconstrained ``m x r`` matrix mapped to its polar factor, then
polishes with Givens-rotation coordinate moves, each minimized over its
angle; the coordinate moves need no derivatives and cope with the kink of
the modulus term near the optimum.  Any
ensemble that is visited bounds the minimum from above, so the reported
value is ``N_upper`` and never claimed to be exact for rank > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .fock_core import (
    DensityMatrix,
    PureState,
    annihilation,
    as_density,
    hermitian_eig,
    number_operator,
    quadrature,
)
from .qfi import SUPP_EPS, Support, metrological_power, qfi_generator, variance

DROP_WEIGHT = 1e-14
MAX_FLAGS = 64


@dataclass(frozen=True, eq=False)
class EnsembleDecomposition:
    weights: np.ndarray
    members: tuple[PureState, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size != len(self.members) or w.size == 0:
            raise ValueError("ensemble needs one positive weight per member")
        if np.any(w <= 0):
            raise ValueError("ensemble weights must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def density(self) -> np.ndarray:
        return sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in zip(self.weights, self.members))

    def reconstruction_error(self, rho: DensityMatrix) -> float:
        return float(np.linalg.norm(self.density() - rho.matrix))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "members": [
                {"dim": s.dim, "re": s.amplitudes.real.tolist(), "im": s.amplitudes.imag.tolist()}
                for s in self.members
            ],
        }


def check_isometry(U: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] < U.shape[1]:
        raise ValueError(f"isometry must be m x r with m >= r, got shape {U.shape}")
    err = np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1]))
    if err > tol:
        raise ValueError(f"U^dag U deviates from the identity by {err:.3e}")
    return U


def random_isometry(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
    q, rr = np.linalg.qr(z)
    return q * (np.diag(rr) / np.abs(np.diag(rr)))


def ensemble_from_isometry(rho: DensityMatrix | Support, U: np.ndarray) -> EnsembleDecomposition:
    support = rho if isinstance(rho, Support) else Support.of(rho)
    U = check_isometry(U)
    if U.shape[1] != support.rank:
        raise ValueError(f"isometry has {U.shape[1]} columns but the support rank is {support.rank}")
    vecs = (U * np.sqrt(support.probs)) @ support.vectors.T
    p = np.sum(np.abs(vecs) ** 2, axis=1)
    keep = p > DROP_WEIGHT
    members = tuple(PureState(v / math.sqrt(q), check_tail=False) for v, q in zip(vecs[keep], p[keep]))
    return EnsembleDecomposition(p[keep] / p[keep].sum(), members)


class RoofObjective:
    """Ensemble objective evaluated in the ``r``-dimensional support frame."""

    def __init__(self, support: Support):
        dim = support.vectors.shape[0]
        a = annihilation(dim)
        D = np.sqrt(support.probs)
        V = support.vectors
        frame = lambda op: (D[:, None] * (V.conj().T @ op @ V)) * D[None, :]
        self.support = support
        self.lam = support.probs
        self.A = frame(a)
        self.Xi = frame(a @ a)
        self.Nn = frame(number_operator(dim))
        self.nbar = float(np.real(np.trace(self.Nn)))
        self.xi = complex(np.trace(self.Xi))

    def row_terms(self, rows: np.ndarray):
        p = np.abs(rows) ** 2 @ self.lam
        s = np.einsum("jk,kl,jl->j", rows.conj(), self.A, rows)
        live = p > DROP_WEIGHT
        e = np.where(live, np.abs(s) ** 2 / np.where(live, p, 1), 0.0)
        z = np.where(live, s**2 / np.where(live, p, 1), 0.0)
        return e, z

    def value(self, U: np.ndarray) -> float:
        e, z = self.row_terms(U)
        return float(self.nbar - e.sum() + abs(self.xi - z.sum()))

    def v1_value(self, U: np.ndarray) -> float:
        e, z = self.row_terms(U)
        nn = np.real(np.einsum("jk,kl,jl->j", U.conj(), self.Nn, U))
        xx = np.einsum("jk,kl,jl->j", U.conj(), self.Xi, U)
        return float(np.sum(nn - e) + np.sum(np.abs(xx - z)))


@dataclass
class RoofOptions:
    restarts: int = 32
    m_max: int | None = None
    seed: int = 0
    tol: float = 1e-8
    patience: int = 50
    max_proposals: int = 4000
    smooth: bool = True


@dataclass(frozen=True, eq=False)
class RoofResult:
    N_upper: float
    W_lower: float
    best_ensemble: EnsembleDecomposition
    restarts_used: int
    converged: bool
    best_by_m: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "N_upper": self.N_upper,
            "W_lower": self.W_lower,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "best_by_m": {str(k): v for k, v in sorted(self.best_by_m.items())},
            "best_ensemble": self.best_ensemble.to_dict(),
        }


def _givens(U: np.ndarray, i: int, j: int, theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    out = U.copy()
    out[i] = c * U[i] - np.exp(-1j * phi) * s * U[j]
    out[j] = np.exp(1j * phi) * s * U[i] + c * U[j]
    return out


def _pair_coefficients(obj: RoofObjective, a: np.ndarray, b: np.ndarray):
    """Coefficients of ``p`` and ``s`` for the row ``cos(t) a + sin(t) b``.

    Both are quadratic forms, so each is ``cc * X + ss * Y + cs * Z``.
    """
    la, lb = a.conj() * obj.lam, b.conj() * obj.lam
    p = (float(np.real(la @ a)), float(np.real(lb @ b)), 2 * float(np.real(la @ b)))
    Aa, Ab = obj.A @ a, obj.A @ b
    s = (complex(a.conj() @ Aa), complex(b.conj() @ Ab), complex(a.conj() @ Ab + b.conj() @ Aa))
    return p, s


def _polar(Y: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(Y, full_matrices=False)
    return u @ vh


def _smooth_descent(obj: RoofObjective, U: np.ndarray) -> np.ndarray:
    """BFGS over ``Y`` with ``U = polar(Y)``; keeps the start if nothing improves."""
    m, r = U.shape
    unpack = lambda x: _polar((x[: m * r] + 1j * x[m * r :]).reshape(m, r))
    f = lambda x: obj.value(unpack(x))
    x0 = np.concatenate([U.real.ravel(), U.imag.ravel()])
    res = minimize(f, x0, method="BFGS", options={"gtol": 1e-10})
    return unpack(res.x) if res.fun < obj.value(U) else U


def _local_search(obj: RoofObjective, U: np.ndarray, rng: np.random.Generator, opts: RoofOptions):
    """Random-pair Givens coordinate descent; returns (value, U, converged)."""
    m = U.shape[0]
    if m < 2:
        return obj.value(U), U, True
    e_rows, z_rows = obj.row_terms(U)
    best = obj.value(U)
    nbar, xi = obj.nbar, obj.xi
    grid = np.linspace(-math.pi / 2, math.pi / 2, 17)
    h = grid[1] - grid[0]
    gc, gs = np.cos(grid), np.sin(grid)
    stall = 0
    for step in range(opts.max_proposals):
        i, j = (int(k) for k in rng.choice(m, size=2, replace=False))
        phi = rng.uniform(0, 2 * math.pi)
        ephi = complex(math.cos(phi), math.sin(phi))
        ui, uj = U[i], U[j]
        # row i -> c ui - s e^{-i phi} uj, row j -> c uj + s e^{i phi} ui
        (p1, s1), (p2, s2) = _pair_coefficients(obj, ui, -uj / ephi), _pair_coefficients(obj, uj, ephi * ui)
        e_rest = float(e_rows.sum() - e_rows[i] - e_rows[j])
        z_rest = complex(z_rows.sum() - z_rows[i] - z_rows[j])
        target = xi - z_rest

        def f(t):
            c, s = math.cos(t), math.sin(t)
            cc, ss, cs = c * c, s * s, c * s
            e = 0.0
            z = 0j
            for (pa, pb, pc), (sa, sb, sc) in ((p1, s1), (p2, s2)):
                p = cc * pa + ss * pb + cs * pc
                if p > DROP_WEIGHT:
                    sv = cc * sa + ss * sb + cs * sc
                    e += (sv.real**2 + sv.imag**2) / p
                    z += sv * sv / p
            return nbar - e_rest - e + abs(target - z)

        cc, ss, cs = gc * gc, gs * gs, gc * gs
        e_g = np.zeros(grid.size)
        z_g = np.zeros(grid.size, dtype=complex)
        for (pa, pb, pc), (sa, sb, sc) in ((p1, s1), (p2, s2)):
            p = cc * pa + ss * pb + cs * pc
            sv = cc * sa + ss * sb + cs * sc
            live = p > DROP_WEIGHT
            safe = np.where(live, p, 1.0)
            e_g += np.where(live, np.abs(sv) ** 2 / safe, 0.0)
            z_g += np.where(live, sv * sv / safe, 0.0)
        vals = nbar - e_rest - e_g + np.abs(target - z_g)
        k = int(np.argmin(vals))
        res = minimize_scalar(f, bounds=(grid[k] - h, grid[k] + h), method="bounded", options={"xatol": 1e-9})
        theta, val = (float(res.x), float(res.fun)) if res.fun < vals[k] else (float(grid[k]), float(vals[k]))
        stall = 0 if val < best - opts.tol else stall + 1
        if val < best:
            U = _givens(U, i, j, theta, phi)
            e_rows, z_rows = obj.row_terms(U)
            best = obj.value(U)
            v1 = obj.v1_value(U)
            assert best <= v1 + 1e-10, f"N objective {best} exceeds V1 objective {v1}"
        if stall >= opts.patience:
            return best, U, True
        if step % 200 == 199:
            # re-orthonormalize to stop rounding drift
            q, rr = np.linalg.qr(U)
            U = q * (np.diag(rr) / np.abs(np.diag(rr)))
            e_rows, z_rows = obj.row_terms(U)
            best = obj.value(U)
    return best, U, False


def minimize_nonclassicality(rho: DensityMatrix | PureState, opts: RoofOptions | None = None, **kw) -> RoofResult:
    """Multi-start search for the least ``N`` objective over ensemble decompositions.

    Restart ``i`` uses ``m = r + (i mod (m_max - r + 1))`` ensemble members
    and a generator spawned from ``seed``; restart 0 starts from the
    eigen-ensemble.  The minimum over restarts is kept, ties going to the
    lowest restart index.
    """
    opts = opts or RoofOptions(**kw)
    rho = as_density(rho)
    support = Support.of(rho)
    obj = RoofObjective(support)
    w_lower = metrological_power(support)
    r = support.rank
    m_max = max(opts.m_max if opts.m_max is not None else r + 2, r)
    if r == 1:
        U = np.eye(1, dtype=complex)
        return RoofResult(obj.value(U), w_lower, ensemble_from_isometry(support, U), 1, True, {1: obj.value(U)})
    seeds = np.random.SeedSequence(opts.seed).spawn(opts.restarts)
    best_val, best_U, best_conv = math.inf, None, False
    by_m: dict[int, float] = {}
    for idx, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        m = r + idx % (m_max - r + 1)
        if idx == 0:
            U0 = np.eye(m, r, dtype=complex)
        else:
            U0 = random_isometry(m, r, rng)
        if opts.smooth:
            U0 = _smooth_descent(obj, U0)
        val, U, conv = _local_search(obj, U0, rng, opts)
        by_m[m] = min(by_m.get(m, math.inf), val)
        if val < best_val:
            best_val, best_U, best_conv = val, U, conv
    q, rr = np.linalg.qr(best_U)
    best_U = q * (np.diag(rr) / np.abs(np.diag(rr)))
    return RoofResult(
        N_upper=obj.value(best_U),
        W_lower=w_lower,
        best_ensemble=ensemble_from_isometry(support, best_U),
        restarts_used=opts.restarts,
        converged=best_conv,
        best_by_m=by_m,
    )


def extended_state_qfi(ens: EnsembleDecomposition, mu: float) -> tuple[float, float]:
    """QFI of ``X_mu (x) 1`` on ``sum_j p_j |psi_j><psi_j| (x) |j><j|``, computed two ways.

    Returns ``(flagged, direct)``: the first diagonalizes the flagged state
    and applies the support-restricted QFI formula, the second sums the
    weighted member variances.
    """
    m = len(ens)
    if m > MAX_FLAGS:
        raise ValueError(f"ensemble has {m} members; at most {MAX_FLAGS} flags are supported")
    dims = {s.dim for s in ens.members}
    if len(dims) != 1:
        raise ValueError("ensemble members must share one basis")
    d = dims.pop()
    X = quadrature(d, mu)
    flags = max(m, 2)
    rho_e = np.zeros((d * flags, d * flags), dtype=complex)
    for j, (w, s) in enumerate(zip(ens.weights, ens.members)):
        block = np.zeros((flags, flags))
        block[j, j] = 1
        rho_e += w * np.kron(np.outer(s.amplitudes, s.amplitudes.conj()), block)
    support = Support.of(hermitian_eig(rho_e), SUPP_EPS)
    flagged = qfi_generator(support, np.kron(X, np.eye(flags)))
    direct = float(sum(w * variance(s, X) for w, s in zip(ens.weights, ens.members)))
    return flagged, direct

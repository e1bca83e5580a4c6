"""Nonclassicality of coherent-state superpositions from pair, triple and
quadruple sums over the components.

With ``d_jk = alpha_j - alpha_k`` and ``f_jk = <alpha_k|alpha_j>`` the energy
term ``nbar - |alpha|^2`` and the complex squeezing amplitude
``xi - alpha^2`` each split into three lines: pairs, distinct triples and
distinct quadruples of component indices.  The squeezing term is the modulus
of the sum of its three lines.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .states import CoherentSuperposition, DegenerateSuperpositionError

MAX_COMPONENTS = 16


@dataclass(frozen=True)
class MacroReport:
    energy_term: float
    squeezing_term: float
    energy_lines: tuple[complex, complex, complex]
    squeezing_lines: tuple[complex, complex, complex]
    far_apart_value: float
    max_overlap: float

    @property
    def N_total(self) -> float:
        return self.energy_term + self.squeezing_term

    def to_dict(self) -> dict:
        pack = lambda zs: [[z.real, z.imag] for z in zs]
        return {
            "energy_term": self.energy_term,
            "squeezing_term": self.squeezing_term,
            "N_total": self.N_total,
            "energy_lines": pack(self.energy_lines),
            "squeezing_lines": pack(self.squeezing_lines),
            "far_apart_value": self.far_apart_value,
            "max_overlap": self.max_overlap,
        }


def _distinct(L: int, k: int):
    return itertools.permutations(range(L), k)


def energy_lines(sup: CoherentSuperposition) -> tuple[complex, complex, complex]:
    c, cs = sup.coefficients, sup.coefficients.conj()
    w = np.abs(c) ** 2
    d, f = sup.distances, sup.overlaps
    L = sup.size
    pairs = 0.5 * sum(w[j] * w[k] * abs(d[j, k]) ** 2 * (1 - abs(f[j, k]) ** 2) for j, k in _distinct(L, 2))
    triples = sum(
        cs[j] * w[k] * c[l] * d[j, k].conjugate() * d[l, k] * (f[l, j] - f[l, k] * f[k, j])
        for j, k, l in _distinct(L, 3)
    )
    quads = 0.5 * sum(
        cs[j] * cs[k] * c[l] * c[m] * d[j, k].conjugate() * d[m, l] * f[m, j] * f[l, k]
        for j, k, l, m in _distinct(L, 4)
    )
    return complex(pairs), complex(triples), complex(quads)


def squeezing_lines(sup: CoherentSuperposition) -> tuple[complex, complex, complex]:
    """Pair, triple and quadruple parts of ``xi - alpha^2``.

    Indices with a zero coefficient drop out of the ratio terms; their
    contributions vanish in the unreduced products anyway.
    """
    c, cs = sup.coefficients, sup.coefficients.conj()
    w = np.abs(c) ** 2
    d, f = sup.distances, sup.overlaps
    L = sup.size
    live = w > 0
    pairs = 0.5 * sum(
        w[j] * w[k] * d[j, k] ** 2 * (1 + 2 * cs[j] / cs[k] * f[k, j] + abs(f[k, j]) ** 2)
        for j, k in _distinct(L, 2)
        if live[j] and live[k]
    )
    triples = sum(
        cs[j] * w[k] * c[l] * d[l, k] ** 2 * (f[l, j] + f[l, k] * f[k, j] + cs[j] / (2 * cs[k]) * f[k, j] * f[l, j])
        for j, k, l in _distinct(L, 3)
        if live[k]
    )
    quads = 0.5 * sum(
        cs[j] * cs[k] * c[l] * c[m] * d[m, l] ** 2 * f[m, j] * f[l, k] for j, k, l, m in _distinct(L, 4)
    )
    return complex(pairs), complex(triples), complex(quads)


def far_apart_limit(sup: CoherentSuperposition) -> float:
    """Mean square phase-space distance ``sum_jk |c_j|^2 |c_k|^2 |d_jk|^2``."""
    w = np.abs(sup.coefficients) ** 2
    return float(np.sum(np.outer(w, w) * np.abs(sup.distances) ** 2))


def macro_terms(sup: CoherentSuperposition) -> MacroReport:
    if sup.size > MAX_COMPONENTS:
        raise ValueError(f"at most {MAX_COMPONENTS} components are supported, got {sup.size}")
    if not sup.is_normalized(1e-9):
        raise DegenerateSuperpositionError(
            f"superposition is not normalized (norm^2 = {sup.norm_squared():.12g}); call .normalized() first"
        )
    e = energy_lines(sup)
    s = squeezing_lines(sup)
    f = sup.overlaps
    off = np.abs(f - np.diag(np.diag(f)))
    return MacroReport(
        energy_term=float(sum(e).real),
        squeezing_term=float(abs(sum(s))),
        energy_lines=e,
        squeezing_lines=s,
        far_apart_value=far_apart_limit(sup),
        max_overlap=float(off.max()) if sup.size > 1 else 0.0,
    )

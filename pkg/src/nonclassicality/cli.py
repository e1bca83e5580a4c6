"""Command-line front end.

Every subcommand writes one document (JSON by default, CSV for scans) that
depends only on its arguments, so identical invocations give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fock_core import (
    DensityMatrix,
    PureState,
    TruncationError,
    as_density,
    from_json_doc,
    moments,
    quadrature,
    to_json_doc,
)
from .macro import macro_terms
from .mzi import (
    MZIConfig,
    aligned_reference,
    heisenberg_scan,
    mzi_qfi_exact,
    phase_scan,
    run_mzi,
    tau_scan,
)
from .qfi import (
    CONVENTION,
    grid_max_quadrature_qfi,
    grid_resolution_bound,
    max_quadrature_qfi,
    metrological_power,
    pure_nonclassicality,
    qfi_generator,
)
from .roof import RoofOptions, minimize_nonclassicality
from .states import (
    CoherentSuperposition,
    SpecError,
    StateSpec,
    cat_norm,
    parse_complex,
    prepare_pure,
    prepare_superposition,
    rho_p,
)
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

TRUNCATION_NOTE = (
    "Fock space truncated per mode; dimension chosen so the last level holds "
    "less than 1e-10 probability (caller may override with --dim)"
)
SQUEEZED_NOTE = (
    "printed squeezed-vacuum entry (e^r-1)/2 disagrees with nbar+sqrt(nbar(nbar+1)) = (e^{2r}-1)/2, "
    "which the moment computation and the N/nbar row both give"
)


class VerificationError(RuntimeError):
    pass


@dataclass
class RunConfig:
    dim: int | None = None
    tol: float = 1e-8
    seed: int = 0
    restarts: int = 32
    fmt: str = "json"
    out: str | None = None
    verify: bool = False


def _meta(dim=None, **extra) -> dict:
    meta = {"convention": CONVENTION, "version": __version__, "truncation": TRUNCATION_NOTE}
    if dim is not None:
        meta["dim"] = dim
    meta.update(extra)
    return meta


def load_state(args, cfg: RunConfig) -> tuple[PureState | DensityMatrix, str]:
    if getattr(args, "state", None):
        spec = StateSpec.parse(args.state)
        return prepare_pure(spec, cfg.dim), spec.label()
    if getattr(args, "state_file", None):
        doc = json.loads(Path(args.state_file).read_text())
        if isinstance(doc, list):
            sup = CoherentSuperposition.from_pairs(doc)
            return prepare_superposition(sup, cfg.dim), f"superposition:{args.state_file}"
        arr = from_json_doc(doc)
        state = PureState(arr) if arr.ndim == 1 else DensityMatrix(arr)
        return state, f"file:{args.state_file}"
    raise SpecError("give --state SPEC or --state-file FILE")


def _check(cond: bool, what: str, failures: list) -> None:
    if not cond:
        failures.append(what)


def cmd_measure(args, cfg: RunConfig) -> dict:
    state, label = load_state(args, cfg)
    rho = as_density(state)
    m = moments(state)
    qf = max_quadrature_qfi(rho)
    W = max(qf.value - 0.5, 0.0)
    roof = minimize_nonclassicality(rho, RoofOptions(restarts=cfg.restarts, seed=cfg.seed, tol=cfg.tol))
    doc = {
        "state": label,
        "moments": m.to_dict(),
        "F_X": qf.to_dict(),
        "W": W,
        "N_bracket": [roof.W_lower, roof.N_upper],
        "roof_converged": roof.converged,
        "pure": isinstance(state, PureState),
        "meta": _meta(rho.dim),
    }
    if isinstance(state, PureState):
        pm = pure_nonclassicality(state)
        doc.update(N=pm.N, Q=pm.Q, mu_star=pm.mu_star)
    else:
        doc["mu_star"] = qf.mu_star
        doc["meta"]["note"] = "mixed state: N is bracketed, the upper end is an optimizer bound"
    if cfg.verify:
        failures: list[str] = []
        direct = qfi_generator(rho, quadrature(rho.dim, qf.mu_star))
        _check(abs(direct - qf.value) <= 1e-9, "quadratic-form maximum differs from direct evaluation", failures)
        grid, _ = grid_max_quadrature_qfi(rho)
        _check(grid <= qf.value + 1e-9, "720-point grid exceeds the quadratic-form maximum", failures)
        _check(qf.value - grid <= grid_resolution_bound(rho) + 1e-9, "grid maximum below resolution bound", failures)
        _check(roof.W_lower <= roof.N_upper + 1e-9, "bracket violated: W > N_upper", failures)
        if isinstance(state, PureState):
            _check(abs(doc["N"] - W) <= 1e-9, "pure-state N differs from W", failures)
            _check(abs(roof.N_upper - doc["N"]) <= 1e-6, "optimizer misses the pure-state value", failures)
        doc["verify"] = {"passed": not failures, "failures": failures}
        if failures:
            raise VerificationError("; ".join(failures))
    return doc


def table1_rows() -> list[dict]:
    rows = []
    for n in (1, 2, 5):
        rows.append(("fock", f"n={n}", StateSpec("fock", n=n), float(n), 1.0, None))
    for n in (3, 4, 6):
        rows.append(("fock_superposition", f"n={n}", StateSpec("fsup", n=n), n / 2, 1.0, None))
    for r in (0.25, 0.5, 1.0):
        nb = math.sinh(r) ** 2
        ref = nb + math.sqrt(nb * (nb + 1))
        rows.append(("squeezed_vacuum", f"r={r:g}", StateSpec("sqvac", r=r), ref, 1 + math.sqrt(1 + 1 / nb), r))
    for a in (0.5, 1.0, 2.0, 3.0):
        for par in (1, -1):
            npm, nmp = cat_norm(a, par), cat_norm(a, -par)
            ref = a**2 * (npm + nmp) / npm
            rows.append(("cat", f"alpha={a:g},parity={'+' if par > 0 else '-'}", StateSpec("cat", alpha=a, parity=par), ref, 1 + npm / nmp, None))
    out = []
    for family, params, spec, ref, ratio_ref, r in rows:
        psi = prepare_pure(spec)
        pm = pure_nonclassicality(psi)
        nb = pm.moments.nbar
        row = {
            "family": family,
            "params": params,
            "dim": psi.dim,
            "nbar": nb,
            "N": pm.N,
            "N_ref": ref,
            "abs_diff": abs(pm.N - ref),
            "N_over_nbar": pm.N / nb,
            "N_over_nbar_ref": ratio_ref,
        }
        if r is not None:
            row["N_printed_table"] = (math.exp(r) - 1) / 2
            row["note"] = SQUEEZED_NOTE
        out.append(row)
    return out


def cmd_table1(args, cfg: RunConfig) -> dict:
    rows = table1_rows()
    doc = {"rows": rows, "notes": [SQUEEZED_NOTE], "meta": _meta()}
    if cfg.verify:
        bad = [f"{r['family']} {r['params']}" for r in rows if r["abs_diff"] > 1e-8]
        doc["verify"] = {"passed": not bad, "failures": bad}
        if bad:
            raise VerificationError("table mismatch: " + ", ".join(bad))
    return doc


def cmd_scan(args, cfg: RunConfig) -> tuple[list[str], list[tuple]]:
    what = args.what
    if what == "rho_p":
        rows = []
        for p in np.linspace(0, 1, args.points):
            F = max_quadrature_qfi(rho_p(float(p))).value
            W = max(F - 0.5, 0.0)
            rows.append((float(p), F, W, max(p * (2 * p - 1), 0.0) + 0.0))
        if cfg.verify and any(abs(r[2] - r[3]) > 1e-10 for r in rows):
            raise VerificationError("W(rho(p)) departs from max{p(2p-1), 0}")
        return ["p", "F_X", "W", "W_formula"], rows
    if what == "heisenberg":
        rows = heisenberg_scan()
        return ["N", "F_exact", "F_predicted"], rows
    state, _ = load_state(args, cfg) if (args.state or args.state_file) else (prepare_pure("fock:1", cfg.dim), "fock:1")
    modulus = abs(parse_complex(args.alpha_r)) if args.alpha_r else 2.0
    if what == "mzi_tau":
        rows = tau_scan(state, modulus)
        if cfg.verify:
            best = max(rows, key=lambda r: r[1])
            if abs(best[0] - 0.5) > 1e-12 and best[1] > dict((r[0], r[1]) for r in rows)[0.5] + 1e-8:
                raise VerificationError("tau scan maximum is not at the balanced splitter")
        return ["tau_or_phi", "F_exact", "F_predicted"], rows
    if what == "mzi_phi":
        rows = phase_scan(state, modulus)
        if cfg.verify and any(abs(r[1] - r[2]) > 1e-5 * max(1, r[2]) for r in rows):
            raise VerificationError("phase scan departs from the quadrature prediction")
        return ["tau_or_phi", "F_exact", "F_predicted"], rows
    raise SpecError(f"unknown scan {what!r}")


def cmd_mzi(args, cfg: RunConfig) -> dict | tuple:
    state, label = load_state(args, cfg)
    alpha_r = parse_complex(args.alpha_r)
    if args.align:
        alpha_r = aligned_reference(state, abs(alpha_r))
    if args.scan == "tau":
        return ["tau_or_phi", "F_exact", "F_predicted"], tau_scan(state, abs(alpha_r), align=args.align)
    if args.scan == "phi":
        return ["tau_or_phi", "F_exact", "F_predicted"], phase_scan(state, abs(alpha_r))
    mcfg = MZIConfig(alpha_r, tau=args.tau, reps=args.reps)
    rep = run_mzi(state, mcfg)
    doc = {"state": label, "report": rep.to_dict(), "meta": _meta(list(rep.dims))}
    if cfg.verify:
        failures: list[str] = []
        if args.tau == 0.5:
            joint = mzi_qfi_exact(state, MZIConfig(alpha_r), picture="splitter")
            _check(abs(joint - rep.F_exact) <= 1e-6 * max(1, rep.F_exact), "generator and splitter pictures disagree", failures)
            if args.align:
                _check(
                    abs(rep.F_exact - rep.F_predicted) <= 1e-5 * max(1, rep.F_exact),
                    "exact QFI departs from the quadrature prediction",
                    failures,
                )
                _check(abs(rep.witness_W - metrological_power(state)) <= 1e-5, "witness departs from W", failures)
        _check(rep.N_lower_bound <= rep.witness_W + 1e-9, "lower bound exceeds the witness", failures)
        doc["verify"] = {"passed": not failures, "failures": failures}
        if failures:
            raise VerificationError("; ".join(failures))
    return doc


def cmd_macro(args, cfg: RunConfig) -> dict:
    if args.state_file:
        sup = CoherentSuperposition.from_pairs(json.loads(Path(args.state_file).read_text()))
    elif args.state:
        spec = StateSpec.parse(args.state)
        if spec.kind == "coherent":
            sup = CoherentSuperposition(np.array([1.0]), np.array([spec.alpha]))
        elif spec.kind == "cat":
            sup = CoherentSuperposition(np.array([1.0, spec.parity]), np.array([spec.alpha, -spec.alpha])).normalized()
        else:
            raise SpecError(f"{spec.label()} is not a coherent-state superposition")
    else:
        raise SpecError("give --state-file FILE (list of {c, alpha}) or a cat/coherent --state")
    rep = macro_terms(sup)
    doc = {"superposition": sup.to_pairs(), "report": rep.to_dict(), "meta": _meta()}
    if cfg.verify:
        psi = prepare_superposition(sup, cfg.dim)
        m = moments(psi)
        failures: list[str] = []
        _check(abs(rep.energy_term - m.energy_term) <= 1e-8, "energy sum departs from Fock moments", failures)
        _check(abs(rep.squeezing_term - m.squeezing_term) <= 1e-8, "squeezing sum departs from Fock moments", failures)
        doc["verify"] = {"passed": not failures, "failures": failures, "fock_dim": psi.dim}
        if failures:
            raise VerificationError("; ".join(failures))
    return doc


def cmd_roof(args, cfg: RunConfig) -> dict:
    state, label = load_state(args, cfg)
    opts = RoofOptions(restarts=cfg.restarts, seed=cfg.seed, tol=cfg.tol, m_max=args.m_max)
    res = minimize_nonclassicality(state, opts)
    doc = {"state": label, "result": res.to_dict(), "meta": _meta(as_density(state).dim, seed=cfg.seed)}
    if cfg.verify:
        err = res.best_ensemble.reconstruction_error(as_density(state))
        failures: list[str] = []
        _check(err <= 1e-8, f"best ensemble reconstructs rho only to {err:.2e}", failures)
        _check(res.W_lower <= res.N_upper + 1e-9, "bracket violated: W > N_upper", failures)
        doc["verify"] = {"passed": not failures, "failures": failures}
        if failures:
            raise VerificationError("; ".join(failures))
    return doc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=None, help="Fock truncation per mode (default: adequacy rule)")
    common.add_argument("--tol", type=float, default=1e-8, help="optimizer improvement tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=32)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    fmt.add_argument("--table", dest="fmt", action="store_const", const="table")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--verify", action="store_true", help="rerun cross-checks and fail on violation")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--state", help="fock:N | coherent:A | sqvac:R[:PHI] | cat:+|-:A | fsup:N")
    state.add_argument("--state-file", help="JSON {dim, re, im} vector/matrix, or list of {c, alpha}")

    p = argparse.ArgumentParser(prog="nonclassicality", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("measure", parents=[common, state], help="W, N bracket and moments of one state")
    sub.add_parser("table1", parents=[common], help="closed-form families versus computed values")

    sc = sub.add_parser("scan", parents=[common, state], help="CSV scans")
    sc.add_argument("what", choices=["rho_p", "mzi_tau", "mzi_phi", "heisenberg"])
    sc.add_argument("--alpha-r", default=None)
    sc.add_argument("--points", type=int, default=101)

    mz = sub.add_parser("mzi", parents=[common, state], help="interferometer QFI, witness and precision bound")
    mz.add_argument("--alpha-r", required=True)
    mz.add_argument("--tau", type=float, default=0.5)
    mz.add_argument("--reps", type=int, default=1)
    mz.add_argument("--scan", choices=["tau", "phi"], default=None)
    mz.add_argument("--align", action="store_true", help="rotate alpha_r onto the best quadrature")

    sub.add_parser("macro", parents=[common, state], help="pair/triple/quadruple sums of a superposition")

    rf = sub.add_parser("roof", parents=[common, state], help="ensemble search for the N upper bound")
    rf.add_argument("--m-max", type=int, default=None)
    return p


def _render(result, cfg: RunConfig) -> str:
    if isinstance(result, tuple):
        header, rows = result
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()
    if cfg.fmt == "table" and "rows" in result:
        keys = ["family", "params", "nbar", "N", "N_ref", "abs_diff"]
        lines = ["  ".join(f"{k:>18}" for k in keys)]
        for r in result["rows"]:
            lines.append("  ".join(f"{r[k]:>18.10g}" if isinstance(r[k], float) else f"{r[k]:>18}" for k in keys))
        return "\n".join(lines) + "\n"
    return json.dumps(result, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real + 0.0, o.imag + 0.0]
    if isinstance(o, np.ndarray):
        return to_json_doc(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


COMMANDS = {
    "measure": cmd_measure,
    "table1": cmd_table1,
    "scan": cmd_scan,
    "mzi": cmd_mzi,
    "macro": cmd_macro,
    "roof": cmd_roof,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        dim=args.dim,
        tol=args.tol,
        seed=args.seed,
        restarts=args.restarts,
        fmt=args.fmt or ("csv" if args.command == "scan" else "json"),
        out=args.out,
        verify=args.verify,
    )
    try:
        result = COMMANDS[args.command](args, cfg)
    except SpecError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TruncationError as exc:
        print(f"{parser.prog}: truncation inadequate: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VerificationError as exc:
        print(f"{parser.prog}: verification failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = _render(result, cfg)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Minimal-deviation safety filter solved as a conic program.

    minimize   ||u - u_d||^2
    subject to A0^(k) + sum_i u_i Ai^(k)  >= 0   (PSD, one block per LMI)
               b0^(j) + b^(j) . u        >= 0   (half-space rows)
               u_i = v_i                        (equality pins)

Pins are eliminated by substitution before solving, so they hold exactly.
1x1 LMI blocks are demoted to half-space rows for conditioning and speed.
The backend is Clarabel, which takes the quadratic objective natively, so no
epigraph reformulation is needed.  Every returned solution carries a
feasibility audit (smallest eigenvalue per LMI, slack per row) recomputed
independently with the dense eigensolver, never taken from the solver.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import clarabel
import numpy as np
import scipy.sparse as sp

from .barrier import LmiConstraint
from .errors import DimensionError, DuplicatePinError, ZeroGradientError
from .symmat import eig_sym

_SQRT2 = math.sqrt(2.0)


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-7
    rel_obj_tol: float = 1e-6
    max_iter: int = 200


@dataclass(frozen=True, eq=False)
class FilterProblem:
    """One filter instance.  Constraint order is preserved for residual reporting."""

    m: int
    u_d: np.ndarray
    lmis: tuple
    halfspaces: tuple
    pins: tuple


@dataclass(frozen=True, eq=False)
class FilterSolution:
    u: np.ndarray
    objective: float
    status: SolveStatus
    lmi_min_eigs: np.ndarray
    halfspace_slacks: np.ndarray
    solve_time: float


@dataclass(frozen=True, eq=False)
class ResidualReport:
    lmi_min_eigs: np.ndarray
    halfspace_slacks: np.ndarray
    pin_errors: np.ndarray
    violations: tuple  # (kind, index, value) for every residual below -tol

    @property
    def ok(self) -> bool:
        return not self.violations


def assemble(u_d, lmis: Sequence[LmiConstraint] = (), halfspaces: Sequence = (),
             pins: Sequence = ()) -> FilterProblem:
    """Validate dimensions and freeze a filter instance.

    Assembly never pre-judges feasibility; contradictory constraints are the
    solver's verdict, not an assembly error.
    """
    u_d = np.array(u_d, dtype=float).reshape(-1)
    m = u_d.shape[0]
    lmis = tuple(lmis)
    for k, lmi in enumerate(lmis):
        if lmi.m != m:
            raise DimensionError(f"LMI {k} has {lmi.m} channels, expected {m}")
    rows = []
    for j, (b0, b) in enumerate(halfspaces):
        b = np.array(b, dtype=float).reshape(-1)
        if b.shape[0] != m:
            raise DimensionError(f"half-space {j} has {b.shape[0]} coefficients, expected {m}")
        rows.append((float(b0), b))
    pin_list = []
    seen = set()
    for idx, val in pins:
        idx = int(idx)
        if not 0 <= idx < m:
            raise DimensionError(f"pin index {idx} out of range for m={m}")
        if idx in seen:
            raise DuplicatePinError(f"duplicate pin on channel {idx}")
        seen.add(idx)
        pin_list.append((idx, float(val)))
    return FilterProblem(m, u_d, lmis, tuple(rows), tuple(pin_list))


def _svec(M: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle vectorization (column-major, off-diagonals * sqrt(2))."""
    p = M.shape[0]
    out = np.empty(p * (p + 1) // 2)
    k = 0
    for c in range(p):
        for r in range(c + 1):
            out[k] = M[r, c] * (1.0 if r == c else _SQRT2)
            k += 1
    return out


def _residuals(problem: FilterProblem, u: np.ndarray):
    lmi_eigs = np.array([eig_sym(lmi.evaluate(u)).values[0] for lmi in problem.lmis])
    slacks = np.array([b0 + b @ u for b0, b in problem.halfspaces])
    return lmi_eigs, slacks


def solve(problem: FilterProblem, settings: Optional[SolverSettings] = None) -> FilterSolution:
    """Solve the filter instance; the unique minimizer exists whenever feasible.

    Returns status INFEASIBLE when no control satisfies the constraints (the
    state has left the filter's feasibility neighborhood) and
    NUMERICAL_FAILURE when the solver stalls or its answer fails the
    independent feasibility audit at feas_tol.
    """
    t0 = time.perf_counter()
    settings = settings or SolverSettings()
    m = problem.m
    pinned = dict(problem.pins)
    free = [i for i in range(m) if i not in pinned]
    base = np.zeros(m)
    for i, v in pinned.items():
        base[i] = v

    def finish(u, status):
        if np.isfinite(u).all():
            lmi_eigs, slacks = _residuals(problem, u)
        else:
            lmi_eigs = np.full(len(problem.lmis), np.nan)
            slacks = np.full(len(problem.halfspaces), np.nan)
        if status is SolveStatus.OPTIMAL:
            bad = (lmi_eigs < -settings.feas_tol).any() or (slacks < -settings.feas_tol).any()
            if bad:
                status = SolveStatus.NUMERICAL_FAILURE
        obj = float(np.sum((u - problem.u_d) ** 2))
        return FilterSolution(u, obj, status, lmi_eigs, slacks,
                              time.perf_counter() - t0)

    # Fast path: if the pinned desired control is already feasible (to well
    # inside feas_tol), it is the minimizer outright; this also makes solving
    # idempotent, since a returned solution re-entered as u_d comes back as is.
    candidate = problem.u_d.copy()
    for i, v in pinned.items():
        candidate[i] = v
    if np.isfinite(candidate).all():
        lmi_eigs, slacks = _residuals(problem, candidate)
        snap = min(1e-8, settings.feas_tol * 0.1)
        if (lmi_eigs >= -snap).all() and (slacks >= -snap).all():
            return finish(candidate, SolveStatus.OPTIMAL)

    # Fold pins into the constant terms; demote 1x1 LMI blocks to rows.
    rows = []
    for b0, b in problem.halfspaces:
        rows.append((b0 + sum(b[i] * v for i, v in pinned.items()), b[free]))
    psd_blocks = []
    for lmi in problem.lmis:
        A0 = lmi.A0.a.copy()
        for i, v in pinned.items():
            A0 += v * lmi.Ai[i].a
        Ais = [lmi.Ai[i].a for i in free]
        if lmi.p == 1:
            rows.append((A0[0, 0], np.array([A[0, 0] for A in Ais])))
        else:
            psd_blocks.append((A0, Ais))

    nf = len(free)
    if not rows and not psd_blocks:
        return finish(candidate, SolveStatus.OPTIMAL)
    if nf == 0:
        # Everything pinned: nothing to optimize, just audit feasibility.
        lmi_eigs, slacks = _residuals(problem, base)
        feasible = (lmi_eigs >= -settings.feas_tol).all() and (slacks >= -settings.feas_tol).all()
        return finish(base, SolveStatus.OPTIMAL if feasible else SolveStatus.INFEASIBLE)

    cones = []
    blocks = []
    rhs = []
    if rows:
        blocks.append(np.array([-b for _, b in rows]).reshape(len(rows), nf))
        rhs.append(np.array([b0 for b0, _ in rows]))
        cones.append(clarabel.NonnegativeConeT(len(rows)))
    for A0, Ais in psd_blocks:
        blocks.append(-np.column_stack([_svec(A) for A in Ais]))
        rhs.append(_svec(A0))
        cones.append(clarabel.PSDTriangleConeT(A0.shape[0]))

    P = sp.identity(nf, format="csc") * 2.0
    q = -2.0 * problem.u_d[free]
    A = sp.csc_matrix(np.vstack(blocks))
    b = np.concatenate(rhs)

    cla = clarabel.DefaultSettings()
    cla.verbose = False
    cla.max_iter = settings.max_iter
    cla.tol_feas = min(1e-9, settings.feas_tol * 0.1)
    cla.tol_gap_rel = min(1e-10, settings.rel_obj_tol * 0.1)
    cla.tol_gap_abs = cla.tol_gap_rel
    try:
        result = clarabel.DefaultSolver(P, q, A, b, cones, cla).solve()
    except BaseException:
        return finish(np.full(m, np.nan), SolveStatus.NUMERICAL_FAILURE)

    name = str(result.status)
    if name in ("Solved", "AlmostSolved"):
        u = base.copy()
        u[free] = np.asarray(result.x, dtype=float)
        # finish() demotes to NUMERICAL_FAILURE if the audit disagrees.
        return finish(u, SolveStatus.OPTIMAL)
    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return finish(np.full(m, np.nan), SolveStatus.INFEASIBLE)
    return finish(np.full(m, np.nan), SolveStatus.NUMERICAL_FAILURE)


def verify_solution(problem: FilterProblem, u, tol: float) -> ResidualReport:
    """Independent feasibility audit of a candidate control.

    Recomputes every LMI's smallest eigenvalue and every half-space slack from
    scratch and flags anything below -tol.  Shares no code path with the conic
    solver beyond the problem data itself.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != problem.m:
        raise DimensionError(f"control has {u.shape[0]} entries, expected {problem.m}")
    lmi_eigs, slacks = _residuals(problem, u)
    pin_errors = np.array([u[i] - v for i, v in problem.pins])
    violations = []
    for k, val in enumerate(lmi_eigs):
        if val < -tol:
            violations.append(("lmi", k, float(val)))
    for j, val in enumerate(slacks):
        if val < -tol:
            violations.append(("halfspace", j, float(val)))
    for k, err in enumerate(pin_errors):
        if abs(err) > tol:
            violations.append(("pin", k, float(err)))
    return ResidualReport(lmi_eigs, slacks, pin_errors, tuple(violations))


def closed_form_single_scalar(u_d, b0: float, b) -> np.ndarray:
    """Unique minimizer of ||u - u_d||^2 subject to a single row b0 + b.u >= 0.

    KKT in closed form: project u_d onto the half-space.  A zero-gradient row
    is either vacuous (b0 >= 0, returns u_d) or hopeless (raises).
    """
    u_d = np.asarray(u_d, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape != u_d.shape:
        raise DimensionError(f"gradient shape {b.shape} does not match control {u_d.shape}")
    nb = float(b @ b)
    if nb == 0.0:
        if b0 >= 0:
            return u_d.copy()
        raise ZeroGradientError("violated constraint with zero gradient is infeasible")
    gap = b0 + float(b @ u_d)
    return u_d + max(0.0, -gap) / nb * b

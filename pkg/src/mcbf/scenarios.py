"""Concrete barrier instantiations and controllers.

Three scenario families:

  * connectivity maintenance for a planar swarm of single integrators, with a
    proximity-weighted graph Laplacian shifted so positive semidefiniteness of
    the barrier matrix is exactly algebraic connectivity >= eps;
  * point-agent obstacle avoidance against spectrahedral obstacles (disk,
    cylinder, half-plane box) using the indefinite barrier condition;
  * a deliberately chatter-prone baseline that treats the second Laplacian
    eigenvalue as a single scalar barrier, for comparison runs.

All dynamics are single integrators (xdot = u), so every drift Lie derivative
is zero and the input channels are the position coordinates themselves:
channel 2*i + axis belongs to agent i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .barrier import (ClassKe, MatrixBarrierEval, ScalarBarrierEval,
                      build_exponential_sd, build_general, build_indefinite,
                      build_smallest_eig, diag_from_scalars, restrict_lmi,
                      scalar_to_halfspace)
from .errors import DimensionError, NumericalFailure
from .sdp import SolveStatus, SolverSettings, assemble, closed_form_single_scalar, solve
from .symmat import SymMatrix, eig_sym


@dataclass(frozen=True, eq=False)
class SwarmState:
    """Planar agent positions (p, 2) in meters plus simulation time in seconds."""

    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise DimensionError(f"positions must have shape (p, 2), got {pos.shape}")
        if not np.isfinite(pos).all():
            raise ValueError("positions must be finite")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def p(self) -> int:
        return self.positions.shape[0]

    @property
    def m(self) -> int:
        return 2 * self.p


@dataclass(frozen=True)
class ConnectivityParams:
    """Connectivity-scenario parameters.

    R           communication range (m); adjacency weight hits zero at range
    eps         required robustness margin on algebraic connectivity
    c_alpha     linear rate of the connectivity barrier condition
    c_collision linear rate of the pairwise collision barriers
    r_agent     collision radius per agent (pairs must stay >= 2*r_agent apart)
    k_gain      proportional gain of the nominal tracking controller (1/s)
    priority_agent  index whose control is pinned to its nominal value
    """

    R: float = 1.3
    eps: float = 0.1
    c_alpha: float = 1.0
    c_collision: float = 5.0
    r_agent: float = 0.25
    k_gain: float = 1.0
    priority_agent: int = 0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.c_alpha <= 0:
            raise ValueError("c_alpha must be positive")
        if self.c_collision <= 0:
            raise ValueError("c_collision must be positive")
        if self.r_agent <= 0:
            raise ValueError("r_agent must be positive")
        if 2.0 * self.r_agent >= self.R:
            raise ValueError("need 2*r_agent < R so collision-free pairs can stay connected")
        if self.k_gain <= 0:
            raise ValueError("k_gain must be positive")


def adjacency(s: SwarmState, R: float) -> SymMatrix:
    """Proximity-weighted adjacency: exp(1 - d^2/R^2) - 1 inside range, 0 at and beyond.

    Entries live in [0, e-1], hit zero continuously at distance R, and the
    diagonal is zero.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    pos = s.positions
    p = s.p
    A = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            d2 = float(np.sum((pos[i] - pos[j]) ** 2))
            if d2 <= R * R:
                A[i, j] = A[j, i] = math.exp(1.0 - d2 / (R * R)) - 1.0
    return SymMatrix(A)


def laplacian(A: SymMatrix) -> SymMatrix:
    """Graph Laplacian D - A.  Row sums vanish, so 1 is always a kernel vector."""
    a = A.a
    if np.any(np.abs(np.diag(a)) > 0) or np.any(a < 0):
        raise ValueError("adjacency must be nonnegative with zero diagonal")
    return SymMatrix(np.diag(a.sum(axis=1)) - a)


def _laplacian_grads(pos: np.ndarray, R: float) -> np.ndarray:
    """dL/dx per input channel, shape (2p, p, p).

    In-range pair (i, j): dA_ij/dx_{i,axis} = -(2/R^2) exp(1 - d^2/R^2) d_axis
    with d = x_i - x_j; degree entries follow.  Out-of-range pairs contribute
    exactly zero (the weight's one-sided kink at distance R uses the in-range
    branch only strictly inside).
    """
    p = pos.shape[0]
    G = np.zeros((2 * p, p, p))
    for i in range(p):
        for j in range(i + 1, p):
            d = pos[i] - pos[j]
            d2 = float(d @ d)
            if d2 >= R * R:
                continue
            w = math.exp(1.0 - d2 / (R * R))
            for axis in range(2):
                gA = -(2.0 / (R * R)) * w * d[axis]
                for chan, sign in ((2 * i + axis, 1.0), (2 * j + axis, -1.0)):
                    g = sign * gA
                    G[chan, i, j] -= g
                    G[chan, j, i] -= g
                    G[chan, i, i] += g
                    G[chan, j, j] += g
    return G


def connectivity_barrier(s: SwarmState, params: ConnectivityParams) -> MatrixBarrierEval:
    """Barrier matrix H = L + (eps/p) 11^T - eps I for the swarm graph.

    H 1 = 0 identically, and on the complement of span(1) the spectrum of H is
    the Laplacian spectrum shifted down by eps, so H >= 0 iff the algebraic
    connectivity is at least eps.  Single-integrator dynamics make LfH = 0 and
    LgH the per-channel Laplacian derivatives.
    """
    p = s.p
    L = laplacian(adjacency(s, params.R))
    H = L.a + (params.eps / p) * np.ones((p, p)) - params.eps * np.eye(p)
    G = _laplacian_grads(s.positions, params.R)
    return MatrixBarrierEval(SymMatrix(H), SymMatrix.zeros(p),
                             tuple(SymMatrix(G[c]) for c in range(2 * p)))


def collision_barriers(s: SwarmState, r_agent: float) -> list:
    """One scalar barrier per unordered pair: h = ||x_i - x_j||^2 - 4 r_agent^2."""
    if r_agent <= 0:
        raise ValueError("r_agent must be positive")
    pos = s.positions
    out = []
    for i in range(s.p):
        for j in range(i + 1, s.p):
            d = pos[i] - pos[j]
            h = float(d @ d) - 4.0 * r_agent * r_agent
            Lgh = np.zeros(s.m)
            Lgh[2 * i:2 * i + 2] = 2.0 * d
            Lgh[2 * j:2 * j + 2] = -2.0 * d
            out.append(ScalarBarrierEval(h, 0.0, Lgh))
    return out


def nominal_tracking(s: SwarmState, refs, ref_rates, k_gain: float) -> np.ndarray:
    """Proportional tracking with feed-forward: u_i = k (x_i,d - x_i) + xdot_i,d."""
    if k_gain <= 0:
        raise ValueError("k_gain must be positive")
    refs = np.asarray(refs, dtype=float).reshape(s.p, 2)
    rates = np.asarray(ref_rates, dtype=float).reshape(s.p, 2)
    return (k_gain * (refs - s.positions) + rates).ravel()


_DIAG = math.sqrt(2.0) / 2.0
_STATIC_REFS = np.array([
    [-_DIAG, _DIAG],
    [_DIAG, _DIAG],
    [-_DIAG, -_DIAG],
    [(5.0 * math.sqrt(2.0) - 1.0) / 10.0, -_DIAG],
])


def five_agent_references(t: float):
    """Reference schedule of the five-agent demo.

    Agent 0 sweeps along (1 - cos(pi t / 5)) * (1/2, -1/2); the other four hold
    fixed posts on the unit diagonals (the last one slightly pulled inward).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    refs = np.zeros((5, 2))
    rates = np.zeros((5, 2))
    sweep = 1.0 - math.cos(math.pi * t / 5.0)
    refs[0] = (0.5 * sweep, -0.5 * sweep)
    dsweep = (math.pi / 5.0) * math.sin(math.pi * t / 5.0)
    rates[0] = (0.5 * dsweep, -0.5 * dsweep)
    refs[1:] = _STATIC_REFS
    return refs, rates


@dataclass(frozen=True)
class ObstacleSpec:
    """Geometry of the region to avoid.

    disk2d      disk of given center/radius
    cylinder3d  the canonical unit cylinder x1^2 + x2^2 <= 1, |x3| <= 1
    box2d       intersection of half-planes n.x + c >= 0 (must be bounded)
    """

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    faces: tuple = ()

    def __post_init__(self):
        if self.kind not in ("disk2d", "cylinder3d", "box2d"):
            raise ValueError(f"unknown obstacle kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise DimensionError("center must be a 2-vector")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        faces = tuple((np.array(n, dtype=float).reshape(2), float(c)) for n, c in self.faces)
        object.__setattr__(self, "faces", faces)
        if self.kind == "box2d":
            if not faces:
                raise ValueError("box2d needs at least one face")
            if any(np.linalg.norm(n) == 0 for n, _ in faces):
                raise ValueError("face normals must be nonzero")
            if not _faces_bounded(faces):
                raise ValueError("box faces do not bound a region")

    @staticmethod
    def disk2d(center=(0.0, 0.0), radius: float = 1.0) -> "ObstacleSpec":
        return ObstacleSpec("disk2d", center=tuple(center), radius=radius)

    @staticmethod
    def cylinder3d() -> "ObstacleSpec":
        return ObstacleSpec("cylinder3d")

    @staticmethod
    def box2d(faces) -> "ObstacleSpec":
        return ObstacleSpec("box2d", faces=tuple(faces))


def _faces_bounded(faces) -> bool:
    # {x : n_i.x + c_i >= 0 for all i} is bounded iff no direction d satisfies
    # n_i.d >= 0 for all i; in the plane that means the largest cyclic gap
    # between normal angles stays below pi.
    angles = np.sort([math.atan2(n[1], n[0]) for n, _ in faces])
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * math.pi]]))
    return bool(np.max(gaps) < math.pi - 1e-12)


def obstacle_barrier(x, spec: ObstacleSpec) -> MatrixBarrierEval:
    """Indefinite barrier eval for a point agent: safe iff the top eigenvalue of H is >= 0.

    H is the negated inside-the-obstacle certificate, affine in x, so the
    input-channel blocks are constant matrices.  Single-integrator point
    dynamics give LfH = 0.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if spec.kind == "disk2d":
        if x.shape[0] != 2:
            raise DimensionError("disk2d expects a planar point")
        d = x - np.array(spec.center)
        r = spec.radius
        H = -np.array([[r - d[0], d[1]], [d[1], r + d[0]]])
        LgH = (SymMatrix([[1.0, 0.0], [0.0, -1.0]]),
               SymMatrix([[0.0, -1.0], [-1.0, 0.0]]))
        return MatrixBarrierEval(SymMatrix(H), SymMatrix.zeros(2), LgH)
    if spec.kind == "cylinder3d":
        if x.shape[0] != 3:
            raise DimensionError("cylinder3d expects a 3-d point")
        H = np.zeros((4, 4))
        H[:2, :2] = -np.array([[1.0 - x[0], x[1]], [x[1], 1.0 + x[0]]])
        H[2, 2] = -(1.0 - x[2])
        H[3, 3] = -(1.0 + x[2])
        G0 = np.zeros((4, 4)); G0[0, 0] = 1.0; G0[1, 1] = -1.0
        G1 = np.zeros((4, 4)); G1[0, 1] = G1[1, 0] = -1.0
        G2 = np.zeros((4, 4)); G2[2, 2] = 1.0; G2[3, 3] = -1.0
        return MatrixBarrierEval(SymMatrix(H), SymMatrix.zeros(4),
                                 (SymMatrix(G0), SymMatrix(G1), SymMatrix(G2)))
    if x.shape[0] != 2:
        raise DimensionError("box2d expects a planar point")
    evals = [ScalarBarrierEval(float(n @ x + c), 0.0, n) for n, c in spec.faces]
    return diag_from_scalars(evals, negate=True)


def ones_complement_basis(p: int) -> np.ndarray:
    """Deterministic orthonormal basis (p, p-1) of the complement of span(1)."""
    if p < 2:
        raise DimensionError("need p >= 2 for a nontrivial complement of span(1)")
    v = np.ones(p) / math.sqrt(p)
    w = v - np.eye(p)[0]
    w /= np.linalg.norm(w)
    Q = np.eye(p) - 2.0 * np.outer(w, w)  # Householder mapping e1 -> 1/sqrt(p)
    return Q[:, 1:]


def in_range_pairs(s: SwarmState, R: float) -> frozenset:
    """Unordered agent pairs currently within communication range."""
    pos = s.positions
    return frozenset((i, j) for i in range(s.p) for j in range(i + 1, s.p)
                     if np.sum((pos[i] - pos[j]) ** 2) <= R * R)


def _fiedler_row(s: SwarmState, params: ConnectivityParams):
    """Half-space row treating lambda_2(L) - eps as one scalar barrier.

    The gradient v2^T (dL/dx) v2 is only valid where lambda_2 is simple; no
    guard is applied when it is not, because the resulting discontinuity is
    exactly the failure mode this baseline exists to demonstrate.
    """
    L = laplacian(adjacency(s, params.R))
    dec = eig_sym(L)
    v2 = dec.vectors[:, 1]
    h = float(dec.values[1]) - params.eps
    G = _laplacian_grads(s.positions, params.R)
    grad = np.array([float(v2 @ G[c] @ v2) for c in range(s.m)])
    return params.c_alpha * h, grad


def baseline_eigenvalue_filter(s: SwarmState, params: ConnectivityParams, u_d,
                               settings: Optional[SolverSettings] = None) -> np.ndarray:
    """Chatter-prone baseline: scalar eigenvalue barrier plus collision rows.

    With nothing but the eigenvalue row the projection is done in closed form;
    collision rows and the priority pin bring in the QP solver.
    """
    u_d = np.asarray(u_d, dtype=float).reshape(-1)
    rows = [_fiedler_row(s, params)]
    rows += [scalar_to_halfspace(ev, ClassKe.linear(params.c_collision))
             for ev in collision_barriers(s, params.r_agent)]
    pins = [(2 * params.priority_agent + axis, u_d[2 * params.priority_agent + axis])
            for axis in range(2)]
    if len(rows) == 1 and not pins:
        return closed_form_single_scalar(u_d, *rows[0])
    sol = solve(assemble(u_d, [], rows, pins), settings)
    if sol.status is not SolveStatus.OPTIMAL:
        raise NumericalFailure(f"baseline filter solve ended with status {sol.status.value}")
    return sol.u


@dataclass
class Scenario:
    """Everything the closed loop needs: references, nominal law, constraint builder.

    priority_agent is deliberately mutable so an interactive session can re-pin
    on the fly; the constraint closure reads it at call time.
    """

    name: str
    spectrum_label: str  # "laplacian" or "barrier"
    p: int
    m: int
    initial_state: SwarmState
    refs: Callable
    nominal: Callable
    constraints: Callable = None
    spectrum: Callable = None
    params_echo: dict = field(default_factory=dict)
    priority_agent: Optional[int] = None
    comm_range: Optional[float] = None
    r_agent: Optional[float] = None


_CONNECTIVITY_VARIANTS = ("exponential", "general", "smallest_eig", "baseline_eigen", "none")
_OBSTACLE_VARIANTS = ("indefinite", "none")


def connectivity_scenario(params: ConnectivityParams, filter_variant: str,
                          classK: Optional[ClassKe] = None, c_perp: float = 0.0,
                          initial_positions=None, refs_fn: Optional[Callable] = None,
                          extra_pins=(), name: str = "connectivity") -> Scenario:
    """Wire the swarm scenario for one filter variant.

    The connectivity LMI always annihilates the ones vector (H 1 = 0 and every
    derivative block inherits the zero row sums), so its blocks are restricted
    to the complement of span(1) before solving.  That removes the structural
    zero eigenvalue, restores a strict interior for the conic solver, and makes
    the logged residual the true feasibility margin.
    """
    if filter_variant not in _CONNECTIVITY_VARIANTS:
        raise ValueError(f"filter variant {filter_variant!r} not usable here")
    if refs_fn is None:
        refs_fn = five_agent_references
        if initial_positions is None:
            initial_positions = refs_fn(0.0)[0]
    initial = SwarmState(np.asarray(initial_positions, dtype=float))
    p = initial.p
    if p < 2:
        raise ValueError("connectivity needs at least two agents")
    if np.asarray(refs_fn(0.0)[0]).shape != (p, 2):
        raise DimensionError(f"reference schedule yields shape "
                             f"{np.asarray(refs_fn(0.0)[0]).shape}, expected ({p}, 2)")
    alpha = classK or ClassKe.linear(params.c_alpha)
    deflate = ones_complement_basis(p)
    alpha_col = ClassKe.linear(params.c_collision)
    extra_pins = tuple((int(i), float(v)) for i, v in extra_pins)

    scn = Scenario(
        name=name, spectrum_label="laplacian", p=p, m=2 * p,
        initial_state=initial, refs=refs_fn,
        nominal=lambda s, refs, rates: nominal_tracking(s, refs, rates, params.k_gain),
        params_echo={"R": params.R, "eps": params.eps, "c_alpha": params.c_alpha,
                     "c_collision": params.c_collision, "r_agent": params.r_agent,
                     "k_gain": params.k_gain, "priority_agent": params.priority_agent},
        priority_agent=params.priority_agent, comm_range=params.R, r_agent=params.r_agent,
    )

    def pin_rows(u_nom):
        pins = list(extra_pins)
        if scn.priority_agent is not None:
            for axis in range(2):
                chan = 2 * scn.priority_agent + axis
                pins.append((chan, float(u_nom[chan])))
        return pins

    def constraints(state: SwarmState, u_nom: np.ndarray):
        if filter_variant == "none":
            return [], [], []
        rows = [scalar_to_halfspace(ev, alpha_col)
                for ev in collision_barriers(state, params.r_agent)]
        if filter_variant == "baseline_eigen":
            return [], [_fiedler_row(state, params)] + rows, pin_rows(u_nom)
        ev = connectivity_barrier(state, params)
        if filter_variant == "exponential":
            lmi = build_exponential_sd(ev, params.c_alpha, label="connectivity")
        elif filter_variant == "general":
            lmi = build_general(ev, alpha, label="connectivity")
        else:
            lmi = build_smallest_eig(ev, alpha, c_perp, label="connectivity")
        return [restrict_lmi(lmi, deflate)], rows, pin_rows(u_nom)

    scn.constraints = constraints
    scn.spectrum = lambda state: eig_sym(laplacian(adjacency(state, params.R))).values
    return scn


def obstacle_scenario(spec: ObstacleSpec, start, target, k_gain: float,
                      classK: Optional[ClassKe] = None, c_perp: float = 1.0,
                      filter_variant: str = "indefinite", name: str = "obstacle") -> Scenario:
    """Single point agent steered straight at a target, filtered around the obstacle."""
    if filter_variant not in _OBSTACLE_VARIANTS:
        raise ValueError(f"filter variant {filter_variant!r} not usable here")
    if spec.kind == "cylinder3d":
        raise ValueError("the simulated obstacle scenarios are planar")
    start = np.asarray(start, dtype=float).reshape(2)
    target = np.asarray(target, dtype=float).reshape(2)
    alpha = classK or ClassKe.linear(1.0)
    initial = SwarmState(start.reshape(1, 2))

    def refs(t):
        return target.reshape(1, 2), np.zeros((1, 2))

    def constraints(state: SwarmState, u_nom: np.ndarray):
        if filter_variant == "none":
            return [], [], []
        ev = obstacle_barrier(state.positions[0], spec)
        return [build_indefinite(ev, alpha, c_perp, label=spec.kind)], [], []

    scn = Scenario(
        name=name, spectrum_label="barrier", p=1, m=2,
        initial_state=initial, refs=refs,
        nominal=lambda s, r, rd: nominal_tracking(s, r, rd, k_gain),
        constraints=constraints,
        spectrum=lambda state: eig_sym(obstacle_barrier(state.positions[0], spec).H).values,
        params_echo={"kind": spec.kind, "center": list(spec.center), "radius": spec.radius,
                     "faces": [[float(n[0]), float(n[1]), c] for n, c in spec.faces],
                     "start": start.tolist(), "target": target.tolist(),
                     "k_gain": k_gain, "c_perp": c_perp},
    )
    return scn

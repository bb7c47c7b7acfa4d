"""Barrier abstractions and constraint builders.

A barrier evaluation bundles the pointwise data of a safety function (value
plus Lie derivatives along the drift and each input channel).  The builders
turn one evaluation into the affine-in-u matrix inequality

    A0 + sum_i u_i * Ai  >=  0   (positive semidefinite)

that the SDP filter consumes.  Four constructions are provided, one per
barrier condition:

  * exponential semidefinite  (Hdot >= -c_alpha * H)
  * indefinite                (Hdot >= -alpha(lam_max) I - c_perp (lam_max I - H))
  * smallest-eigenvalue       (Hdot >= -alpha(lam_min) I - c_perp (H - lam_min I))
  * general spectral          (Hdot >= -alpha applied to H through its spectrum)

Diagonal stacking of scalar barriers gives Boolean composition: plain stacking
is conjunction (all constraints hold), negated stacking paired with the
indefinite condition is disjunction (at least one holds).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmptyCompositionError
from .symmat import SymMatrix, apply_classK_matrix, eig_sym

_CLASSK_KINDS = ("linear", "cubic", "scaled_tanh")


@dataclass(frozen=True)
class ClassKe:
    """Extended class-K function: continuous, strictly increasing, zero at zero.

    A closed enumeration of three families rather than an arbitrary callable,
    so configs can serialize it exactly:

        linear       r -> c * r
        cubic        r -> c * r**3
        scaled_tanh  r -> c * tanh(s * r)
    """

    kind: str
    c: float
    s: float = 1.0

    def __post_init__(self):
        if self.kind not in _CLASSK_KINDS:
            raise ValueError(f"unknown class-K kind {self.kind!r}")
        if self.c <= 0:
            raise ValueError("class-K scale c must be positive")
        if self.s <= 0:
            raise ValueError("scaled_tanh slope s must be positive")

    @staticmethod
    def linear(c: float) -> "ClassKe":
        return ClassKe("linear", c)

    @staticmethod
    def cubic(c: float) -> "ClassKe":
        return ClassKe("cubic", c)

    @staticmethod
    def scaled_tanh(c: float, s: float) -> "ClassKe":
        return ClassKe("scaled_tanh", c, s)

    def __call__(self, r):
        if self.kind == "linear":
            return self.c * np.asarray(r, dtype=float)
        if self.kind == "cubic":
            return self.c * np.asarray(r, dtype=float) ** 3
        return self.c * np.tanh(self.s * np.asarray(r, dtype=float))

    evaluate = __call__

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "c": self.c}
        if self.kind == "scaled_tanh":
            d["s"] = self.s
        return d

    @staticmethod
    def from_dict(d: dict) -> "ClassKe":
        return ClassKe(d["kind"], d["c"], d.get("s", 1.0))


@dataclass(frozen=True, eq=False)
class ScalarBarrierEval:
    """Pointwise data of a scalar barrier: value h, drift rate Lfh, input row Lgh (m,)."""

    h: float
    Lfh: float
    Lgh: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Lgh", np.array(self.Lgh, dtype=float).reshape(-1))

    @property
    def m(self) -> int:
        return self.Lgh.shape[0]


@dataclass(frozen=True, eq=False)
class MatrixBarrierEval:
    """Pointwise data of a matrix barrier: H, LfH, and one LgH block per input channel."""

    H: SymMatrix
    LfH: SymMatrix
    LgH: tuple

    def __post_init__(self):
        object.__setattr__(self, "LgH", tuple(self.LgH))
        p = self.H.dim
        if self.LfH.dim != p or any(G.dim != p for G in self.LgH):
            raise DimensionError("all blocks of a matrix barrier eval must share one dimension")

    @property
    def p(self) -> int:
        return self.H.dim

    @property
    def m(self) -> int:
        return len(self.LgH)


@dataclass(frozen=True, eq=False)
class LmiConstraint:
    """Affine-in-u matrix inequality A0 + sum_i u_i * Ai >= 0."""

    A0: SymMatrix
    Ai: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "Ai", tuple(self.Ai))
        if any(A.dim != self.A0.dim for A in self.Ai):
            raise DimensionError("LMI blocks must share one dimension")

    @property
    def p(self) -> int:
        return self.A0.dim

    @property
    def m(self) -> int:
        return len(self.Ai)

    def evaluate(self, u: np.ndarray) -> SymMatrix:
        """The constraint matrix at a given control."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape[0] != self.m:
            raise DimensionError(f"control has {u.shape[0]} entries, LMI expects {self.m}")
        acc = self.A0.a.copy()
        for ui, A in zip(u, self.Ai):
            acc += ui * A.a
        return SymMatrix(acc)


def build_exponential_sd(ev: MatrixBarrierEval, c_alpha: float, label: str = "") -> LmiConstraint:
    """LMI for the exponential semidefinite condition: LfH + sum u_i LgH_i + c_alpha H >= 0.

    For a 1x1 eval this is exactly the scalar exponential-CBF half-space.
    """
    if c_alpha <= 0:
        raise ValueError("c_alpha must be positive")
    return LmiConstraint(SymMatrix(ev.LfH.a + c_alpha * ev.H.a), ev.LgH, label)


def build_indefinite(ev: MatrixBarrierEval, alpha: ClassKe, c_perp: float = 0.0,
                     label: str = "") -> LmiConstraint:
    """LMI keeping the largest eigenvalue of H nonnegative.

    A0 = LfH + alpha(lam_max) I + c_perp (lam_max I - H).  The c_perp term
    relaxes the rate constraint on the lower eigenvalues and vanishes on the
    top eigenspace, so repeated top eigenvalues are handled exactly.
    """
    if c_perp < 0:
        raise ValueError("c_perp must be nonnegative")
    lam_max = eig_sym(ev.H).values[-1]
    eye = np.eye(ev.p)
    A0 = ev.LfH.a + float(alpha(lam_max)) * eye + c_perp * (lam_max * eye - ev.H.a)
    return LmiConstraint(SymMatrix(A0), ev.LgH, label)


def build_smallest_eig(ev: MatrixBarrierEval, alpha: ClassKe, c_perp: float = 0.0,
                       label: str = "") -> LmiConstraint:
    """LMI keeping the smallest eigenvalue of H nonnegative, with class-K rate.

    A0 = LfH + alpha(lam_min) I + c_perp (H - lam_min I).  Reduces to the
    scalar condition with alpha(h) at p = 1.
    """
    if c_perp < 0:
        raise ValueError("c_perp must be nonnegative")
    lam_min = eig_sym(ev.H).values[0]
    eye = np.eye(ev.p)
    A0 = ev.LfH.a + float(alpha(lam_min)) * eye + c_perp * (ev.H.a - lam_min * eye)
    return LmiConstraint(SymMatrix(A0), ev.LgH, label)


def build_general(ev: MatrixBarrierEval, alpha: ClassKe, label: str = "") -> LmiConstraint:
    """LMI with the class-K function applied to H spectrally: A0 = LfH + alpha(H).

    With linear alpha this coincides with build_exponential_sd, since applying
    r -> c*r through the spectrum is just c*H.
    """
    return LmiConstraint(SymMatrix(ev.LfH.a + apply_classK_matrix(ev.H, alpha).a), ev.LgH, label)


def diag_from_scalars(bars: Sequence[ScalarBarrierEval], negate: bool) -> MatrixBarrierEval:
    """Stack scalar barriers into a diagonal matrix barrier.

    negate=False gives H_ii = h_i (conjunction: the semidefinite safe set is
    the intersection of the scalar safe sets).  negate=True gives H_ii = -h_i,
    meant for the indefinite condition (disjunction: safe once any h_i <= 0,
    with the h_i describing the region to avoid).
    """
    bars = list(bars)
    if not bars:
        raise EmptyCompositionError("cannot compose zero scalar barriers")
    m = bars[0].m
    if any(b.m != m for b in bars):
        raise DimensionError("scalar barriers disagree on the input dimension")
    sign = -1.0 if negate else 1.0
    H = SymMatrix(np.diag([sign * b.h for b in bars]))
    LfH = SymMatrix(np.diag([sign * b.Lfh for b in bars]))
    LgH = tuple(SymMatrix(np.diag([sign * b.Lgh[k] for b in bars])) for k in range(m))
    return MatrixBarrierEval(H, LfH, LgH)


def scalar_to_halfspace(ev: ScalarBarrierEval, alpha: ClassKe):
    """Scalar barrier condition as a half-space row (b0, b): b0 + b.u >= 0."""
    return ev.Lfh + float(alpha(ev.h)), ev.Lgh.copy()


def restrict_lmi(lmi: LmiConstraint, basis: np.ndarray, label: str = "") -> LmiConstraint:
    """Restrict every block of an LMI to a subspace: A -> Q^T A Q.

    Valid as an equivalent reformulation only when the orthogonal complement
    of span(Q) lies in the kernel of every block (then semidefiniteness on the
    subspace is semidefiniteness, full stop).  Used to deflate structural
    nullspaces that would otherwise deny the constraint a strict interior.
    """
    Q = np.asarray(basis, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != lmi.p:
        raise DimensionError(f"basis shape {Q.shape} does not match LMI dimension {lmi.p}")
    proj = lambda A: SymMatrix(Q.T @ A.a @ Q)
    return LmiConstraint(proj(lmi.A0), tuple(proj(A) for A in lmi.Ai), label or lmi.label)

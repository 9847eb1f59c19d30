"""Entropic functionals in bits.

Quantum quantities act on :class:`~qotp.linalg.DensityMatrix` values and
name subsystems by register.  Classical counterparts act on dense pmf
tables and are used both for the wiretap objective and as independent
cross-checks of the quantum code on diagonal states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import tolerances
from .errors import InvalidEnsemble, NotStochastic, PartitionError
from .linalg import DensityMatrix, PureState, RegisterLayout, as_names

__all__ = [
    "spectrum_entropy",
    "von_neumann",
    "subsystem_entropy",
    "mutual_info",
    "cond_mutual_info",
    "Ensemble",
    "holevo",
    "ClassicalJoint",
    "shannon",
    "classical_mutual_info",
    "classical_cmi",
    "diagonal_state",
    "classical_objective",
]


def spectrum_entropy(evals: np.ndarray) -> float:
    """``-sum l log2 l`` with eigenvalues below the clip threshold dropped."""
    evals = np.asarray(evals, dtype=float)
    p = evals[evals > tolerances().eig_clip]
    return float(-np.sum(p * np.log2(p))) if p.size else 0.0


def von_neumann(rho: DensityMatrix) -> float:
    if isinstance(rho, PureState):
        return 0.0
    return spectrum_entropy(np.linalg.eigvalsh(rho.matrix))


def subsystem_entropy(rho: DensityMatrix, names: str | Iterable[str]) -> float:
    names = as_names(names)
    if not names:
        return 0.0
    return von_neumann(rho.reduced(names))


def _check_parts(layout: RegisterLayout, *parts: tuple[str, ...], cover: bool = True) -> None:
    flat = [n for p in parts for n in p]
    if len(set(flat)) != len(flat):
        raise PartitionError(f"register groups {parts} overlap")
    unknown = set(flat) - set(layout.names)
    if unknown:
        raise PartitionError(f"unknown registers {sorted(unknown)}")
    if cover and set(flat) != set(layout.names):
        missing = sorted(set(layout.names) - set(flat))
        raise PartitionError(f"registers {missing} belong to no group; trace them out first")


def mutual_info(rho: DensityMatrix, part_a, part_b) -> float:
    """``I(A:B) = S(A) + S(B) - S(AB)``; the two parts must cover ``rho``."""
    a, b = as_names(part_a), as_names(part_b)
    _check_parts(rho.layout, a, b)
    return subsystem_entropy(rho, a) + subsystem_entropy(rho, b) - von_neumann(rho)


def cond_mutual_info(rho: DensityMatrix, a, b, cond) -> float:
    """``I(a:B|c) = S(ac) + S(Bc) - S(aBc) - S(c)``; groups must cover ``rho``."""
    a, b, c = as_names(a), as_names(b), as_names(cond)
    _check_parts(rho.layout, a, b, c)
    return (
        subsystem_entropy(rho, a + c)
        + subsystem_entropy(rho, b + c)
        - von_neumann(rho)
        - subsystem_entropy(rho, c)
    )


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Probability-weighted states on one common layout."""

    items: tuple[tuple[float, DensityMatrix], ...]

    def __post_init__(self):
        items = tuple(
            (float(p), s.density() if isinstance(s, PureState) else s) for p, s in self.items
        )
        if not items:
            raise InvalidEnsemble("empty ensemble")
        tol = tolerances().probability
        if any(p < -tol for p, _ in items):
            raise InvalidEnsemble("negative probability")
        if abs(sum(p for p, _ in items) - 1.0) > tol:
            raise InvalidEnsemble("probabilities do not sum to 1")
        layout = items[0][1].layout
        if any(s.layout != layout for _, s in items):
            raise InvalidEnsemble("ensemble members live on different layouts")
        object.__setattr__(self, "items", items)

    @classmethod
    def uniform(cls, states: Sequence[DensityMatrix]) -> "Ensemble":
        return cls(tuple((1.0 / len(states), s) for s in states))

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.items])

    @property
    def layout(self) -> RegisterLayout:
        return self.items[0][1].layout

    def average(self) -> DensityMatrix:
        m = sum(p * s.matrix for p, s in self.items)
        return DensityMatrix(self.layout, m / np.trace(m).real)

    def map(self, fn) -> "Ensemble":
        """Apply ``fn`` to every member, keeping the weights."""
        return Ensemble(tuple((p, fn(s)) for p, s in self.items))

    def to_json(self) -> dict:
        return {"items": [{"p": p, "state": s.to_json()} for p, s in self.items]}

    @classmethod
    def from_json(cls, data) -> "Ensemble":
        return cls(tuple((it["p"], DensityMatrix.from_json(it["state"])) for it in data["items"]))


def holevo(e: Ensemble) -> float:
    """``S(sum p rho) - sum p S(rho)``."""
    return von_neumann(e.average()) - sum(p * von_neumann(s) for p, s in e.items if p > 0)


# --- classical ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassicalJoint:
    """Dense joint pmf; axis ``i`` is the variable ``names[i]``."""

    pmf: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        p = np.array(self.pmf, dtype=float)
        names = tuple(self.names) or tuple(f"X{i}" for i in range(p.ndim))
        if len(names) != p.ndim:
            raise PartitionError(f"{len(names)} names for a {p.ndim}-variable pmf")
        tol = tolerances().pmf
        if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
            raise NotStochastic("joint pmf must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)
        object.__setattr__(self, "names", names)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.pmf.shape

    def axes(self, names: str | Iterable[str]) -> tuple[int, ...]:
        try:
            return tuple(self.names.index(n) for n in as_names(names))
        except ValueError:
            raise PartitionError(f"unknown variables in {names}") from None

    def entropy(self, names: str | Iterable[str]) -> float:
        return _marginal_entropy(self.pmf, self.axes(names))


def shannon(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _marginal_entropy(pmf: np.ndarray, keep: Sequence[int]) -> float:
    drop = tuple(i for i in range(pmf.ndim) if i not in keep)
    return shannon(pmf.sum(axis=drop)) if keep else 0.0


def classical_mutual_info(pmf: np.ndarray, x: Sequence[int], y: Sequence[int]) -> float:
    x, y = tuple(x), tuple(y)
    return _marginal_entropy(pmf, x) + _marginal_entropy(pmf, y) - _marginal_entropy(pmf, x + y)


def classical_cmi(pmf: np.ndarray, x: Sequence[int], y: Sequence[int], z: Sequence[int]) -> float:
    """``I(X:Y|Z) = H(XZ) + H(YZ) - H(XYZ) - H(Z)`` over axis groups."""
    x, y, z = tuple(x), tuple(y), tuple(z)
    return (
        _marginal_entropy(pmf, x + z)
        + _marginal_entropy(pmf, y + z)
        - _marginal_entropy(pmf, x + y + z)
        - _marginal_entropy(pmf, z)
    )


def diagonal_state(joint: ClassicalJoint) -> DensityMatrix:
    """Embed a pmf as the diagonal state ``sum p(x) |x><x|``, one register per variable."""
    layout = RegisterLayout(tuple(zip(joint.names, joint.shape)))
    return DensityMatrix(layout, np.diag(joint.pmf.ravel().astype(complex)))


def _check_stochastic(chan: np.ndarray, n_in: int, label: str) -> np.ndarray:
    chan = np.asarray(chan, dtype=float)
    tol = tolerances().probability
    if chan.ndim != 2 or chan.shape[1] != n_in:
        raise NotStochastic(f"{label} must have {n_in} columns (one per input symbol), got {chan.shape}")
    if np.any(chan < -tol) or np.any(np.abs(chan.sum(axis=0) - 1.0) > tol):
        raise NotStochastic(f"{label} columns must be probability vectors")
    return chan


def classical_objective(joint: ClassicalJoint, chan_xv, chan_vu) -> float:
    """Wiretap objective ``I(V:Y|U) - I(V:Z|U)`` for a fixed pair of channels.

    ``V`` is generated from ``X`` by ``chan_xv[v, x] = P(v|x)`` and ``U`` from
    ``V`` by ``chan_vu[u, v] = P(u|v)``; each column is a conditional pmf.  The
    conditioning variable ``U`` is therefore a degraded copy of ``V``, which is
    the ordering under which the objective is non-trivial.  A single-row
    ``chan_vu`` makes ``U`` constant, giving ``I(V:Y) - I(V:Z)``.

    Parameters
    ----------
    joint : ClassicalJoint
        ``P_XYZ`` with axes in that order.
    chan_xv, chan_vu : array_like
        Column-stochastic matrices.

    Returns
    -------
    float
        Objective in bits; may be negative.
    """
    p = joint.pmf
    if p.ndim != 3:
        raise PartitionError("classical objective needs a three-variable pmf P_XYZ")
    cxv = _check_stochastic(chan_xv, p.shape[0], "chan_xv")
    cvu = _check_stochastic(chan_vu, cxv.shape[0], "chan_vu")
    full = np.einsum("uv,vx,xyz->vuxyz", cvu, cxv, p)
    v, u, y, z = (0,), (1,), (3,), (4,)
    return classical_cmi(full, v, y, u) - classical_cmi(full, v, z, u)

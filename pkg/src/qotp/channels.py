"""CPTP maps, Weyl operators, Haar unitaries and symmetric side channels.

A :class:`QuantumChannel` keeps the representation it was built from
(Kraus operators or a Stinespring isometry with a named environment) and
derives the other one on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import tolerances
from .errors import BadDimension, NotCPTP, NotSymmetric, NotUnitary, ShapeError
from .linalg import (
    DensityMatrix,
    PureState,
    RegisterLayout,
    hermitize,
    is_unitary,
    lift_operator,
    matrix_from_json,
    matrix_to_json,
)

__all__ = [
    "Isometry",
    "QuantumChannel",
    "WeylSet",
    "weyl_set",
    "shift",
    "clock",
    "haar_unitary",
    "apply_channel",
    "apply_isometry",
    "controlled_isometry",
    "swap_operator",
    "symmetric_side_channel",
    "symmetric_erasure_isometry",
    "symmetrize_isometry",
    "identity_channel",
    "depolarizing_channel",
]


def _isometry_defect(v: np.ndarray) -> float:
    return float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])), initial=0.0))


@dataclass(frozen=True, eq=False)
class Isometry:
    """``V`` with ``V^dag V = I``; columns index the input, rows ``output``."""

    matrix: np.ndarray
    output: RegisterLayout

    def __post_init__(self):
        v = np.array(self.matrix, dtype=complex)
        if v.ndim != 2 or v.shape[0] != self.output.total_dim:
            raise ShapeError(f"isometry shape {v.shape} does not match output dimension {self.output.total_dim}")
        if v.shape[0] < v.shape[1]:
            raise ShapeError("isometry needs out_dim >= in_dim")
        if _isometry_defect(v) > tolerances().isometry:
            raise NotCPTP("matrix is not an isometry")
        v.setflags(write=False)
        object.__setattr__(self, "matrix", v)

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> dict:
        return {"matrix": matrix_to_json(self.matrix), "output": self.output.to_json()}

    @classmethod
    def from_json(cls, data) -> "Isometry":
        return cls(matrix_from_json(data["matrix"]), RegisterLayout.from_json(data["output"]))


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map stored as Kraus operators or as a Stinespring dilation.

    ``output`` names the registers the channel produces; ``None`` means the
    output replaces the input registers one for one (dimensions unchanged).
    For a Stinespring channel ``output`` is the isometry's output without
    ``env``.
    """

    in_dim: int
    out_dim: int
    kraus_ops: tuple[np.ndarray, ...] | None = None
    stinespring: Isometry | None = None
    env: str | None = None
    output: RegisterLayout | None = None

    @classmethod
    def from_kraus(cls, ops: Iterable[np.ndarray], output: RegisterLayout | None = None) -> "QuantumChannel":
        ops = tuple(np.array(k, dtype=complex) for k in ops)
        if not ops:
            raise NotCPTP("no Kraus operators")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops) or len(shape) != 2:
            raise ShapeError("Kraus operators must share one 2-D shape")
        completeness = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(completeness - np.eye(shape[1]))) > tolerances().kraus:
            raise NotCPTP("Kraus operators are not trace preserving")
        if output is not None and output.total_dim != shape[0]:
            raise ShapeError("output layout dimension does not match Kraus operators")
        for k in ops:
            k.setflags(write=False)
        return cls(in_dim=shape[1], out_dim=shape[0], kraus_ops=ops, output=output)

    @classmethod
    def from_stinespring(cls, iso: Isometry, env: str | Iterable[str]) -> "QuantumChannel":
        env_names = iso.output.check(env)
        out = iso.output.without(env_names)
        # merge several environment registers into one label when needed
        env_label = env_names[0] if len(env_names) == 1 else "+".join(env_names)
        if len(env_names) > 1:
            idx = _order_index(iso.output, out.names + env_names)
            merged = RegisterLayout(out.registers + ((env_label, iso.output.dim_of(env_names)),))
            iso = Isometry(iso.matrix[idx], merged)
        return cls(in_dim=iso.in_dim, out_dim=out.total_dim, stinespring=iso, env=env_label, output=out)

    @classmethod
    def from_unitary(cls, u: np.ndarray, output: RegisterLayout | None = None) -> "QuantumChannel":
        u = np.asarray(u, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ShapeError(f"unitary must be square, got {u.shape}")
        if not is_unitary(u):
            raise NotUnitary("matrix is not unitary")
        return cls.from_kraus([u], output)

    @cached_property
    def kraus(self) -> tuple[np.ndarray, ...]:
        if self.kraus_ops is not None:
            return self.kraus_ops
        iso = self.stinespring
        order = self.output.names + (self.env,)
        v = iso.matrix[_order_index(iso.output, order)]
        d_env = iso.output.dim(self.env)
        blocks = v.reshape(self.out_dim, d_env, self.in_dim)
        ops = [blocks[:, e, :].copy() for e in range(d_env)]
        return tuple(k for k in ops if np.any(np.abs(k) > 0)) or (ops[0],)

    @cached_property
    def isometry(self) -> Isometry:
        """Stinespring isometry with output ordered ``(output..., env)``."""
        if self.stinespring is not None:
            iso = self.stinespring
            order = self.output.names + (self.env,)
            return Isometry(iso.matrix[_order_index(iso.output, order)], iso.output.select(order))
        ops = self.kraus_ops
        env = "env"
        out = self.output if self.output is not None else RegisterLayout((("out", self.out_dim),))
        while env in out:
            env += "_"
        v = np.stack(ops, axis=1).reshape(self.out_dim * len(ops), self.in_dim)
        return Isometry(v, out.concat(RegisterLayout(((env, len(ops)),))))

    @property
    def env_name(self) -> str:
        return self.env if self.env is not None else self.isometry.output.names[-1]

    def choi(self) -> np.ndarray:
        """Unnormalised Choi matrix ``sum_ij |i><j| (x) N(|i><j|)``."""
        d = self.in_dim
        out = np.zeros((d * self.out_dim,) * 2, dtype=complex)
        for k in self.kraus:
            vec = np.einsum("oi->io", k).reshape(-1)  # sum_i |i> (x) K|i>
            out += np.outer(vec, vec.conj())
        return out

    def act(self, m: np.ndarray) -> np.ndarray:
        """Apply the map to a bare operator on the input space."""
        return sum(k @ m @ k.conj().T for k in self.kraus)

    def to_json(self) -> dict:
        out = self.output.to_json() if self.output is not None else None
        if self.kraus_ops is not None:
            return {"kind": "kraus", "in_dim": self.in_dim, "out_dim": self.out_dim,
                    "matrices": [matrix_to_json(k) for k in self.kraus_ops], "output": out}
        return {"kind": "stinespring", "in_dim": self.in_dim, "out_dim": self.out_dim,
                "isometry": self.stinespring.to_json(), "env": self.env, "output": out}

    @classmethod
    def from_json(cls, data) -> "QuantumChannel":
        kind = data.get("kind")
        if kind == "kraus":
            out = data.get("output")
            return cls.from_kraus([matrix_from_json(m) for m in data["matrices"]],
                                  RegisterLayout.from_json(out) if out else None)
        if kind == "stinespring":
            return cls.from_stinespring(Isometry.from_json(data["isometry"]), data["env"])
        raise ShapeError(f"unknown channel kind {kind!r}")


def _order_index(layout: RegisterLayout, order: Sequence[str]) -> np.ndarray:
    return np.arange(layout.total_dim).reshape(layout.dims).transpose(
        [layout.index(n) for n in order]).ravel()


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel.from_kraus([np.eye(d)])


def depolarizing_channel(d: int) -> QuantumChannel:
    """Completely depolarizing map ``rho -> I/d`` via the Weyl twirl."""
    return QuantumChannel.from_kraus([w / d for w in weyl_set(d).operators])


# --- Weyl operators -------------------------------------------------------------


def shift(d: int) -> np.ndarray:
    """``X|j> = |j+1 mod d>``."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def clock(d: int) -> np.ndarray:
    """``Z|j> = w^j |j>`` with ``w = exp(2 pi i / d)``."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


@dataclass(frozen=True, eq=False)
class WeylSet:
    """The ``d^2`` clock-and-shift unitaries ``X^a Z^b``, ordered by ``(a, b)``."""

    d: int
    operators: tuple[np.ndarray, ...]

    def op(self, a: int, b: int) -> np.ndarray:
        return self.operators[(a % self.d) * self.d + (b % self.d)]

    @property
    def labels(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.d) for b in range(self.d)]

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)


def weyl_set(d: int) -> WeylSet:
    if int(d) != d or d < 2:
        raise BadDimension(f"Weyl set needs d >= 2, got {d}")
    d = int(d)
    x, z = shift(d), clock(d)
    ops = []
    for a in range(d):
        xa = np.linalg.matrix_power(x, a)
        for b in range(d):
            w = xa @ np.linalg.matrix_power(z, b)
            w.setflags(write=False)
            ops.append(w)
    return WeylSet(d, tuple(ops))


def haar_unitary(d: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary (QR of a Ginibre matrix, phase-fixed)."""
    rng = np.random.default_rng(rng)
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


# --- application ------------------------------------------------------------------


def apply_channel(ch: QuantumChannel, rho: DensityMatrix, targets: str | Iterable[str]) -> DensityMatrix:
    """Apply ``ch`` to ``targets``; its output registers take their place."""
    if isinstance(rho, PureState):
        rho = rho.density()
    targets = rho.layout.check(targets)
    if rho.layout.dim_of(targets) != ch.in_dim:
        raise ShapeError(f"channel input dim {ch.in_dim} does not match targets {targets}")
    output = ch.output
    if output is None:
        if ch.out_dim != ch.in_dim:
            raise ShapeError("channel changes dimension but names no output registers")
        output = rho.layout.select(targets)
    out = None
    layout = None
    for k in ch.kraus:
        full, layout = lift_operator(k, rho.layout, targets, output)
        term = full @ rho.matrix @ full.conj().T
        out = term if out is None else out + term
    return DensityMatrix(layout, hermitize(out))


def apply_isometry(iso: Isometry, state, targets: str | Iterable[str]):
    """Apply an isometry to a pure or mixed state; pure stays pure."""
    targets = state.layout.check(targets)
    full, layout = lift_operator(iso.matrix, state.layout, targets, iso.output)
    if isinstance(state, PureState):
        return PureState(layout, full @ state.amplitudes)
    return DensityMatrix(layout, hermitize(full @ state.matrix @ full.conj().T))


def controlled_isometry(isos: Sequence[Isometry], control: str | tuple[str, int]) -> Isometry:
    """``sum_k |k><k|_control (x) V_k``; input and output are ``control (x) ...``."""
    if not isos:
        raise ShapeError("need at least one isometry")
    name, dim = (control, len(isos)) if isinstance(control, str) else control
    if dim != len(isos):
        raise ShapeError(f"control dimension {dim} != number of isometries {len(isos)}")
    shape = isos[0].matrix.shape
    out = isos[0].output
    if any(v.matrix.shape != shape or v.output.dims != out.dims for v in isos):
        raise ShapeError("controlled blocks must share input/output dimensions")
    m = np.zeros((dim * shape[0], dim * shape[1]), dtype=complex)
    for k, v in enumerate(isos):
        m[k * shape[0]:(k + 1) * shape[0], k * shape[1]:(k + 1) * shape[1]] = v.matrix
    return Isometry(m, RegisterLayout(((name, dim),)).concat(out))


# --- symmetric side channels -----------------------------------------------------


def swap_operator(layout: RegisterLayout, first: str, second: str) -> np.ndarray:
    """Permutation matrix exchanging two equal-dimension registers."""
    if layout.dim(first) != layout.dim(second):
        raise ShapeError(f"cannot swap {first!r} and {second!r}: dimensions differ")
    names = list(layout.names)
    i, j = layout.index(first), layout.index(second)
    names[i], names[j] = names[j], names[i]
    idx = _order_index(layout, names)
    return np.eye(layout.total_dim)[idx]


def symmetric_side_channel(v: Isometry, part_b: str, part_e: str) -> QuantumChannel:
    """Channel ``psi -> Tr_E(V psi V^dag)`` for a swap-invariant isometry.

    Raises :class:`NotSymmetric` unless ``||SWAP_BE V - V||_op`` is within
    the symmetry tolerance.
    """
    v.output.check([part_b, part_e])
    swap = swap_operator(v.output, part_b, part_e)
    defect = float(np.linalg.norm(swap @ v.matrix - v.matrix, ord=2))
    if defect > tolerances().symmetry:
        raise NotSymmetric(f"SWAP.V differs from V by {defect:.3e} in operator norm")
    return QuantumChannel.from_stinespring(v, part_e)


def symmetric_erasure_isometry(d: int, b: str = "B", e: str = "E") -> Isometry:
    """``|a> -> (|a>_B |flag>_E + |flag>_B |a>_E)/sqrt 2`` with ``flag = d``."""
    layout = RegisterLayout(((b, d + 1), (e, d + 1)))
    m = np.zeros((layout.total_dim, d), dtype=complex)
    for a in range(d):
        m[a * (d + 1) + d, a] += 1 / np.sqrt(2)
        m[d * (d + 1) + a, a] += 1 / np.sqrt(2)
    return Isometry(m, layout)


def symmetrize_isometry(v: np.ndarray, output: RegisterLayout, part_b: str, part_e: str) -> Isometry:
    """Project columns onto the B/E symmetric subspace and re-orthonormalise."""
    swap = swap_operator(output, part_b, part_e)
    w = 0.5 * (v + swap @ v)
    # polar factor keeps the column span, hence the symmetry
    u, _, vh = np.linalg.svd(w, full_matrices=False)
    return Isometry(u @ vh, output)

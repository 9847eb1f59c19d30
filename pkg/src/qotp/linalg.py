"""Dense complex linear algebra over named tensor-product registers.

Operators are plain ``numpy`` complex arrays.  States carry a
:class:`RegisterLayout` so that subsystem operations are addressed by
register name; internally every operation permutes the tensor factors into
a canonical order, acts, and permutes back.

All values are immutable: arrays held by states are flagged read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import tolerances
from .errors import (
    InvalidState,
    NameCollision,
    NoSuchRegister,
    NotHermitian,
    NotUnitary,
    ShapeError,
)

__all__ = [
    "RegisterLayout",
    "DensityMatrix",
    "PureState",
    "as_names",
    "tensor",
    "partial_trace",
    "purify",
    "trace_norm",
    "eigh",
    "apply_unitary",
    "lift_operator",
    "is_unitary",
    "hermitize",
    "matrix_to_json",
    "matrix_from_json",
]


def as_names(names: str | Iterable[str] | None) -> tuple[str, ...]:
    """Normalise a register argument (one name or many) into a tuple."""
    if names is None:
        return ()
    if isinstance(names, str):
        return (names,)
    return tuple(names)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered, uniquely named tensor factors ``((name, dim), ...)``."""

    registers: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        regs = tuple((str(n), int(d)) for n, d in self.registers)
        seen = set()
        for name, dim in regs:
            if name in seen:
                raise NameCollision(f"register {name!r} appears twice")
            if dim < 1:
                raise ShapeError(f"register {name!r} has dimension {dim} < 1")
            seen.add(name)
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, **dims: int) -> "RegisterLayout":
        return cls(tuple(dims.items()))

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @cached_property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.registers)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise NoSuchRegister(f"no register {name!r} in layout {self.names}") from None

    def dim(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def dim_of(self, names: str | Iterable[str]) -> int:
        return int(np.prod([self.dim(n) for n in as_names(names)], dtype=np.int64))

    def check(self, names: str | Iterable[str]) -> tuple[str, ...]:
        names = as_names(names)
        for n in names:
            self.index(n)
        if len(set(names)) != len(names):
            raise NameCollision(f"register list {names} repeats a name")
        return names

    def select(self, names: str | Iterable[str]) -> "RegisterLayout":
        """Sub-layout in the order given by ``names``."""
        names = self.check(names)
        return RegisterLayout(tuple((n, self.dim(n)) for n in names))

    def without(self, names: str | Iterable[str]) -> "RegisterLayout":
        drop = set(self.check(names))
        return RegisterLayout(tuple(r for r in self.registers if r[0] not in drop))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        clash = set(self.names) & set(other.names)
        if clash:
            raise NameCollision(f"registers {sorted(clash)} present on both sides")
        return RegisterLayout(self.registers + other.registers)

    def relabel(self, mapping: Mapping[str, str]) -> "RegisterLayout":
        for n in mapping:
            self.index(n)
        return RegisterLayout(tuple((mapping.get(n, n), d) for n, d in self.registers))

    def to_json(self) -> list[dict]:
        return [{"name": n, "dim": d} for n, d in self.registers]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "RegisterLayout":
        return cls(tuple((r["name"], r["dim"]) for r in data))


def _perm_indices(layout: RegisterLayout, order: Sequence[str]) -> np.ndarray:
    """Flat index map taking a vector in ``layout`` order to ``order``."""
    perm = [layout.index(n) for n in order]
    if len(layout) == 0:
        return np.zeros(1, dtype=np.int64)
    return np.arange(layout.total_dim).reshape(layout.dims).transpose(perm).ravel()


def _reorder_matrix(m: np.ndarray, layout: RegisterLayout, order: Sequence[str]) -> np.ndarray:
    idx = _perm_indices(layout, order)
    return m[np.ix_(idx, idx)]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive, unit-trace operator on a named register layout."""

    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise ShapeError(f"matrix shape {m.shape} does not match layout dimension {n}")
        tol = tolerances()
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol.hermitian:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol.trace:
            raise InvalidState(f"density matrix trace {np.trace(m).real:.3e} != 1")
        if np.linalg.eigvalsh(m)[0] < -tol.positivity:
            raise InvalidState("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def _trusted(cls, layout: RegisterLayout, m: np.ndarray) -> "DensityMatrix":
        """Skip validation for results of positivity-preserving operations."""
        m = np.asarray(m, dtype=complex)
        if m.shape != (layout.total_dim,) * 2:
            raise ShapeError(f"matrix shape {m.shape} does not match layout dimension {layout.total_dim}")
        obj = object.__new__(cls)
        object.__setattr__(obj, "layout", layout)
        object.__setattr__(obj, "matrix", _frozen(m))
        return obj

    @classmethod
    def from_pure(cls, psi: "PureState") -> "DensityMatrix":
        v = psi.amplitudes
        return cls._trusted(psi.layout, hermitize(np.outer(v, v.conj())))

    @classmethod
    def maximally_mixed(cls, layout: RegisterLayout) -> "DensityMatrix":
        n = layout.total_dim
        return cls(layout, np.eye(n) / n)

    @classmethod
    def basis(cls, layout: RegisterLayout, *digits: int) -> "DensityMatrix":
        """Computational basis projector ``|digits><digits|``."""
        return cls.from_pure(PureState.basis(layout, *digits))

    @property
    def names(self) -> tuple[str, ...]:
        return self.layout.names

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def reduced(self, keep: str | Iterable[str]) -> "DensityMatrix":
        """Reduced state on ``keep`` (in the order given)."""
        keep = self.layout.check(keep)
        rho = partial_trace(self, [n for n in self.names if n not in keep])
        return rho.reorder(keep)

    def reorder(self, order: Sequence[str]) -> "DensityMatrix":
        order = as_names(order)
        if sorted(order) != sorted(self.names):
            raise NoSuchRegister(f"reorder {order} is not a permutation of {self.names}")
        return DensityMatrix._trusted(self.layout.select(order), _reorder_matrix(self.matrix, self.layout, order))

    def relabel(self, mapping: Mapping[str, str]) -> "DensityMatrix":
        return DensityMatrix._trusted(self.layout.relabel(mapping), self.matrix)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def to_json(self) -> dict:
        return {"registers": self.layout.to_json(), "matrix": _entries_to_json(self.matrix)}

    @classmethod
    def from_json(cls, data: Mapping) -> "DensityMatrix":
        layout = RegisterLayout.from_json(data["registers"])
        n = layout.total_dim
        return cls(layout, _entries_from_json(data["matrix"]).reshape(n, n))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector on a named register layout."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        if v.shape != (self.layout.total_dim,):
            raise ShapeError(f"{v.size} amplitudes for layout dimension {self.layout.total_dim}")
        if abs(np.linalg.norm(v) - 1.0) > tolerances().pure_norm:
            raise InvalidState(f"state norm {np.linalg.norm(v):.15f} != 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @classmethod
    def basis(cls, layout: RegisterLayout, *digits: int) -> "PureState":
        if len(digits) != len(layout):
            raise ShapeError("one digit per register required")
        v = np.zeros(layout.total_dim, dtype=complex)
        v[np.ravel_multi_index(digits, layout.dims) if layout.registers else 0] = 1.0
        return cls(layout, v)

    @classmethod
    def normalized(cls, layout: RegisterLayout, amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(layout, v / np.linalg.norm(v))

    @classmethod
    def maximally_entangled(cls, first: str, second: str, d: int) -> "PureState":
        """``(1/sqrt d) sum_k |k>|k>`` on registers ``first``, ``second``."""
        return cls(RegisterLayout(((first, d), (second, d))), np.eye(d).ravel() / np.sqrt(d))

    @property
    def names(self) -> tuple[str, ...]:
        return self.layout.names

    def density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)

    def reorder(self, order: Sequence[str]) -> "PureState":
        order = as_names(order)
        if sorted(order) != sorted(self.names):
            raise NoSuchRegister(f"reorder {order} is not a permutation of {self.names}")
        return PureState(self.layout.select(order), self.amplitudes[_perm_indices(self.layout, order)])

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        return PureState(self.layout.relabel(mapping), self.amplitudes)

    def to_json(self) -> dict:
        return {"registers": self.layout.to_json(), "amplitudes": _entries_to_json(self.amplitudes)}

    @classmethod
    def from_json(cls, data: Mapping) -> "PureState":
        return cls(RegisterLayout.from_json(data["registers"]), _entries_from_json(data["amplitudes"]))


def _entries_to_json(a: np.ndarray) -> list[list[float]]:
    flat = np.asarray(a).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _entries_from_json(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ShapeError("complex entries must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": _entries_to_json(m)}


def matrix_from_json(data: Mapping) -> np.ndarray:
    rows, cols = int(data["rows"]), int(data["cols"])
    flat = _entries_from_json(data["entries"])
    if flat.size != rows * cols:
        raise ShapeError(f"{flat.size} entries for a {rows}x{cols} matrix")
    return flat.reshape(rows, cols)


def tensor(x, y):
    """Tensor product of two states with disjoint register names.

    Two :class:`PureState` arguments give a :class:`PureState`; anything else
    is promoted to :class:`DensityMatrix`.
    """
    layout = x.layout.concat(y.layout)
    if isinstance(x, PureState) and isinstance(y, PureState):
        return PureState(layout, np.kron(x.amplitudes, y.amplitudes))
    x = x.density() if isinstance(x, PureState) else x
    y = y.density() if isinstance(y, PureState) else y
    return DensityMatrix._trusted(layout, np.kron(x.matrix, y.matrix))


def partial_trace(rho: DensityMatrix, discard: str | Iterable[str]) -> DensityMatrix:
    """Trace out ``discard``; remaining registers keep their relative order.

    Discarding every register yields the 1x1 state on the empty layout.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    discard = rho.layout.check(discard)
    if not discard:
        return rho
    keep = [n for n in rho.names if n not in discard]
    dk = rho.layout.dim_of(keep)
    dd = rho.layout.dim_of(discard)
    m = _reorder_matrix(rho.matrix, rho.layout, keep + list(discard))
    reduced = np.einsum("ijkj->ik", m.reshape(dk, dd, dk, dd))
    return DensityMatrix._trusted(rho.layout.select(keep), hermitize(reduced))


def eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, ascending eigenvalues."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"eigh needs a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tolerances().hermitian_input:
        raise NotHermitian("matrix is not Hermitian")
    return np.linalg.eigh(hermitize(m))


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"trace norm needs a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) <= tolerances().hermitian:
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def purify(rho: DensityMatrix, env_name: str) -> PureState:
    """Eigen-purification ``sum_i sqrt(l_i) |v_i>|i>`` with env of dim ``rho.dim``.

    Eigenvalues are taken in descending order, so ``|i=0>`` on the
    environment pairs with the dominant eigenvector.
    """
    if env_name in rho.layout:
        raise NameCollision(f"environment name {env_name!r} already used")
    evals, evecs = np.linalg.eigh(rho.matrix)
    evals = np.where(evals < tolerances().eig_clip, 0.0, evals)[::-1]
    evecs = evecs[:, ::-1]
    amps = (evecs * np.sqrt(evals)).ravel()
    layout = rho.layout.concat(RegisterLayout(((env_name, rho.dim),)))
    return PureState(layout, amps / np.linalg.norm(amps))


def is_unitary(u: np.ndarray, tol: float | None = None) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    tol = tolerances().unitary if tol is None else tol
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) <= tol)


def lift_operator(
    op: np.ndarray,
    layout: RegisterLayout,
    targets: str | Iterable[str],
    output: RegisterLayout | None = None,
) -> tuple[np.ndarray, RegisterLayout]:
    """Extend ``op`` on ``targets`` by the identity on the other registers.

    ``op`` maps the targets (in the order listed) to ``output``; when
    ``output`` is ``None`` the target registers are reused and the layout is
    unchanged.  Otherwise the output registers take the position of the
    first target.  Returns the full
    operator and the layout of its output space.
    """
    targets = layout.check(targets)
    op = np.asarray(op, dtype=complex)
    in_dim = layout.dim_of(targets)
    same_registers = output is None
    if same_registers:
        output = layout.select(targets)
    if op.shape != (output.total_dim, in_dim):
        raise ShapeError(
            f"operator shape {op.shape} does not map targets {targets} (dim {in_dim}) "
            f"to output of dim {output.total_dim}"
        )
    rest = [n for n in layout.names if n not in targets]
    rest_layout = layout.select(rest)
    first = layout.index(targets[0]) if targets else 0
    before = [r for r in layout.registers[:first] if r[0] in rest]
    after = [r for r in rest_layout.registers if r not in before]
    if same_registers:
        final = layout
    else:
        final = RegisterLayout(tuple(before)).concat(output).concat(RegisterLayout(tuple(after)))

    full = np.kron(op, np.eye(rest_layout.total_dim))
    src = _perm_indices(layout, list(targets) + rest)
    mid = output.concat(rest_layout)
    dst = _perm_indices(final, mid.names)
    # full acts on (targets, rest) ordering; undo permutations on both sides
    lifted = np.empty((final.total_dim, layout.total_dim), dtype=complex)
    lifted[np.ix_(dst, src)] = full
    return lifted, final


def apply_unitary(rho: DensityMatrix, u: np.ndarray, targets: str | Iterable[str]) -> DensityMatrix:
    """Conjugate the ``targets`` of ``rho`` by ``u``."""
    targets = rho.layout.check(targets)
    u = np.asarray(u, dtype=complex)
    if u.shape != (rho.layout.dim_of(targets),) * 2:
        raise ShapeError(f"unitary shape {u.shape} does not match targets {targets}")
    if not is_unitary(u):
        raise NotUnitary("operator is not unitary")
    full, layout = lift_operator(u, rho.layout, targets)
    return DensityMatrix._trusted(layout, hermitize(full @ rho.matrix @ full.conj().T))

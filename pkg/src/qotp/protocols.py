"""Private transmission over a public quantum channel.

Contains the Weyl one-time pad, approximate (Haar) randomisation, the two
private state transfer routes (key-then-encrypt and the direct coherent
protocol with Fourier-basis merging), decoupling and mutual-independence
certificates, and the message/key/qubit ledger.

Both transfer routes report the two figures of merit of private state
transfer:

``error_delta``
    ``||rho_bR - Psi_KR||_1`` on Bob's output when the channel is untouched.
``privacy_epsilon``
    ``||rho_R alpha E - rho_R (x) rho_alpha E||_1`` on what Eve would hold if
    she intercepted the transmitted register ``alpha``.

Both are always computed; ``intercept`` chooses which branch produces
``final_state``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import (
    Isometry,
    QuantumChannel,
    apply_isometry,
    clock,
    controlled_isometry,
    haar_unitary,
    shift,
    weyl_set,
)
from .config import tolerances
from .entropy import Ensemble, holevo, mutual_info, subsystem_entropy, von_neumann
from .errors import (
    BadDimension,
    EnsembleMismatch,
    KeyLengthError,
    LedgerViolation,
    PartitionError,
    ResourceExhausted,
    ShapeError,
)
from .linalg import (
    DensityMatrix,
    PureState,
    RegisterLayout,
    apply_unitary,
    as_names,
    partial_trace,
    tensor,
    trace_norm,
)

__all__ = [
    "KeyString",
    "ResourceLedger",
    "Step",
    "TransferOutcome",
    "RandomizationDiagnostics",
    "classical_message",
    "quantum_message",
    "otp_encrypt",
    "otp_decrypt",
    "extract_key",
    "approx_randomize",
    "private_transfer_keyed",
    "private_transfer_direct",
    "classical_encoding_view",
    "decoupling_norm",
    "mutual_independence_rate_certificate",
    "weyl_ensemble",
    "sw_condition_check",
    "run_trials",
]


# --- records ----------------------------------------------------------------------


@dataclass(frozen=True)
class KeyString:
    """Shared secret symbols in ``Z_d``."""

    symbols: tuple[int, ...]
    d: int

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if any(not 0 <= s < self.d for s in symbols):
            raise KeyLengthError(f"key symbols must lie in [0, {self.d})")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def random(cls, length: int, d: int, rng=None) -> "KeyString":
        rng = np.random.default_rng(rng)
        return cls(tuple(rng.integers(0, d, size=length)), d)

    @classmethod
    def from_bits(cls, bits: Sequence[int], d: int) -> "KeyString":
        """Pack bits (most significant first) into ``log2 d``-bit symbols."""
        q = _log2_exact(d)
        if len(bits) % q:
            raise KeyLengthError(f"{len(bits)} bits do not fill {q}-bit symbols")
        chunks = [bits[i:i + q] for i in range(0, len(bits), q)]
        return cls(tuple(int("".join(map(str, c)), 2) for c in chunks), d)

    @property
    def bits(self) -> float:
        return len(self.symbols) * math.log2(self.d)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class ResourceLedger:
    """Signed tallies: qubits sent, key bits gained (negative when spent), message units delivered."""

    delta_Q: float = 0.0
    delta_K: float = 0.0
    delta_M: float = 0.0

    def __add__(self, other: "ResourceLedger") -> "ResourceLedger":
        return ResourceLedger(self.delta_Q + other.delta_Q, self.delta_K + other.delta_K,
                              self.delta_M + other.delta_M)

    def law_holds(self) -> bool:
        """``delta_K <= delta_Q - delta_M``."""
        return self.delta_K <= self.delta_Q - self.delta_M + tolerances().ledger

    def assert_law(self) -> None:
        if not self.law_holds():
            raise LedgerViolation(
                f"delta_K={self.delta_K} exceeds delta_Q - delta_M = {self.delta_Q - self.delta_M}")

    def to_json(self) -> dict:
        return {"delta_K": self.delta_K, "delta_Q": self.delta_Q, "delta_M": self.delta_M}


@dataclass(frozen=True)
class Step:
    step: str
    registers: tuple[str, ...] = ()
    ledger: ResourceLedger = ResourceLedger()
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"step": self.step, "registers": list(self.registers),
                "ledger": self.ledger.to_json(), "metrics": dict(self.metrics)}


@dataclass(frozen=True, eq=False)
class TransferOutcome:
    final_state: DensityMatrix
    error_delta: float
    privacy_epsilon: float
    eve_intercepted: bool
    transcript: tuple[Step, ...]

    def __post_init__(self):
        if not self.transcript:
            raise ValueError("transcript must not be empty")
        for name in ("error_delta", "privacy_epsilon"):
            value = getattr(self, name)
            # trace distances of states; tiny negative rounding is clipped
            object.__setattr__(self, name, float(min(max(value, 0.0), 2.0)))

    def transcript_jsonl(self) -> str:
        return "\n".join(json.dumps(s.to_json(), sort_keys=True) for s in self.transcript)


# --- helpers ------------------------------------------------------------------------


def _log2_exact(d: int) -> int:
    q = int(round(math.log2(d))) if d >= 1 else -1
    if d < 2 or 2 ** q != d:
        raise BadDimension(f"dimension {d} must be a power of two >= 2")
    return q


def classical_message(d: int, k: str = "K", r: str = "R") -> DensityMatrix:
    """Uniform classical message register ``(1/d) sum_k |kk><kk|_KR``."""
    layout = RegisterLayout(((k, d), (r, d)))
    m = np.zeros((d * d, d * d), dtype=complex)
    idx = np.arange(d) * d + np.arange(d)
    m[idx, idx] = 1.0 / d
    return DensityMatrix(layout, m)


def quantum_message(d: int, k: str = "K", r: str = "R") -> PureState:
    """Maximally entangled message ``(1/sqrt d) sum_k |k,k>_KR``."""
    return PureState.maximally_entangled(k, r, d)


def _message_state(message) -> tuple[PureState | DensityMatrix, int]:
    if "K" not in message.layout:
        raise ShapeError("message must carry a register named 'K'")
    if "R" not in message.layout:
        message = tensor(message, PureState.basis(RegisterLayout((("R", 1),)), 0)
                         if isinstance(message, PureState) else DensityMatrix.basis(RegisterLayout((("R", 1),)), 0))
    if set(message.layout.names) != {"K", "R"}:
        raise ShapeError(f"message registers must be K and R, got {message.layout.names}")
    message = message.reorder(("K", "R"))
    return message, message.layout.dim("K")


def _bits_of(text: str) -> list[int]:
    if not text or any(c not in "01" for c in text):
        raise ShapeError(f"classical message must be a nonempty bit string, got {text!r}")
    return [int(c) for c in text]


# --- one-time pad ---------------------------------------------------------------------


def _pad_unitaries(rho, key: KeyString, registers, phase: bool, inverse: bool):
    registers = rho.layout.check(registers if registers is not None else rho.layout.names)
    per = 2 if phase else 1
    if len(key) != per * len(registers):
        raise KeyLengthError(f"need {per} key symbols per register ({per * len(registers)}), got {len(key)}")
    for i, name in enumerate(registers):
        d = rho.layout.dim(name)
        if d != key.d:
            raise KeyLengthError(f"register {name!r} has dim {d} but key symbols are mod {key.d}")
        a = key.symbols[per * i]
        b = key.symbols[per * i + 1] if phase else 0
        w = np.linalg.matrix_power(shift(d), a) @ np.linalg.matrix_power(clock(d), b)
        yield name, (w.conj().T if inverse else w)


def otp_encrypt(rho: DensityMatrix, key: KeyString, registers=None, phase: bool = True) -> DensityMatrix:
    """Apply ``X^a Z^b`` to each message register.

    ``phase=False`` gives the classical pad: one symbol per register and
    shifts only.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    for name, w in list(_pad_unitaries(rho, key, registers, phase, inverse=False)):
        rho = apply_unitary(rho, w, name)
    return rho


def otp_decrypt(rho: DensityMatrix, key: KeyString, registers=None, phase: bool = True) -> DensityMatrix:
    if isinstance(rho, PureState):
        rho = rho.density()
    for name, w in reversed(list(_pad_unitaries(rho, key, registers, phase, inverse=True))):
        rho = apply_unitary(rho, w, name)
    return rho


def extract_key(bell_pairs: int, n_bits: int, rng) -> tuple[list[int], Step]:
    """Turn Bell pairs into shared secret bits, two per pair.

    Each pair carries a uniformly random 2-bit symbol: Alice applies the
    corresponding Pauli to her half and sends it, Bob measures the pair in
    the Bell basis.  The simulation reports Bob's worst decoding error and
    the Holevo information of the transmitted half (Eve's view).
    """
    pairs = math.ceil(n_bits / 2)
    if pairs > bell_pairs:
        raise ResourceExhausted(f"{n_bits} key bits need {pairs} Bell pairs, only {bell_pairs} available")
    weyl = weyl_set(2)
    phi = PureState.maximally_entangled("A", "B", 2).density()
    encoded = [apply_unitary(phi, w, "A") for w in weyl]
    bell_basis = [e.matrix for e in encoded]
    bits: list[int] = []
    worst_error = 0.0
    for _ in range(pairs):
        label = int(rng.integers(4))
        sent = encoded[label]
        probs = np.array([np.real(np.trace(p @ sent.matrix)) for p in bell_basis])
        probs = np.clip(probs, 0.0, None)
        outcome = int(rng.choice(4, p=probs / probs.sum()))
        worst_error = max(worst_error, 1.0 - probs[label])
        a, b = divmod(outcome, 2)
        bits += [a, b]
    eve = holevo(Ensemble.uniform([e.reduced(["A"]) for e in encoded]))
    step = Step("key_extraction", ("A", "B"), ResourceLedger(),
                {"bell_pairs_used": pairs, "key_bits": 2 * pairs,
                 "bob_error_probability": float(worst_error), "eve_holevo": float(eve)})
    return bits[:n_bits], step


# --- approximate randomisation ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class RandomizationDiagnostics:
    n: int
    d: int
    key_bits: float
    deviations: np.ndarray
    max_deviation: float

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "key_bits": self.key_bits,
                "max_deviation": self.max_deviation, "mean_deviation": float(np.mean(self.deviations))}


def approx_randomize(
    n: int,
    d: int,
    seed=None,
    inputs: Sequence[np.ndarray] | int = 100,
    unitaries: Sequence[np.ndarray] | None = None,
) -> tuple[QuantumChannel, RandomizationDiagnostics]:
    """Average of ``n`` Haar unitaries and its distance from complete randomisation.

    ``inputs`` is either a list of pure input vectors or how many to draw.
    ``unitaries`` overrides the Haar sample (e.g. with a Weyl set).  The
    diagnostic is ``max_phi ||Lambda(phi) - I/d||_1`` over the inputs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if unitaries is None:
        unitaries = [haar_unitary(d, rng) for _ in range(n)]
    else:
        unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
        n = len(unitaries)
    if isinstance(inputs, int):
        raw = rng.standard_normal((inputs, d)) + 1j * rng.standard_normal((inputs, d))
        inputs = list(raw / np.linalg.norm(raw, axis=1, keepdims=True))
    stack = np.stack(unitaries)  # (n, d, d)
    ident = np.eye(d) / d
    deviations = []
    for phi in inputs:
        cols = stack @ np.asarray(phi, dtype=complex)  # (n, d): U_i phi
        out = cols.T @ cols.conj() / n
        deviations.append(trace_norm(0.5 * (out + out.conj().T) - ident))
    deviations = np.array(deviations)
    channel = QuantumChannel.from_kraus([u / np.sqrt(n) for u in unitaries])
    diag = RandomizationDiagnostics(n=n, d=d, key_bits=math.log2(n), deviations=deviations,
                                    max_deviation=float(deviations.max()))
    return channel, diag


# --- private state transfer ----------------------------------------------------


def decoupling_norm(rho: DensityMatrix, part_left, part_right) -> float:
    """``||rho_LR - rho_L (x) rho_R||_1``; the parts must cover ``rho``."""
    left, right = as_names(part_left), as_names(part_right)
    if set(left) & set(right) or set(left) | set(right) != set(rho.names) or \
            len(left) + len(right) != len(rho.names):
        raise PartitionError(f"{left} | {right} is not a partition of {rho.names}")
    ordered = rho.reorder(left + right)
    prod = np.kron(rho.reduced(left).matrix, rho.reduced(right).matrix)
    return trace_norm(ordered.matrix - prod)


def _privacy(rho_r_alpha_e: DensityMatrix) -> float:
    return decoupling_norm(rho_r_alpha_e, ["R"], ["alpha", "E"])


def _error(rho_b_r: DensityMatrix, target: DensityMatrix) -> float:
    got = rho_b_r.relabel({"b": "K"}).reorder(("K", "R"))
    return trace_norm(got.matrix - target.matrix)


def _eve() -> DensityMatrix:
    # Bell resources are pure, so Eve's purifying system is trivial
    return DensityMatrix.basis(RegisterLayout((("E", 1),)), 0)


def private_transfer_keyed(
    bell_pairs: int,
    message,
    intercept: bool = False,
    seed=None,
) -> tuple[TransferOutcome, ResourceLedger]:
    """Key-then-encrypt route.

    ``message`` is a bit string (classical message of ``d = 2**len``
    symbols, modelled by the uniform classical ``Psi_KR``) or a state on
    registers ``K`` and ``R``.  Classical messages spend ``log2 d`` key bits
    on a shift pad; quantum messages spend ``2 log2 d`` on the Weyl pad.
    """
    rng = np.random.default_rng(seed)
    classical = isinstance(message, str)
    if classical:
        bits = _bits_of(message)
        d = 2 ** len(bits)
        psi = classical_message(d)
        plaintext = int(message, 2)
    else:
        psi, d = _message_state(message)
        psi = psi.density() if isinstance(psi, PureState) else psi
    q = _log2_exact(d)
    key_bits_needed = q if classical else 2 * q
    if key_bits_needed > 2 * bell_pairs:
        raise ResourceExhausted(f"{key_bits_needed} key bits needed, {bell_pairs} Bell pairs give {2 * bell_pairs}")

    transcript: list[Step] = []
    raw, step = extract_key(bell_pairs, key_bits_needed, rng)
    transcript.append(step)
    key = KeyString.from_bits(raw, d)
    phase = not classical

    # Eve does not know the key: her view is the key average
    if phase:
        keys = [KeyString((a, b), d) for a in range(d) for b in range(d)]
    else:
        keys = [KeyString((a,), d) for a in range(d)]
    averaged = sum(otp_encrypt(psi, k, ["K"], phase).matrix for k in keys) / len(keys)
    eve_view = tensor(DensityMatrix(psi.layout, averaged).relabel({"K": "alpha"}), _eve())
    privacy = _privacy(eve_view.reorder(("R", "alpha", "E")))

    encrypted = otp_encrypt(psi, key, ["K"], phase).relabel({"K": "alpha"})
    ledger_step = ResourceLedger(delta_Q=q, delta_K=-key_bits_needed, delta_M=q)
    metrics = {"key_bits": key_bits_needed, "privacy_epsilon": privacy}
    if classical:
        metrics["ciphertext"] = (plaintext + key.symbols[0]) % d
    transcript.append(Step("encrypt_and_send", ("K", "alpha"), ledger_step, metrics))

    received = tensor(encrypted, _eve())
    decrypted = otp_decrypt(received, key, ["alpha"], phase).relabel({"alpha": "b"})
    bob = decrypted.reduced(["b", "R"])
    error = _error(bob, psi)
    metrics = {"error_delta": error}
    if classical:
        ciphertext = transcript[-1].metrics["ciphertext"]
        metrics["decoded"] = format((ciphertext - key.symbols[0]) % d, f"0{q}b")
    transcript.append(Step("decrypt", ("alpha", "b"), ResourceLedger(), metrics))

    final = eve_view.reorder(("R", "alpha", "E")) if intercept else decrypted
    outcome = TransferOutcome(final, error, privacy, intercept, tuple(transcript))
    ledger = ledger_step
    ledger.assert_law()
    return outcome, ledger


@lru_cache(maxsize=None)
def _direct_encoder(d: int) -> Isometry:
    """``sum_k |k><k|_K (x) Z^k`` on ``K (x) A``."""
    z = clock(d)
    blocks = [Isometry(np.linalg.matrix_power(z, k), RegisterLayout((("alpha", d),))) for k in range(d)]
    return controlled_isometry(blocks, ("K", d))


@lru_cache(maxsize=None)
def _bell_index_decoder(d: int) -> np.ndarray:
    """Unitary on ``alpha, B, B'`` writing ``k`` of ``(X^a Z^k (x) I)|Phi>`` into ``B'`` and undoing ``Z^k``."""
    phi = np.eye(d).ravel() / np.sqrt(d)
    x, z = shift(d), clock(d)
    eye = np.eye(d)
    u1 = np.zeros((d ** 3, d ** 3), dtype=complex)
    for a in range(d):
        for k in range(d):
            w = np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, k)
            v = np.kron(w, eye) @ phi
            u1 += np.kron(np.outer(v, v.conj()), np.linalg.matrix_power(x, k))
    u2 = np.zeros_like(u1)
    for l in range(d):
        proj = np.zeros((d, d))
        proj[l, l] = 1.0
        u2 += np.kron(np.kron(np.linalg.matrix_power(z, -l % d), eye), proj)
    out = u2 @ u1
    out.setflags(write=False)
    return out


def classical_encoding_view(message: PureState) -> DensityMatrix:
    """Eve's ``rho_R alpha E`` when ``k`` is sent as a classical message with ``Z^k``.

    Uses ``p_k`` from the computational-basis populations of ``K``; equal to
    the direct protocol's post-encoding view when ``Psi_KR`` is Schmidt
    diagonal in that basis.
    """
    psi, d = _message_state(message)
    rho = psi.density() if isinstance(psi, PureState) else psi
    phi = PureState.maximally_entangled("alpha", "B", d).density()
    z = clock(d)
    d_r = rho.layout.dim("R")
    total = None
    for k in range(d):
        proj = np.zeros((d, d))
        proj[k, k] = 1.0
        full = np.kron(proj, np.eye(d_r))
        branch = full @ rho.matrix @ full
        pk = np.real(np.trace(branch))
        if pk <= 0:
            continue
        rho_r = partial_trace(DensityMatrix(rho.layout, branch / pk), ["K"])
        sent = partial_trace(apply_unitary(phi, np.linalg.matrix_power(z, k), "alpha"), ["B"])
        term = pk * np.kron(rho_r.matrix, sent.matrix)
        total = term if total is None else total + term
    layout = RegisterLayout((("R", d_r), ("alpha", d)))
    return tensor(DensityMatrix(layout, total), _eve())


def private_transfer_direct(
    bell_pairs: int,
    message: PureState,
    intercept: bool = False,
    seed=None,
) -> tuple[TransferOutcome, ResourceLedger]:
    """Coherent route: controlled encoding, coherent decoding, Fourier-basis merging.

    Alice applies ``Z^k`` to her half of a ``d``-dimensional Bell resource
    controlled on ``K`` and sends it as ``alpha``.  Bob coherently copies
    ``k`` into ``B'``.  Alice measures ``K`` in the Fourier basis
    ``|f_j> = d^-1/2 sum_k w^{-jk} |k>`` and sends ``j`` one-time padded with
    ``log2 d`` pre-shared key bits; Bob applies ``diag(w^{-jk})`` to ``B'``.
    """
    rng = np.random.default_rng(seed)
    psi, d = _message_state(message)
    if not isinstance(psi, PureState):
        raise ShapeError("the direct protocol needs a pure message state")
    q = _log2_exact(d)
    if q > bell_pairs:
        raise ResourceExhausted(f"a {d}-dimensional message needs {q} Bell pairs, only {bell_pairs} available")
    target = psi.density()
    transcript: list[Step] = []

    resource = tensor(PureState.maximally_entangled("alpha", "B", d),
                      PureState.basis(RegisterLayout((("E", 1),)), 0))
    state = tensor(psi, resource)  # K R alpha B E
    state = apply_isometry(_direct_encoder(d), state, ["K", "alpha"])
    rho = state.density()
    eve_view = rho.reduced(["R", "alpha", "E"])
    privacy = _privacy(eve_view)
    ledger = ResourceLedger(delta_Q=q, delta_K=-q, delta_M=q)
    transcript.append(Step("coherent_encode_and_send", ("K", "alpha"),
                           ResourceLedger(delta_Q=q, delta_M=q),
                           {"bell_pairs_used": q, "privacy_epsilon": privacy}))

    # Bob's branch (channel untouched)
    state = tensor(state, PureState.basis(RegisterLayout((("Bp", d),)), 0))
    state = apply_isometry(Isometry(_bell_index_decoder(d), RegisterLayout((("alpha", d), ("B", d), ("Bp", d)))),
                           state, ["alpha", "B", "Bp"])
    decoded = state.density()
    s_k_given_b = _cond_entropy(decoded.reduced(["K", "Bp"]), ["Bp"])
    transcript.append(Step("coherent_decode", ("alpha", "B", "Bp"), ResourceLedger(),
                           {"S(K|Bp)": s_k_given_b}))

    omega = np.exp(2j * np.pi / d)
    fourier = np.array([[omega ** (-j * k) for k in range(d)] for j in range(d)]) / np.sqrt(d)  # row j is |f_j>
    rest_layout = state.layout.without(["K"])
    amps = state.reorder(("K",) + rest_layout.names).amplitudes.reshape(d, -1)
    projected = fourier.conj() @ amps  # row j: (<f_j| (x) I) psi
    probs = np.sum(np.abs(projected) ** 2, axis=1)
    j = int(rng.choice(d, p=probs / probs.sum()))
    post = PureState(rest_layout, projected[j] / np.sqrt(probs[j]))
    pad = int(rng.integers(d))
    ciphertext = (j + pad) % d
    transcript.append(Step("fourier_merge", ("K",), ResourceLedger(delta_K=-q),
                           {"outcome_probabilities": [float(p) for p in probs], "ciphertext": ciphertext,
                            "key_bits": q, "classical_bits_sent": q}))

    j_bob = (ciphertext - pad) % d
    correction = np.diag([omega ** (-j_bob * k) for k in range(d)])
    final = apply_unitary(post.density(), correction, "Bp").relabel({"Bp": "b"})
    error = _error(final.reduced(["b", "R"]), target)
    transcript.append(Step("phase_correct", ("Bp",), ResourceLedger(),
                           {"outcome": j_bob, "error_delta": error}))

    outcome = TransferOutcome(eve_view if intercept else final, error, privacy, intercept, tuple(transcript))
    ledger.assert_law()
    return outcome, ledger


def _cond_entropy(rho: DensityMatrix, cond) -> float:
    return von_neumann(rho) - subsystem_entropy(rho, cond)


# --- certificates -----------------------------------------------------------------


def mutual_independence_rate_certificate(
    rho_n: DensityMatrix, n: int, strong: bool = True, a="A", b="B", e="E",
) -> tuple[float, float]:
    """``(rate, residual)`` with ``rate = I(A:B)/(2n)``.

    The residual is ``||rho_ABE - rho_AB (x) rho_E||_1`` when ``strong``,
    else ``||rho_AE - rho_A (x) rho_E||_1``.
    """
    a, b, e = as_names(a), as_names(b), as_names(e)
    missing = set(a + b + e) - set(rho_n.names)
    if missing:
        raise PartitionError(f"state lacks registers {sorted(missing)}")
    rho_abe = rho_n.reduced(a + b + e)
    rate = 0.5 * mutual_info(rho_abe.reduced(a + b), a, b) / n
    if strong:
        residual = decoupling_norm(rho_abe, a + b, e)
    else:
        residual = decoupling_norm(rho_abe.reduced(a + e), a, e)
    return rate, residual


def weyl_ensemble(state, register: str) -> tuple[Ensemble, Ensemble]:
    """Uniform Weyl-conjugation ensemble of ``state`` on ``register``, and its local part."""
    rho = state.density() if isinstance(state, PureState) else state
    d = rho.layout.dim(register)
    members = [apply_unitary(rho, w, register) for w in weyl_set(d)]
    return Ensemble.uniform(members), Ensemble.uniform([m.reduced([register]) for m in members])


def sw_condition_check(e_joint: Ensemble, e_local: Ensemble, n: int = 1) -> tuple[float, float]:
    """``(chi(joint)/n, chi(local)/n)``: decodable rate and leaked rate."""
    if len(e_joint.items) != len(e_local.items) or np.max(
            np.abs(e_joint.probabilities - e_local.probabilities)) > tolerances().probability:
        raise EnsembleMismatch("joint and local ensembles are not index-aligned")
    return holevo(e_joint) / n, holevo(e_local) / n


def run_trials(
    protocol: Callable[..., tuple[TransferOutcome, ResourceLedger]],
    seeds: Iterable[int],
    workers: int = 1,
    **kwargs,
) -> list[tuple[TransferOutcome, ResourceLedger]]:
    """Run ``protocol(seed=s, **kwargs)`` for each seed, asserting the ledger law on each run."""

    def one(s):
        outcome, ledger = protocol(seed=s, **kwargs)
        ledger.assert_law()
        return outcome, ledger

    seeds = list(seeds)
    if workers <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, seeds))

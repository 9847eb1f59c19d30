"""Command-line interface.

Every command writes one JSON report (``--output`` or stdout) holding the
echoed configuration, the computed results, the resource ledger where one
applies, the toolkit version and a ``timestamp``.  Apart from that single
key, identical arguments give byte-identical reports.  Failures exit
non-zero with ``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .config import PROFILE_ENV_VAR, Tolerances, override_tolerances, profile
from .entropy import ClassicalJoint, Ensemble, classical_objective, holevo, subsystem_entropy
from .errors import ConfigError, ParseError, QOTPError
from .linalg import DensityMatrix, PureState, purify
from .protocols import (
    approx_randomize,
    private_transfer_direct,
    private_transfer_keyed,
    quantum_message,
)
from .channels import QuantumChannel, weyl_set
from .rates import (
    ChannelAnsatz,
    CrossCheckBudget,
    OptimizerConfig,
    optimize_rate,
    parse_dims,
    rate_objective,
    theorem_cross_check,
)
from .states import with_trivial

DEFAULT_SEED = 20100101

COMMANDS = ("entropy", "holevo", "otp-run", "direct-run", "randomize-test",
            "rate-eval", "rate-opt", "classical-obj", "cross-check")


@lru_cache(maxsize=1)
def load_schema() -> dict:
    return json.loads(resources.files("qotp").joinpath("schemas/report.schema.json").read_text())


def _read_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file {path!r} does not exist")
    try:
        text = p.read_text()
        return json.loads(text), hashlib.sha256(text.encode()).hexdigest()
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_state(path: str):
    data, digest = _read_json(path)
    try:
        if "amplitudes" in data:
            return PureState.from_json(data), digest
        return DensityMatrix.from_json(data), digest
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed state ({exc})") from None


def as_tripartite(state, a="A", b="B") -> tuple[PureState, tuple[str, ...]]:
    """Pure ``psi_ABE`` where Eve holds every register other than ``a`` and ``b``.

    Mixed inputs are purified into an extra register ``E'``.
    """
    if isinstance(state, DensityMatrix):
        evals, evecs = np.linalg.eigh(state.matrix)
        if evals[-1] > 1 - 1e-12:
            state = PureState.normalized(state.layout, evecs[:, -1])
        else:
            state = purify(state, "E'" if "E" in state.layout else "E")
    e = tuple(n for n in state.names if n not in (a, b))
    if not e:
        state = with_trivial(state, "E")
        e = ("E",)
    return state, e


_INPUT_FLAGS = ("state", "ensemble", "channel", "joint")
_OUTPUT_FLAGS = ("output", "transcript")


def validate_paths(args) -> None:
    """Check input files exist and output directories exist, before any work."""
    for flag in _INPUT_FLAGS:
        path = getattr(args, flag, None)
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"--{flag}: input file {path!r} does not exist")
    for flag in _OUTPUT_FLAGS:
        path = getattr(args, flag, None)
        if path is not None and not Path(path).resolve().parent.is_dir():
            raise ConfigError(f"--{flag}: directory of {path!r} does not exist")


def _dims(text: str) -> list[tuple[int, int]]:
    try:
        dims = parse_dims(text)
    except ValueError:
        raise ParseError(f"--dims expects e.g. 2x1,2x2, got {text!r}") from None
    if any(a < 1 or b < 1 for a, b in dims):
        raise ConfigError(f"--dims entries must be positive, got {text!r}")
    return dims


def _tol_overrides(items) -> dict:
    fields = {f.name for f in dataclasses.fields(Tolerances)}
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in fields:
            raise ConfigError(f"bad tolerance override {item!r}; keys: {sorted(fields)}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {key} needs a number, got {value!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qotp", description="Private transfer protocols, entropies and rate bounds; JSON reports.")
    p.add_argument("--version", action="version", version=f"qotp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--output", "-o", help="report path (default: stdout)")
        sp.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override")
        return sp

    s = common(sub.add_parser("entropy", help="von Neumann entropy of a state or subsystem"))
    s.add_argument("--state", required=True)
    s.add_argument("--registers", help="comma-separated subsystem (default: all)")

    s = common(sub.add_parser("holevo", help="Holevo information of an ensemble file"))
    s.add_argument("--ensemble", required=True)

    for name in ("otp-run", "direct-run"):
        s = common(sub.add_parser(name, help=f"{'key-then-encrypt' if name == 'otp-run' else 'direct coherent'} private transfer"))
        s.add_argument("--bell-pairs", type=int, required=True)
        g = s.add_mutually_exclusive_group(required=True)
        g.add_argument("--message-qubits", type=int)
        if name == "otp-run":
            g.add_argument("--message-bits", help="classical message as a bit string, e.g. 01")
        s.add_argument("--intercept", action="store_true")
        s.add_argument("--transcript", help="write the step transcript as JSON lines")

    s = common(sub.add_parser("randomize-test", help="approximate randomisation diagnostic"))
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--n", type=int, help="number of Haar unitaries")
    s.add_argument("--inputs", type=int, default=100)
    s.add_argument("--weyl", action="store_true", help="use the d^2 Weyl operators instead")

    s = common(sub.add_parser("rate-eval", help="evaluate the rate objective for one channel"))
    s.add_argument("--state", required=True)
    s.add_argument("--channel", help="channel JSON (default: identity A -> a)")

    for name in ("rate-opt", "cross-check"):
        s = common(sub.add_parser(name, help="maximise the rate objective" if name == "rate-opt"
                                  else "compare optimiser and protocol rates"))
        if name == "cross-check":
            g = s.add_mutually_exclusive_group(required=True)
            g.add_argument("--state")
            g.add_argument("--bell-pairs", type=int)
        else:
            s.add_argument("--state", required=True)
        s.add_argument("--dims", default="2x1", help="sweep, e.g. 2x1,2x2")
        s.add_argument("--restarts", type=int, default=5)
        s.add_argument("--max-iter", type=int, default=5000)
        s.add_argument("--env-dim", type=int)

    s = common(sub.add_parser("classical-obj", help="I(V:Y|U) - I(V:Z|U) for fixed channels X->V->U"))
    s.add_argument("--joint", required=True, help='JSON {"pmf": P_XYZ, "chan_xv": ..., "chan_vu": ...}')
    return p


def _transfer(args, keyed: bool):
    if args.message_qubits is not None:
        message = quantum_message(2 ** args.message_qubits)
        mtype = "quantum"
    else:
        message = args.message_bits
        mtype = "classical"
    fn = private_transfer_keyed if keyed else private_transfer_direct
    outcome, ledger = fn(args.bell_pairs, message, intercept=args.intercept, seed=args.seed)
    if args.transcript:
        Path(args.transcript).write_text(outcome.transcript_jsonl() + "\n")
    results = {
        "message_type": mtype,
        "error_delta": outcome.error_delta,
        "privacy_epsilon": outcome.privacy_epsilon,
        "eve_intercepted": outcome.eve_intercepted,
        "final_registers": list(outcome.final_state.names),
        "law_holds": ledger.law_holds(),
        "transcript": [s.to_json() for s in outcome.transcript],
    }
    return results, ledger.to_json()


def execute(args) -> tuple[dict, dict | None, dict]:
    """Run one parsed command; returns ``(results, ledger, inputs)``."""
    inputs = {}
    cmd = args.command
    if cmd == "entropy":
        rho, inputs["state_sha256"] = load_state(args.state)
        names = args.registers.split(",") if args.registers else list(rho.names)
        if isinstance(rho, PureState):
            rho = rho.density()
        value = subsystem_entropy(rho, names)
        return {"entropy_bits": value, "registers": names}, None, inputs
    if cmd == "holevo":
        data, inputs["ensemble_sha256"] = _read_json(args.ensemble)
        try:
            e = Ensemble.from_json(data)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{args.ensemble}: malformed ensemble ({exc})") from None
        return {"holevo_bits": holevo(e), "members": len(e.items)}, None, inputs
    if cmd in ("otp-run", "direct-run"):
        results, ledger = _transfer(args, cmd == "otp-run")
        return results, ledger, inputs
    if cmd == "randomize-test":
        d = args.dim
        if args.weyl:
            _, diag = approx_randomize(d * d, d, args.seed, args.inputs, unitaries=list(weyl_set(d)))
        else:
            if args.n is None:
                raise ConfigError("--n is required unless --weyl is given")
            _, diag = approx_randomize(args.n, d, args.seed, args.inputs)
        return diag.to_json(), None, inputs
    if cmd == "rate-eval":
        state, inputs["state_sha256"] = load_state(args.state)
        psi, e = as_tripartite(state)
        if args.channel:
            data, inputs["channel_sha256"] = _read_json(args.channel)
            ch = QuantumChannel.from_json(data)
        else:
            ch = ChannelAnsatz(psi.layout.dim("A"), psi.layout.dim("A"), 1)
        return {"objective": rate_objective(psi, ch, e=e)}, None, inputs
    if cmd in ("rate-opt", "cross-check"):
        cfg = OptimizerConfig(max_iter=args.max_iter, dim_env=args.env_dim)
        dims = _dims(args.dims)
        if cmd == "rate-opt" or args.state:
            state, inputs["state_sha256"] = load_state(args.state)
            psi, e = as_tripartite(state)
        else:
            # m Bell pairs grouped into one 2^m-dimensional register per party
            psi = with_trivial(PureState.maximally_entangled("A", "B", 2 ** args.bell_pairs), "E")
            e = ("E",)
        if cmd == "rate-opt":
            return optimize_rate(psi, dims, args.restarts, args.seed, cfg, e=e).to_json(), None, inputs
        if e != ("E",):
            raise ConfigError("cross-check needs Eve's system as a single register E")
        budget = CrossCheckBudget(tuple(dims), args.restarts, args.seed, optimizer=cfg)
        report = theorem_cross_check(psi, budget)
        return report, None, inputs
    if cmd == "classical-obj":
        data, inputs["joint_sha256"] = _read_json(args.joint)
        try:
            joint = ClassicalJoint(np.asarray(data["pmf"], float), ("X", "Y", "Z"))
            value = classical_objective(joint, np.asarray(data["chan_xv"]), np.asarray(data["chan_vu"]))
        except KeyError as exc:
            raise ParseError(f"{args.joint}: missing key {exc}") from None
        return {"objective": value}, None, inputs
    raise ConfigError(f"unknown command {cmd!r}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(payload: dict) -> str:
    payload = _clean(payload)
    jsonschema.validate(payload, load_schema())
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _emit(text: str, output: str | None, fallback: bool = False) -> None:
    if output:
        try:
            Path(output).write_text(text)
            return
        except OSError:
            if not fallback:
                raise
    sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    profile_name = os.environ.get(PROFILE_ENV_VAR, "default")
    try:
        validate_paths(args)
        try:
            base = profile(profile_name)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        overrides = _tol_overrides(args.tol)
        with override_tolerances(base, **overrides) as tol:
            results, ledger, inputs = execute(args)
        report = {
            "toolkit": {"name": "qotp", "version": __version__},
            "command": args.command,
            "config": config,
            "inputs": inputs,
            "tolerances": dataclasses.asdict(tol),
            "tolerance_profile": profile_name,
            "results": results,
            "ledger": ledger,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        _emit(_dump(report), args.output)
        return 0
    except QOTPError as exc:
        err = {"error": {"code": exc.code, "message": str(exc)}, "command": args.command,
               "toolkit": {"name": "qotp", "version": __version__}}
        _emit(_dump(err), args.output, fallback=True)
        return 1
    except ValueError as exc:
        err = {"error": {"code": "cli.ValueError", "message": str(exc)}, "command": args.command,
               "toolkit": {"name": "qotp", "version": __version__}}
        _emit(_dump(err), args.output, fallback=True)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

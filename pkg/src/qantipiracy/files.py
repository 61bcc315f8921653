"""Versioned JSON files for register banks and keys.

Floats are written with ``repr``, the shortest text that reads back to
the identical double, so save/load round trips are exact and repeated
runs produce identical bytes.

A bank file holds raw amplitudes. Holding the file stands for physical
custody of the registers; the adversary API never reads it directly.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .authcode import DELTA_MIN, SharedAuthKey
from .protocol import BitString, RegisterBank, SecretKey
from .qcore import NORM_TOL, TWO_PI

VERSION = 1


class CorruptFileError(ValueError):
    """A bank or key file is malformed, truncated or violates an invariant."""


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=1, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _load(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorruptFileError(f"{path}: top level is not an object")
    if obj.get("version") != VERSION:
        raise CorruptFileError(f"{path}: unsupported version {obj.get('version')!r}")
    return obj


def _number(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise CorruptFileError(f"{what} is not a finite number: {x!r}")
    return float(x)


def bank_to_dict(bank: RegisterBank) -> dict:
    return {
        "version": VERSION,
        "label": bank.label,
        "n": len(bank),
        "registers": [[[float(z.real), float(z.imag)] for z in reg] for reg in bank.amps],
    }


def bank_from_dict(obj: dict) -> RegisterBank:
    regs = obj.get("registers")
    n = obj.get("n")
    label = obj.get("label", "")
    if not isinstance(regs, list) or not isinstance(n, int) or len(regs) != n:
        raise CorruptFileError("bank register list missing or inconsistent with n")
    if not isinstance(label, str):
        raise CorruptFileError("bank label must be a string")
    amps = np.zeros((n, 4), dtype=complex)
    for i, reg in enumerate(regs):
        if not isinstance(reg, list) or len(reg) != 4:
            raise CorruptFileError(f"register {i} does not hold 4 amplitudes")
        for k, pair in enumerate(reg):
            if not isinstance(pair, list) or len(pair) != 2:
                raise CorruptFileError(f"register {i} amplitude {k} is not a (re, im) pair")
            amps[i, k] = complex(_number(pair[0], "re"), _number(pair[1], "im"))
        norm = np.linalg.norm(amps[i])
        if abs(norm - 1.0) > NORM_TOL:
            raise CorruptFileError(f"register {i} has norm {norm!r}")
    return RegisterBank(amps, label)


def save_bank(bank: RegisterBank, path) -> None:
    _dump(bank_to_dict(bank), path)


def load_bank(path) -> RegisterBank:
    return bank_from_dict(_load(path))


def _angle(x, what: str) -> float:
    t = _number(x, what)
    if not 0.0 <= t < TWO_PI:
        raise CorruptFileError(f"{what} {t!r} outside [0, 2pi)")
    return t


def save_key(key, path, signed: BitString | None = None) -> None:
    if isinstance(key, SecretKey):
        obj = {
            "version": VERSION,
            "kind": "storage",
            "n": len(key),
            "entries": [{"theta": e.theta, "bit": e.bit} for e in key.entries],
        }
    elif isinstance(key, SharedAuthKey):
        obj = {
            "version": VERSION,
            "kind": "auth",
            "n": len(key),
            "delta_min": key.delta_min,
            "entries": [{"theta0": e.theta0, "theta1": e.theta1} for e in key.entries],
        }
        if signed is not None:
            obj["signed"] = str(signed)
    else:
        raise TypeError(f"cannot serialise {type(key).__name__}")
    _dump(obj, path)


def key_from_dict(obj: dict):
    kind = obj.get("kind")
    entries = obj.get("entries")
    n = obj.get("n")
    if not isinstance(entries, list) or not isinstance(n, int) or len(entries) != n:
        raise CorruptFileError("key entry list missing or inconsistent with n")
    try:
        if kind == "storage":
            rows = []
            for i, e in enumerate(entries):
                bit = e.get("bit")
                if not isinstance(bit, int) or isinstance(bit, bool) or bit not in (0, 1):
                    raise CorruptFileError(f"key entry {i} has an invalid bit")
                rows.append((_angle(e.get("theta"), f"entry {i} theta"), e["bit"]))
            return SecretKey(tuple(rows))
        if kind == "auth":
            delta = _number(obj.get("delta_min", DELTA_MIN), "delta_min")
            rows = [(_angle(e.get("theta0"), f"entry {i} theta0"),
                     _angle(e.get("theta1"), f"entry {i} theta1")) for i, e in enumerate(entries)]
            return SharedAuthKey(tuple(rows), delta)
    except (AttributeError, TypeError) as exc:
        raise CorruptFileError(f"malformed key entry: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, CorruptFileError):
            raise
        raise CorruptFileError(str(exc)) from exc
    raise CorruptFileError(f"unknown key kind {kind!r}")


def load_key(path):
    return key_from_dict(_load(path))


def load_signed(path) -> BitString | None:
    """The message an auth key file has already been used for, if any."""
    signed = _load(path).get("signed")
    if signed is None:
        return None
    try:
        return BitString.from_str(signed)
    except (TypeError, ValueError) as exc:
        raise CorruptFileError(f"bad 'signed' field: {exc}") from exc

"""Command-line driver.

Exit codes are shared by every subcommand:

    0  success (and, for check/authverify, every register passed)
    1  a check or verification failed
    2  usage or validation error
    3  an output file could not be written
    4  an input file is missing, corrupt or violates an invariant
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import analysis
from .adversary import (
    STRATEGY_NAMES,
    UnitaryFlip,
    attack_measure_resend,
    attack_unitary_flip,
    expected_pass_prob,
    forge_guess,
    opaque,
    strategy_from_name,
)
from .authcode import SharedAuthKey, auth_encode, auth_keygen, auth_verify
from .files import CorruptFileError, load_bank, load_key, load_signed, save_bank, save_key
from .protocol import BitString, PairingError, SecretKey, check_subset, read_bank, store
from .qcore import RandomSource

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_WRITE, EXIT_CORRUPT = 0, 1, 2, 3, 4

SWEEP_COLUMNS = ("n", "strategy", "empirical_pass", "analytic_pass", "std_error", "trials", "seed")
FLIP_COLUMNS = ("index", "delta_theta", "empirical_detect", "analytic_detect", "std_error", "trials", "seed")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _write(fn, *args) -> None:
    try:
        fn(*args)
    except OSError as exc:
        raise CliError(EXIT_WRITE, f"cannot write output: {exc}") from exc


def _write_csv(path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    _write(Path(path).write_text, buf.getvalue())


def _bits(text: str) -> BitString:
    try:
        return BitString.from_str(text)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad {what}: {text!r}") from exc


def _storage_key(path) -> SecretKey:
    key = load_key(path)
    if not isinstance(key, SecretKey):
        raise CliError(EXIT_USAGE, f"{path} is not a storage key")
    return key


def _auth_key(path) -> SharedAuthKey:
    key = load_key(path)
    if not isinstance(key, SharedAuthKey):
        raise CliError(EXIT_USAGE, f"{path} is not an auth key")
    return key


def cmd_store(args) -> int:
    c = _bits(args.bits)
    bank, key = store(c, RandomSource(args.seed), label=args.label)
    _write(save_bank, bank, args.bank)
    _write(save_key, key, args.key)
    print(len(bank))
    return EXIT_OK


def cmd_read(args) -> int:
    bank = load_bank(args.bank)
    c, after = read_bank(bank, RandomSource(args.seed))
    _write(save_bank, after, args.bank)
    print(c)
    return EXIT_OK


def cmd_check(args) -> int:
    bank = load_bank(args.bank)
    key = _storage_key(args.key)
    if len(bank) != len(key):
        raise CliError(EXIT_USAGE, f"bank has {len(bank)} registers, key has {len(key)} entries")
    indices = range(len(bank)) if args.indices is None else _int_list(args.indices, "indices")
    try:
        report, after = check_subset(bank, key, indices, RandomSource(args.seed))
    except (IndexError, ValueError) as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    _write(save_bank, after, args.bank)
    print("index  result")
    for i, ok in report.per_index:
        print(f"{i:5d}  {'pass' if ok else 'FAIL'}")
    print("verdict:", "original" if report.all_pass else "NOT original")
    return EXIT_OK if report.all_pass else EXIT_FAIL


def _strategy(args):
    try:
        return strategy_from_name(args.strategy, args.basis_angle)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _print_rows(columns, rows) -> None:
    print("  ".join(columns))
    for row in rows:
        print("  ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))


def cmd_attack(args) -> int:
    strategy = _strategy(args)
    if args.trials < 1:
        raise CliError(EXIT_USAGE, "--trials must be at least 1")
    if args.key is not None:
        if not isinstance(strategy, UnitaryFlip):
            raise CliError(EXIT_USAGE, "--key only applies to the flip strategy")
        key = _auth_key(args.key)
        rows = []
        for i, (t0, t1) in enumerate(key.entries):
            est = analysis.flip_detection_rate(key, i, args.trials, args.seed)
            analytic = 1.0 - expected_pass_prob(strategy, theta_pair=(t0, t1))
            rows.append((i, t0 - t1, est.mean, analytic, est.std_error, args.trials, args.seed))
        columns = FLIP_COLUMNS
    else:
        if args.n < 1:
            raise CliError(EXIT_USAGE, "--n must be at least 1")
        res = analysis.sweep(strategy, [args.n], args.trials, args.seed, args.workers)
        rows = [_sweep_tuple(r) for r in res.rows]
        columns = SWEEP_COLUMNS
    if args.out:
        _write_csv(args.out, columns, rows)
    _print_rows(columns, rows)
    return EXIT_OK


def _sweep_tuple(r: analysis.SweepRow) -> tuple:
    return (r.n, r.strategy, r.empirical_pass, r.analytic_pass, r.std_error, r.trials, r.seed)


def cmd_sweep(args) -> int:
    strategy = _strategy(args)
    ns = _int_list(args.n_list, "--n-list")
    if not ns or any(n < 1 for n in ns):
        raise CliError(EXIT_USAGE, "--n-list must hold one or more positive lengths")
    if args.trials < 1:
        raise CliError(EXIT_USAGE, "--trials must be at least 1")
    res = analysis.sweep(strategy, ns, args.trials, args.seed, args.workers)
    rows = [_sweep_tuple(r) for r in res.rows]
    if args.out:
        _write_csv(args.out, SWEEP_COLUMNS, rows)
    _print_rows(SWEEP_COLUMNS, rows)
    return EXIT_OK


def cmd_forge(args) -> int:
    """Act as the adversary on a bank file and write the result."""
    bank = load_bank(args.bank)
    rng = RandomSource(args.seed)
    strategy = _strategy(args)
    if strategy.name == "guess":
        c, _ = read_bank(bank, rng)
        forged = forge_guess(c, rng)
    elif strategy.name == "measure-resend":
        forged = attack_measure_resend(opaque(bank), args.basis_angle, rng)
    else:
        indices = None if args.indices is None else _int_list(args.indices, "indices")
        try:
            forged = attack_unitary_flip(bank, indices)
        except IndexError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from exc
    _write(save_bank, forged, args.out)
    print(len(forged))
    return EXIT_OK


def cmd_authgen(args) -> int:
    if args.n < 1:
        raise CliError(EXIT_USAGE, "--n must be at least 1")
    key = auth_keygen(args.n, RandomSource(args.seed))
    _write(save_key, key, args.key)
    print(len(key))
    return EXIT_OK


def cmd_authsign(args) -> int:
    c = _bits(args.bits)
    key = _auth_key(args.key)
    signed = load_signed(args.key)
    if signed is not None and signed != c:
        raise CliError(EXIT_USAGE, f"key reuse refused: {args.key} already signed {signed}")
    try:
        bank = auth_encode(c, key)
    except PairingError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    _write(save_bank, bank, args.bank)
    if signed is None:
        _write(save_key, key, args.key, c)
    print(len(bank))
    return EXIT_OK


def cmd_authverify(args) -> int:
    bank = load_bank(args.bank)
    key = _auth_key(args.key)
    try:
        res = auth_verify(bank, key, RandomSource(args.seed))
    except PairingError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    print(res.message)
    if res.authentic:
        print("verdict: authentic")
        return EXIT_OK
    print("verdict: NOT authentic; failed at", ",".join(map(str, res.failures)))
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qantipiracy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        return sp

    sp = seeded(sub.add_parser("store", help="store a bit string in fresh registers"))
    sp.add_argument("bits")
    sp.add_argument("--bank", required=True)
    sp.add_argument("--key", required=True)
    sp.add_argument("--label", default="")
    sp.set_defaults(func=cmd_store)

    sp = seeded(sub.add_parser("read", help="read a bank (rewrites it with post-measurement states)"))
    sp.add_argument("bank")
    sp.set_defaults(func=cmd_read)

    sp = seeded(sub.add_parser("check", help="check a bank against its storage key"))
    sp.add_argument("bank")
    sp.add_argument("key")
    sp.add_argument("--indices", help="comma-separated subset to check")
    sp.set_defaults(func=cmd_check)

    for name, func, helptext in (
        ("attack", cmd_attack, "Monte Carlo pass rate for one bank length"),
        ("sweep", cmd_sweep, "Monte Carlo pass rate over several bank lengths"),
    ):
        sp = seeded(sub.add_parser(name, help=helptext))
        sp.add_argument("strategy", help="one of: " + ", ".join(STRATEGY_NAMES))
        if name == "attack":
            sp.add_argument("--n", type=int, default=1)
            sp.add_argument("--key", help="auth key: report per-index flip detection")
        else:
            sp.add_argument("--n-list", default="1,2,4,8,16,32")
        sp.add_argument("--trials", type=int, default=10**6)
        sp.add_argument("--basis-angle", type=float, default=0.0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", help="CSV output path")
        sp.set_defaults(func=func)

    sp = seeded(sub.add_parser("forge", help="run an adversary on a bank file"))
    sp.add_argument("bank")
    sp.add_argument("--strategy", default="guess")
    sp.add_argument("--basis-angle", type=float, default=0.0)
    sp.add_argument("--indices", help="flip only these registers")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_forge)

    sp = seeded(sub.add_parser("authgen", help="generate a shared authentication key"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--key", required=True)
    sp.set_defaults(func=cmd_authgen)

    sp = sub.add_parser("authsign", help="encode a message under an auth key")
    sp.add_argument("bits")
    sp.add_argument("--key", required=True)
    sp.add_argument("--bank", required=True)
    sp.set_defaults(func=cmd_authsign)

    sp = seeded(sub.add_parser("authverify", help="read and verify an authenticated bank"))
    sp.add_argument("bank")
    sp.add_argument("key")
    sp.set_defaults(func=cmd_authverify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CorruptFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

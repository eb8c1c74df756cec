"""Command-line front end.

Subcommands ``run``, ``rotate``, ``oracle``, ``verify`` and ``ledger``.
Traces are line-delimited JSON; every record carries ``schema``.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 search overflow.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from coopchain.core_model import MessageAssignment, ModelError, backhaul_load
from coopchain.dof_engine import (
    TOL_DESIRED,
    TOL_INTERFERENCE,
    TransmissionScheme,
    generic_report,
)
from coopchain.fairness import RotationError, run_rotation
from coopchain.ledger import SCHEMA_VERSION, Ledger, LedgerError, coin_endowment
from coopchain.oracle import SearchOverflow, SearchSpace, eta_one_shot
from coopchain.protocol import ProtocolResult, run_protocol

log = logging.getLogger("coopchain")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_OVERFLOW = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


@dataclass(frozen=True)
class RunConfig:
    K: int
    seed: int = 0
    trials: int = 100
    tol_interference: float = TOL_INTERFERENCE
    tol_desired: float = TOL_DESIRED
    mode: str = "protocol"
    out: Path | None = None

    def __post_init__(self):
        if self.K < 1:
            raise CliError(EXIT_CONFIG, "config", f"--k must be >= 1, got {self.K}")
        if self.trials < 1:
            raise CliError(EXIT_CONFIG, "config", f"--trials must be >= 1, got {self.trials}")
        if self.tol_interference <= 0 or self.tol_desired <= 0:
            raise CliError(EXIT_CONFIG, "config", "tolerances must be positive")


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _header(mode: str, cfg: RunConfig) -> dict:
    return {
        "record": "header",
        "schema": SCHEMA_VERSION,
        "mode": mode,
        "k": cfg.K,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "tol_interference": cfg.tol_interference,
        "tol_desired": cfg.tol_desired,
    }


def node_records(res: ProtocolResult) -> list[dict]:
    recs = []
    for o in res.outcomes:
        recs.append({
            "record": "node",
            "schema": SCHEMA_VERSION,
            "index": o.node,
            "cm_in": o.inbox.cm.name,
            "paid_in": o.inbox.paid_by_predecessor,
            "branch": o.branch,
            "cm_out": o.outgoing_cm.name,
            "cm_out_bits": o.outgoing_cm.bits,
            "cm_sent": o.cm_sent,
            "actions": [
                {"message": a.message, "transmitter": a.transmitter, "purpose": a.purpose.value}
                for a in sorted(o.transmit_actions, key=lambda a: (a.message, a.transmitter))
            ],
            "payments": [
                {"payee": p.payee, "reason": p.reason.value,
                 "mode": None if p.mode is None else p.mode.value}
                for p in o.payments
            ],
            "turned_off": o.turned_off,
            "subroutine": None if o.subroutine is None else o.subroutine.value,
        })
    return recs


def final_record(res: ProtocolResult, rep) -> dict:
    return {
        "record": "final",
        "schema": SCHEMA_VERSION,
        "assignment": res.assignment.as_lists(),
        "active_receivers": sorted(res.active_receivers),
        "active_transmitters": sorted(res.active_transmitters),
        "backhaul_load": _frac(backhaul_load(res.assignment)),
        "puDoF": _frac(Fraction(len(res.active_receivers), res.K)),
        "cm_bits_total": res.cm_bits_total,
        "setup_steps": res.setup_steps,
        "transaction_count": len(res.transactions),
        "verified": rep.passed,
        "max_interference_residual": rep.max_residual,
        "min_desired_coeff": rep.min_desired,
    }


@contextmanager
def _sink(path: Path | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit(fh, records) -> None:
    for r in records:
        fh.write(json.dumps(r) + "\n")


def cmd_run(cfg: RunConfig, ledger_out: Path | None = None, figure: Path | None = None) -> int:
    res = run_protocol(cfg.K)
    rep = generic_report(res.scheme(), cfg.trials, cfg.seed, cfg.tol_interference, cfg.tol_desired)
    with _sink(cfg.out) as fh:
        _emit(fh, [_header("run", cfg), *node_records(res), final_record(res, rep)])
    if ledger_out is not None:
        ledger = Ledger(cfg.K).extend(res.transactions)
        ledger.seal_block()
        ledger_out.write_text(ledger.dumps())
    if figure is not None:
        from coopchain.plotting import plot_protocol
        plot_protocol(res, figure)
    if not rep.passed:
        log.error("generic verification failed: %s", rep.failure)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_rotate(cfg: RunConfig, ledger_out: Path | None = None, figure: Path | None = None) -> int:
    rot = run_rotation(cfg.K, cfg.trials, cfg.seed)
    records = [_header("rotate", cfg)]
    for p, res in enumerate(rot.phases):
        records.append({
            "record": "phase",
            "schema": SCHEMA_VERSION,
            "phase": p,
            "assignment": res.assignment.as_lists(),
            "active_receivers": sorted(res.active_receivers),
            "cm_trace": [c.name for c in res.cm_trace],
            "transaction_count": len(res.transactions),
            "block_hash": rot.ledger.blocks[p].block_hash.hex(),
        })
    records.append({
        "record": "final",
        "schema": SCHEMA_VERSION,
        "puDoF": _frac(rot.puDoF),
        "interior_puDoF": None if rot.interior_pu_dof is None else _frac(rot.interior_pu_dof),
        "per_user_dof": [_frac(d) for d in rot.per_user_dof],
        "interior_nodes": rot.interior,
        "nets": {str(i): n for i, n in rot.nets.items()},
        "balances": {str(i): b for i, b in rot.balances.items()},
        "coin_supply": sum(rot.endowment.values()),
        "min_balance_seen": rot.min_balance_seen,
        "parts_delivered": rot.total_parts,
        "chain_valid": rot.ledger.validate().ok,
    })
    with _sink(cfg.out) as fh:
        _emit(fh, records)
    if ledger_out is not None:
        ledger_out.write_text(rot.ledger.dumps())
    if figure is not None:
        from coopchain.plotting import plot_rotation
        plot_rotation(rot, figure)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, window: int = 1, cap: int = 2) -> int:
    try:
        space = SearchSpace(cfg.K, window=window, max_per_message=cap)
        res = eta_one_shot(space, seed=cfg.seed)
    except SearchOverflow as e:
        raise CliError(EXIT_OVERFLOW, "search_overflow", str(e)) from None
    proto = run_protocol(cfg.K)
    record = {
        "record": "oracle",
        "schema": SCHEMA_VERSION,
        "k": cfg.K,
        "best_count": res.best_count,
        "witness": {
            "assignment": res.witness.assignment.as_lists(),
            "active_receivers": sorted(res.witness.active_receivers),
        },
        "witness_confirmed": res.confirmed,
        "protocol_active": len(proto.active_receivers),
        "protocol_match": len(proto.active_receivers) == res.best_count,
    }
    with _sink(cfg.out) as fh:
        _emit(fh, [record])
    return EXIT_OK if res.confirmed else EXIT_VERIFY


def _read_records(path: Path) -> list[dict]:
    try:
        return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot read {path}: {e}") from None


def cmd_verify(trace: Path, cfg_overrides: dict) -> int:
    """Re-derive a ``run`` trace and re-check its scheme."""
    records = _read_records(trace)
    header = next((r for r in records if r.get("record") == "header"), None)
    final = next((r for r in records if r.get("record") == "final"), None)
    if header is None or final is None or header.get("mode") != "run":
        raise CliError(EXIT_CONFIG, "config", f"{trace} is not a run trace")
    params = {k: header[k] for k in ("seed", "trials", "tol_interference", "tol_desired")}
    params.update({k: v for k, v in cfg_overrides.items() if v is not None})
    cfg = RunConfig(header["k"], **params)
    res = run_protocol(cfg.K)
    rep = generic_report(res.scheme(), cfg.trials, cfg.seed, cfg.tol_interference, cfg.tol_desired)
    problems = []
    if [r for r in records if r.get("record") == "node"] != node_records(res):
        problems.append("node records differ from a fresh protocol run")
    try:
        stored = TransmissionScheme(
            MessageAssignment.from_lists(final["assignment"]), frozenset(final["active_receivers"])
        )
    except (ModelError, KeyError, TypeError) as e:
        problems.append(f"stored scheme malformed: {e}")
    else:
        srep = generic_report(stored, cfg.trials, cfg.seed, cfg.tol_interference, cfg.tol_desired)
        if not srep.passed:
            problems.append(f"stored scheme fails verification: {srep.failure}")
        if backhaul_load(stored.assignment) > 1:
            problems.append("stored assignment violates the backhaul constraint")
    fresh = final_record(res, rep)
    for key in ("backhaul_load", "puDoF", "cm_bits_total", "setup_steps", "transaction_count"):
        if final.get(key) != fresh[key]:
            problems.append(f"final.{key}: stored {final.get(key)!r}, recomputed {fresh[key]!r}")
    report = {"record": "verify", "schema": SCHEMA_VERSION, "ok": not problems and rep.passed,
              "problems": problems}
    _emit(sys.stdout, [report])
    return EXIT_OK if report["ok"] else EXIT_VERIFY


def cmd_ledger(path: Path, K: int | None = None) -> int:
    try:
        ledger = Ledger.read_jsonl(path.read_text().splitlines(), K)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise CliError(EXIT_CONFIG, "config", f"cannot parse ledger {path}: {e}") from None
    status = ledger.validate()
    record = {
        "record": "ledger",
        "schema": SCHEMA_VERSION,
        "ok": status.ok,
        "blocks": len(ledger.blocks),
        "position": status.position,
        "reason": status.reason,
    }
    if status.ok:
        endowment = coin_endowment(ledger.K)
        record["coin_supply"] = sum(endowment.values())
        record["balances"] = {str(i): b for i, b in ledger.balances(endowment).items()}
        record["min_balance_seen"] = ledger.min_balance(endowment)
    _emit(sys.stdout, [record])
    return EXIT_OK if status.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--tol-interference", type=float, default=None)
    common.add_argument("--tol-desired", type=float, default=None)
    common.add_argument("--out", type=Path, default=None, help="trace file (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="coopchain", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "execute the greedy protocol once"),
                        ("rotate", "four-phase fairness rotation")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--k", type=int, required=True)
        s.add_argument("--ledger-out", type=Path, default=None)
        s.add_argument("--figure", type=Path, default=None, help="write a PNG/PDF figure")

    s = sub.add_parser("oracle", parents=[common], help="exhaustive one-shot search")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--window", type=int, default=1)
    s.add_argument("--max-per-message", type=int, default=2)

    s = sub.add_parser("verify", parents=[common], help="re-check a stored run trace")
    s.add_argument("trace", type=Path)

    s = sub.add_parser("ledger", parents=[common], help="validate a ledger export")
    s.add_argument("path", type=Path)
    s.add_argument("--k", type=int, default=None)
    return p


def _config(args, mode: str) -> RunConfig:
    return RunConfig(
        K=args.k,
        seed=0 if args.seed is None else args.seed,
        trials=100 if args.trials is None else args.trials,
        tol_interference=TOL_INTERFERENCE if args.tol_interference is None else args.tol_interference,
        tol_desired=TOL_DESIRED if args.tol_desired is None else args.tol_desired,
        mode=mode,
        out=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(_config(args, "protocol"), args.ledger_out, args.figure)
        if args.command == "rotate":
            return cmd_rotate(_config(args, "rotation"), args.ledger_out, args.figure)
        if args.command == "oracle":
            return cmd_oracle(_config(args, "oracle"), args.window, args.max_per_message)
        if args.command == "verify":
            overrides = {"seed": args.seed, "trials": args.trials,
                         "tol_interference": args.tol_interference, "tol_desired": args.tol_desired}
            return cmd_verify(args.trace, overrides)
        return cmd_ledger(args.path, args.k)
    except CliError as e:
        print(json.dumps({"error": e.kind, "code": e.code, "message": str(e), **e.extra}),
              file=sys.stderr)
        return e.code
    except RotationError as e:
        print(json.dumps({"error": "verification", "code": EXIT_VERIFY, "message": str(e)}),
              file=sys.stderr)
        return EXIT_VERIFY
    except (ModelError, LedgerError, ValueError) as e:
        print(json.dumps({"error": "config", "code": EXIT_CONFIG, "message": str(e)}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

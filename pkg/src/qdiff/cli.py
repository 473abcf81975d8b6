"""Command-line front end.

Every command writes JSON lines (CSV for ``ddt --csv``). The first line is
the full effective configuration, seed included, and
``--config <previous output>`` replays a run byte for byte.

Exit codes: 0 success, 1 bad input, 2 resource limit (solution space or
guess space too large).
"""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path
from typing import Callable

from . import boolfn, bvsim, oracle, spn
from .differential import ParamConfig, algorithm1, algorithm2_full, algorithm2_partial, choose_p
from .gf2 import DimensionTooLarge
from .rng import SEED_BITS, check_seed, derive_rng


class InputError(Exception):
    pass


# -- config helpers -----------------------------------------------------------

def _load_function(cfg: dict) -> boolfn.TruthTable:
    if cfg.get("sbox") is not None:
        return boolfn.TruthTable.from_json(cfg["sbox"])
    if cfg.get("fixture") is not None:
        return boolfn.fixture_sbox(cfg["fixture"])
    raise InputError("give --fixture NAME or --sbox FILE")


def _params(cfg: dict) -> ParamConfig:
    return ParamConfig(c=cfg["c"], c1=cfg["c1"], c2=cfg["c2"], p_override=cfg.get("p"))


def _resolve_p(cfg: dict, m: int, n: int) -> int:
    if cfg.get("p") is None:
        cfg["p"] = choose_p(m, n, _params(cfg))
    return cfg["p"]


def _components(cfg: dict, F: boolfn.TruthTable) -> list[int]:
    j = cfg.get("component")
    if j is None:
        return list(range(1, F.n + 1))
    if not 1 <= j <= F.n:
        raise InputError(f"--component must be in [1, {F.n}]")
    return [j]


# -- commands -------------------------------------------------------------------
# Each handler reads only ``cfg`` and may fill in derived values (p, ...) before
# the header is written, so the header alone determines the output.

def cmd_spectrum(cfg: dict) -> list[dict]:
    F = _load_function(cfg)
    out = []
    for j in _components(cfg, F):
        spec = boolfn.walsh_spectrum(boolfn.component(F, j))
        out.append({"type": "spectrum", "j": j, "coeffs": spec.coeffs.tolist(), "energy": spec.energy()})
    return out


def cmd_bv_sample(cfg: dict) -> list[dict]:
    F = _load_function(cfg)
    p = _resolve_p(cfg, F.m, F.n)
    # Same per-component streams as algo1.
    streams = derive_rng(cfg["seed"]).spawn(F.n)
    out = []
    for j in _components(cfg, F):
        s = bvsim.bv_batch(boolfn.component(F, j), p, streams[j - 1])
        out.append({"type": "samples", "j": j, "p": s.p, "samples": s.to_json()})
    return out


def _algo1(cfg: dict):
    F = _load_function(cfg)
    p = _resolve_p(cfg, F.m, F.n)
    return F, algorithm1(F, p, derive_rng(cfg["seed"]))


def cmd_algo1(cfg: dict) -> list[dict]:
    _, sets = _algo1(cfg)
    return [
        {"type": "sets", "j": j, "dim": s.dim, "size0": s.size(0), "size1": s.size(1), **s.to_json()}
        for j, s in enumerate(sets, start=1)
    ]


def _candidates(cfg: dict):
    F, sets = _algo1(cfg)
    if cfg["mode"] == "full":
        cands = algorithm2_full(sets, cfg["cap"])
    elif cfg["mode"] == "partial":
        cands = algorithm2_partial(sets, cfg["cap"], cfg["min_known"])
    else:
        raise InputError(f"unknown mode {cfg['mode']!r}")
    return F, cands


def cmd_algo2(cfg: dict) -> list[dict]:
    _, cands = _candidates(cfg)
    return [{"type": "candidate", **c.to_json()} for c in cands] + [
        {"type": "summary", "candidates": len(cands)}
    ]


def cmd_verify(cfg: dict) -> list[dict]:
    F, cands = _candidates(cfg)
    rows = oracle.verify_candidates(F, cands)
    return [{"type": "verified", **v.to_json()} for v in rows] + [
        {"type": "summary", "candidates": len(rows), "below_half": sum(v.below_half for v in rows)}
    ]


def cmd_ddt(cfg: dict) -> list[dict] | str:
    table = oracle.ddt(_load_function(cfg))
    if cfg["csv"]:
        return table.to_csv()
    return [{"type": "ddt_row", "a": a, "counts": row} for a, row in enumerate(table.counts.tolist())]


def _spn_spec(cfg: dict) -> spn.SpnSpec:
    if cfg.get("spec") is None:
        return spn.reference_spec()
    return spn.SpnSpec.from_json(cfg["spec"])


def cmd_attack(cfg: dict) -> list[dict]:
    spec = _spn_spec(cfg)
    cfg["spec"] = spec.to_json()
    _resolve_p(cfg, spec.k, spec.k)
    key = spn.random_key(spec, derive_rng(cfg["seed"], 0))
    result = spn.run_attack(
        spec, key, _params(cfg), derive_rng(cfg["seed"], 1),
        num_pairs=cfg.get("pairs"), cap=cfg["cap"], min_known=cfg["min_known"],
        max_groups=cfg["max_groups"],
    )
    return [{"type": "attack", "round_keys": list(key.round_keys), **result.to_json(cfg.get("top"))}]


def cmd_validate_t1(cfg: dict) -> list[dict]:
    if cfg.get("p") is None:
        raise InputError("validate-t1 needs --p")
    rep = oracle.validate_theorem1(cfg["m"], cfg["trials"], cfg["p"], cfg["epsilon"], cfg["seed"], cfg["cap"])
    return [{"type": "report", **rep.to_json()}]


def cmd_validate_joint(cfg: dict) -> list[dict]:
    _resolve_p(cfg, cfg["m"], cfg["n"])
    rep = oracle.validate_joint_bound(cfg["m"], cfg["n"], cfg["trials"], _params(cfg), cfg["seed"], cfg["cap"])
    return [{"type": "report", **rep.to_json()}]


# -- argument parsing ---------------------------------------------------------------

def _add_source(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fixture", help="built-in S-box: " + ", ".join(
        f"{k} ({v})" for k, v in boolfn.FIXTURE_HELP.items()))
    g.add_argument("--sbox", metavar="FILE", help='S-box JSON {"m":..,"n":..,"table":[..]}')


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, help="BV runs per component (default: max(c*m, ceil(c2*c1^2*n^2)))")
    p.add_argument("--c", type=float, default=2.0, help="p(m) = c*m, c >= 2 (default 2)")
    p.add_argument("--c1", type=float, default=2.0, help="epsilon = 1/(c1*n), c1 >= 2 (default 2)")
    p.add_argument("--c2", type=float, help="run-count constant (default 1 + ln(n)/2)")
    p.add_argument("--cap", type=int, default=20, help="max solution-space dimension to enumerate")


# name -> (handler, config keys, argument setup)
COMMANDS: dict[str, tuple[Callable, tuple[str, ...], Callable]] = {}


def _command(name: str, handler: Callable, keys: tuple[str, ...], help: str):
    def register(setup: Callable):
        setup.help = help
        COMMANDS[name] = (handler, keys, setup)
        return setup
    return register


_SOURCE = ("fixture", "sbox")
_PARAMS = ("p", "c", "c1", "c2", "cap")


@_command("spectrum", cmd_spectrum, _SOURCE + ("component",), "Walsh spectra of the component functions")
def _setup_spectrum(p):
    _add_source(p)
    p.add_argument("--component", type=int, help="1-based component (default: all)")


@_command("bv-sample", cmd_bv_sample, _SOURCE + _PARAMS + ("component",), "raw BV measurement outcomes")
def _setup_bv_sample(p):
    _add_source(p)
    _add_params(p)
    p.add_argument("--component", type=int, help="1-based component (default: all)")


@_command("algo1", cmd_algo1, _SOURCE + _PARAMS, "solution sets A_j^0, A_j^1 for every component")
def _setup_algo1(p):
    _add_source(p)
    _add_params(p)


def _add_walk(p):
    p.add_argument("--mode", choices=("full", "partial"), default="full",
                   help="full: every output bit known; partial: unknown bits allowed")
    p.add_argument("--min-known", dest="min_known", type=int, default=1,
                   help="partial mode: minimum number of known output bits")


@_command("algo2", cmd_algo2, _SOURCE + _PARAMS + ("mode", "min_known"), "candidate differentials")
def _setup_algo2(p):
    _add_source(p)
    _add_params(p)
    _add_walk(p)


@_command("verify", cmd_verify, _SOURCE + _PARAMS + ("mode", "min_known"), "candidates with exact probabilities")
def _setup_verify(p):
    _add_source(p)
    _add_params(p)
    _add_walk(p)


@_command("ddt", cmd_ddt, _SOURCE + ("csv",), "difference distribution table")
def _setup_ddt(p):
    _add_source(p)
    p.add_argument("--csv", action="store_true", help="CSV instead of JSON lines")


@_command("attack", cmd_attack, ("spec",) + _PARAMS + ("pairs", "min_known", "max_groups", "top"),
          "differential search on the reduced cipher plus last-round subkey ranking")
def _setup_attack(p):
    p.add_argument("--spec", metavar="FILE", help="SPN JSON (default: 16-bit reference SPN with ls4)")
    _add_params(p)
    p.add_argument("--pairs", type=int, help="plaintext pairs (default ceil(8 / probability))")
    p.add_argument("--min-known", dest="min_known", type=int, default=1)
    p.add_argument("--max-groups", dest="max_groups", type=int, default=spn.DEFAULT_MAX_GROUPS)
    p.add_argument("--top", type=int, help="only print the first TOP ranking entries")


@_command("validate-t1", cmd_validate_t1, ("m", "trials", "p", "epsilon", "cap"),
          "Monte Carlo check of the single-function sampling bound")
def _setup_t1(p):
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--p", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--cap", type=int, default=20)


@_command("validate-joint", cmd_validate_joint, ("m", "n", "trials") + _PARAMS, "Monte Carlo check of the whole-S-box bound")
def _setup_joint(p):
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=100)
    _add_params(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdiff", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, _, setup) in COMMANDS.items():
        p = sub.add_parser(name, help=setup.help, description=setup.help)
        setup(p)
        p.add_argument("--seed", type=int, help=f"{SEED_BITS}-bit seed (random and printed if omitted)")
        p.add_argument("--config", metavar="FILE",
                       help="JSON config or a previous output file; its values override flags")
        p.add_argument("--out", metavar="FILE", help="output file (must not exist; default stdout)")
    return parser


def _read_config(path: str) -> dict:
    text = Path(path).read_text()
    first = text.splitlines()[0] if text else ""
    if first.startswith("# "):
        first = first[2:]
    try:
        obj = json.loads(first)
    except json.JSONDecodeError:
        obj = json.loads(text)
    if isinstance(obj, dict) and obj.get("type") == "config":
        return {"command": obj.get("command"), **obj["config"]}
    if not isinstance(obj, dict):
        raise InputError("config must be a JSON object")
    return obj


def _effective_config(args: argparse.Namespace) -> dict:
    _, keys, _ = COMMANDS[args.command]
    cfg = {k: getattr(args, k, None) for k in keys}
    cfg["seed"] = args.seed
    if "sbox" in cfg and cfg["sbox"] is not None:
        cfg["sbox"] = json.loads(Path(cfg["sbox"]).read_text())
    if "spec" in cfg and cfg["spec"] is not None:
        cfg["spec"] = json.loads(Path(cfg["spec"]).read_text())
    if args.config:
        loaded = _read_config(args.config)
        if loaded.get("command") not in (None, args.command):
            raise InputError(f"config is for command {loaded['command']!r}, not {args.command!r}")
        unknown = set(loaded) - set(cfg) - {"command"}
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    if cfg["seed"] is None:
        cfg["seed"] = secrets.randbits(SEED_BITS - 1)
        print(f"seed: {cfg['seed']}", file=sys.stderr)
    check_seed(cfg["seed"])
    return cfg


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.out and Path(args.out).exists():
            raise InputError(f"refusing to overwrite {args.out}")
        cfg = _effective_config(args)
        result = COMMANDS[args.command][0](cfg)
        header = _dump({"type": "config", "command": args.command, "config": cfg})
        if isinstance(result, str):
            text = "# " + header + "\n" + result
        else:
            text = header + "\n" + "".join(_dump(r) + "\n" for r in result)
    except DimensionTooLarge as exc:
        print(f"error: {exc} (e.g. rerun with a larger --p)", file=sys.stderr)
        return 2
    except spn.GuessSpaceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, ValueError, KeyError, IndexError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "x") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())

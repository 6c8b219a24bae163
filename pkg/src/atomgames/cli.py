"""Command line entry point.

Every command prints one JSON report on standard output and logs to standard
error.  Exit status 0 means a definite answer, 2 means the search ran out of
budget and 1 means a usage or structural error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import networkx as nx

from . import basis as basis_mod
from . import blur as blur_mod
from . import games, rainbow
from .games import DEFAULT_BUDGET, UNDECIDED, GameConfig
from .networks import Network
from .structures import (CaAtomStructure, RaAtomStructure, StructuralError, blocked_ca,
                         cs_atom_structure, maddux_ek23, one_atom_ca, one_atom_ra,
                         structure_from_json, validate_ca, validate_ra)

SCHEMA = 1
BUDGET_ENV = "ATOMGAMES_BUDGET"
log = logging.getLogger("atomgames")


@dataclass
class RunReport:
    command: list
    parameters: dict
    outcome: dict
    witnesses: dict = field(default_factory=dict)
    timing: float = 0.0
    budget: dict = field(default_factory=dict)
    schema: int = SCHEMA

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict | str) -> "RunReport":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# -- structure loading --------------------------------------------------------------

def load_structure(spec: str, kind: str | None = None):
    """A structure from a JSON file or a built-in alias.

    Aliases: ``one-atom``, ``blocked``, ``maddux:k``, ``cs:n:base`` and
    ``rainbow:n:G:R`` (``G`` greens and ``R`` reds).  A missing ``.json`` file
    whose stem is an alias resolves to the alias.  ``kind`` picks the
    relation algebra reading of ``one-atom``.
    """
    path = Path(spec)
    if path.is_file():
        S = structure_from_json(path.read_text())
    else:
        S = _alias(path.stem if spec.endswith(".json") else spec, kind)
    if kind == "ra" and not isinstance(S, RaAtomStructure):
        raise StructuralError(f"{spec} is not a relation algebra atom structure")
    if kind == "ca" and not isinstance(S, CaAtomStructure):
        raise StructuralError(f"{spec} is not a cylindric atom structure")
    return S


def _alias(name: str, kind: str | None):
    name = name.strip().replace(" ", ":")
    if name == "one-atom":
        return one_atom_ra() if kind == "ra" else one_atom_ca(3)
    if name == "blocked":
        return blocked_ca(3)
    parts = name.split(":")
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise StructuralError(f"bad alias {name!r}") from None
    if parts[0] == "maddux" and len(nums) == 1:
        return maddux_ek23(nums[0])
    if parts[0] == "cs" and len(nums) == 2:
        return cs_atom_structure(*nums)
    if parts[0] == "rainbow" and len(nums) == 3:
        n, g, r = nums
        return rainbow.build_rainbow_ca(n, rainbow.RainbowSignature.standard(n, g, r))
    raise StructuralError(f"unknown structure {name!r}")


def load_graph(spec: str) -> nx.Graph:
    """``Kk``, ``Ck``, ``Pk`` or a JSON file ``{"nodes": k, "edges": [[u, v], ...]}``."""
    m = re.fullmatch(r"([KCP])(\d+)", spec)
    if m:
        k = int(m.group(2))
        return {"K": nx.complete_graph, "C": nx.cycle_graph, "P": nx.path_graph}[m.group(1)](k)
    data = json.loads(Path(spec).read_text())
    G = nx.Graph()
    G.add_nodes_from(range(data["nodes"]))
    G.add_edges_from(map(tuple, data["edges"]))
    return G


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None


def _rounds(text: str) -> int | None:
    if text in ("inf", "omega", "w"):
        return None
    return int(text)


# -- commands -------------------------------------------------------------------------

def cmd_validate(args):
    S = load_structure(args.algebra)
    rep = validate_ca(S) if isinstance(S, CaAtomStructure) else validate_ra(S)
    return {"valid": rep.ok, "atoms": len(S.names), "report": rep.to_json()}, {}


def cmd_rainbow_build(args):
    if args.variant == "zn":
        sig = rainbow.RainbowSignature.zn(args.n, args.z_depth, args.reds_count or args.reds)
    else:
        sig = rainbow.RainbowSignature.standard(args.n, args.greens, args.reds)
    S = rainbow.build_rainbow_ca(args.n, sig, cap=args.cap)
    counts = {"atoms": len(S.names)}
    witnesses = {}
    if args.split:
        T, copy_map = rainbow.split_reds(S, args.split)
        theta = rainbow.verify_theta_embedding(S, T, copy_map)
        counts.update(split_atoms=len(T.names), theta_ok=theta.ok)
        witnesses["theta"] = theta.to_json()
        S = T
    valid = validate_ca(S)
    counts["valid"] = valid.ok
    body = S.to_json()
    if args.output:
        Path(args.output).write_text(json.dumps(body, sort_keys=True))
        witnesses["written"] = args.output
    else:
        witnesses["structure"] = body
    outcome = {"provenance": {"signature": sig.to_json(), "split": args.split}, **counts}
    return outcome, witnesses


def _blur_spec(args, R: RaAtomStructure) -> blur_mod.BlurSpec:
    J = args.J
    if J.startswith("l:"):
        return blur_mod.l_subsets_blur(R, int(J[2:]), args.n, safe=args.safe)
    names = json.loads(Path(J).read_text() if Path(J).is_file() else J)
    sets = [[R.index[x] for x in W] for W in names]
    return blur_mod.BlurSpec(R, sets, n=args.n, safe=args.safe)


def cmd_blur_check(args):
    R = load_structure(args.algebra, "ra")
    rep = blur_mod.check_blur(_blur_spec(args, R), strong=args.strong)
    return {"blur": rep.ok, "violations": sorted(rep.rules())}, {"conditions": rep.conditions}


def cmd_blur_sweep(args):
    k = blur_mod.minimal_maddux_k(args.l, args.n, args.k_max, args.strong, args.safe)
    witnesses = {}
    if k is not None:
        spec = blur_mod.l_subsets_blur(maddux_ek23(k), args.l, args.n, safe=args.safe)
        witnesses["conditions"] = blur_mod.check_blur(spec, args.strong).conditions
    return {"minimal_k": k}, witnesses


def cmd_blur_build(args):
    R = load_structure(args.base, "ra")
    args.J = args.J or f"l:{args.l}"
    spec = _blur_spec(args, R)
    S = blur_mod.blow_up_and_blur(spec, args.trunc, cap=args.cap)
    valid = validate_ra(S)
    emb = blur_mod.check_embedding_witness(S, R)
    outcome = {"atoms": len(S.names), "valid": valid.ok, "embedding_ok": emb.ok}
    witnesses = {"embedding": emb.to_json()}
    if args.output:
        Path(args.output).write_text(json.dumps(S.to_json(), sort_keys=True))
        witnesses["written"] = args.output
    else:
        witnesses["structure"] = S.to_json()
    return outcome, witnesses


def cmd_basis_find(args):
    budget = args.budget
    if args.kind == "relational":
        R = load_structure(args.algebra, "ra")
        res = basis_mod.find_relational_basis(R, args.m, budget=budget)
        describe = lambda N: basis_mod.ra_network_json(R, N)
    else:
        S = load_structure(args.algebra, "ca")
        res = basis_mod.find_basis(S, args.m, kind=args.kind, budget=budget)
        describe = Network.to_json
    out = res.to_json(describe)
    return {"status": res.status, "stats": res.stats}, {k: v for k, v in out.items()
                                                         if k in ("basis", "trace")}


def cmd_game_solve(args):
    S = load_structure(args.algebra, "ca")
    cfg = GameConfig(args.m, _rounds(args.rounds), args.reuse)
    res = games.solve_game(S, cfg, budget=args.budget)
    return {"winner": res.winner, "depth": res.depth, "stats": res.stats}, {"witness": res.witness}


def _rainbow_game(args):
    if args.zn:
        n, N = (int(x) for x in args.zn.split(":"))
        sig = rainbow.RainbowSignature.zn(n, N + 1, N)
        tints = tuple(range(0, -N - 2, -1))
    else:
        n, g, r = (int(x) for x in args.rainbow.split(":"))
        sig = rainbow.RainbowSignature.standard(n, g, r)
        tints = None
    if args.tints:
        tints = tuple(int(x) for x in args.tints.split(","))
    return sig, rainbow.ConeScript(sig, tints)


def cmd_game_verify(args):
    if not (args.rainbow or args.zn):
        raise UsageError("verify-script needs --rainbow n:G:R or --zn n:N")
    sig, script = _rainbow_game(args)
    arena = rainbow.RainbowArena(sig, args.m, args.reuse)
    cfg = GameConfig(args.m, None if args.rounds is None else _rounds(args.rounds), args.reuse)
    res = games.verify_script(arena, cfg, script, args.depth_bound)
    if isinstance(res, games.Counterexample):
        return {"winner": games.EXISTS, "counterexample": res.reason}, {"play": res.play}
    return ({"winner": res.winner, "depth": res.depth, "stats": res.stats},
            {"proof_tree": res.witness})


def cmd_ef(args):
    G, H = load_graph(args.g), load_graph(args.h)
    winner = games.ef_pebble(args.p, args.r, G, H)
    outcome = {"winner": winner}
    if args.min_rounds:
        outcome["min_rounds"] = games.ef_min_rounds(args.p, G, H, args.r)
    return outcome, {}


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="atomgames", description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="accepted for compatibility; the search runs in one process")
    p.add_argument("--budget", type=int, default=None,
                   help=f"position budget (default from ${BUDGET_ENV} or {DEFAULT_BUDGET})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS)

    v = sub.add_parser("validate", parents=[common],
                       help="check a structure against the atom structure axioms")
    v.add_argument("--algebra", required=True)
    v.set_defaults(func=cmd_validate)

    rb = sub.add_parser("rainbow").add_subparsers(dest="action", required=True,
                                                  parser_class=_Parser)
    b = rb.add_parser("build", parents=[common])
    b.add_argument("--n", type=int, default=3)
    b.add_argument("--greens", type=int, default=4)
    b.add_argument("--reds", type=int, default=3)
    b.add_argument("--split", type=int, default=0)
    b.add_argument("--variant", choices=["base", "zn"], default="base")
    b.add_argument("--z-depth", type=int, default=3)
    b.add_argument("--reds-count", type=int, default=None)
    b.add_argument("--cap", type=int, default=rainbow.DEFAULT_ATOM_CAP)
    b.add_argument("--output")
    b.set_defaults(func=cmd_rainbow_build)

    bl = sub.add_parser("blur").add_subparsers(dest="action", required=True, parser_class=_Parser)
    c = bl.add_parser("check", parents=[common])
    c.add_argument("--algebra", required=True)
    c.add_argument("--J", required=True, help="l:SIZE, or a JSON list of atom-name lists")
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--strong", action="store_true")
    c.add_argument("--safe", choices=sorted(blur_mod.SAFE_RULES), default="forall")
    c.set_defaults(func=cmd_blur_check)
    w = bl.add_parser("sweep", parents=[common])
    w.add_argument("--l", type=int, default=3)
    w.add_argument("--n", type=int, default=3)
    w.add_argument("--k-max", type=int, default=20)
    w.add_argument("--strong", action="store_true")
    w.add_argument("--safe", choices=sorted(blur_mod.SAFE_RULES), default="forall")
    w.set_defaults(func=cmd_blur_sweep)
    u = bl.add_parser("build", parents=[common])
    u.add_argument("--base", required=True)
    u.add_argument("--l", type=int, default=3)
    u.add_argument("--J", default=None)
    u.add_argument("--n", type=int, default=3)
    u.add_argument("--trunc", type=int, required=True)
    u.add_argument("--safe", choices=sorted(blur_mod.SAFE_RULES), default="forall")
    u.add_argument("--cap", type=int, default=blur_mod.DEFAULT_ATOM_CAP)
    u.add_argument("--output")
    u.set_defaults(func=cmd_blur_build)

    bs = sub.add_parser("basis").add_subparsers(dest="action", required=True, parser_class=_Parser)
    f = bs.add_parser("find", parents=[common])
    f.add_argument("--algebra", required=True)
    f.add_argument("--m", type=int, required=True)
    f.add_argument("--kind", choices=["basis", "hyperbasis", "relational"], default="basis")
    f.set_defaults(func=cmd_basis_find)

    gm = sub.add_parser("game").add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = gm.add_parser("solve", parents=[common])
    s.add_argument("--algebra", required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--rounds", default="inf")
    s.add_argument("--reuse", action="store_true")
    s.set_defaults(func=cmd_game_solve)
    vs = gm.add_parser("verify-script", parents=[common])
    vs.add_argument("--rainbow", help="n:G:R")
    vs.add_argument("--zn", help="n:N, the Z/N rainbow truncated at N")
    vs.add_argument("--tints", help="comma separated tint schedule")
    vs.add_argument("--m", type=int, required=True)
    vs.add_argument("--rounds", default=None)
    vs.add_argument("--reuse", action="store_true")
    vs.add_argument("--depth-bound", type=int, default=10)
    vs.set_defaults(func=cmd_game_verify)

    e = sub.add_parser("ef", parents=[common], help="Ehrenfeucht-Fraisse pebble game")
    e.add_argument("--p", type=int, required=True)
    e.add_argument("--r", type=int, required=True)
    e.add_argument("--g", required=True)
    e.add_argument("--h", required=True)
    e.add_argument("--min-rounds", action="store_true")
    e.set_defaults(func=cmd_ef)
    return p


def _undecided(outcome: dict) -> bool:
    return UNDECIDED in (outcome.get("winner"), outcome.get("status"))


def run(argv: list[str] | None = None) -> tuple[int, RunReport | None, str]:
    """Dispatch without touching the process streams: (exit code, report, message)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.budget is None:
            args.budget = default_budget()
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(message)s")
        params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
        t0 = time.perf_counter()
        outcome, witnesses = args.func(args)
        elapsed = round(time.perf_counter() - t0, 3)
    except UsageError as exc:
        return 1, None, str(exc)
    except (StructuralError, ValueError, OSError, KeyError) as exc:
        return 1, None, f"error: {exc}"
    report = RunReport(argv, params, outcome, witnesses, elapsed,
                       {"limit": args.budget, "jobs": args.jobs})
    return (2 if _undecided(outcome) else 0), report, ""


def main(argv: list[str] | None = None) -> int:
    code, report, message = run(argv)
    if report is not None:
        sys.stdout.write(report.dumps() + "\n")
    if message:
        sys.stderr.write(message + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

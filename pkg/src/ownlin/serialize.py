"""JSON forms for states, footprints, histories, programs, and reports.

Permissions ride as exact fraction strings ("1/2"), never floats.  Command
trees use tagged nodes: {"seq": [...]}, {"choice": [...]}, {"star": ...},
{"call": "m"}, {"prim": {...}}.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping

from .algebra import (
    Algebra,
    ParamPredicate,
    Predicate,
    State,
    StateUniverse,
    predicate,
)
from .footprint import Footprint, Full
from .history import BalancedHistory, History, InterfaceAction, InterfaceSet, Kind, interface_set
from .lang import (
    Add,
    Assume,
    Bounds,
    CallMethod,
    Choice,
    ClientProgram,
    Command,
    Deref,
    Expr,
    IntLit,
    MethodSpec,
    Neg,
    Not,
    Prim,
    PrimCommand,
    Program,
    Seq,
    Skip,
    Star,
    Store,
    Tid,
    library,
    method_spec,
)


def _alg_tag(algebra: Algebra) -> str:
    return algebra.value


def _alg_from(tag: str) -> Algebra:
    return Algebra(tag)


def state_to_json(s: State) -> dict:
    if s.algebra is Algebra.RAM:
        cells = {str(loc): val for loc, val in s.cells}
    else:
        cells = {str(loc): [val, str(perm)] for loc, (val, perm) in s.cells}
    return {"alg": _alg_tag(s.algebra), "cells": cells}


def state_from_json(obj: Mapping) -> State:
    alg = _alg_from(obj["alg"])
    if alg is Algebra.RAM:
        cells = {int(loc): int(val) for loc, val in obj["cells"].items()}
        return State(alg, cells)
    cells_pi = {int(loc): (int(v), Fraction(p)) for loc, (v, p) in obj["cells"].items()}
    return State(alg, cells_pi)


def footprint_to_json(l: Footprint) -> dict:
    if l.algebra is Algebra.RAM:
        return {"alg": _alg_tag(l.algebra), "locs": list(l.entries)}
    cells: dict[str, Any] = {}
    for loc, payload in l.entries:
        if payload == Full:
            cells[str(loc)] = "full"
        else:
            perm, val = payload
            cells[str(loc)] = {"perm": str(perm), "val": val}
    return {"alg": _alg_tag(l.algebra), "cells": cells}


def footprint_from_json(obj: Mapping) -> Footprint:
    alg = _alg_from(obj["alg"])
    if alg is Algebra.RAM:
        return Footprint(alg, [int(x) for x in obj["locs"]])
    entries = []
    for loc, payload in obj["cells"].items():
        if payload == "full":
            entries.append((int(loc), Full))
        else:
            entries.append((int(loc), (Fraction(payload["perm"]), int(payload["val"]))))
    return Footprint(alg, entries)


def action_to_json(a: InterfaceAction) -> dict:
    return {"t": a.thread, "k": a.kind.value, "m": a.method,
            "s": state_to_json(a.transferred)}


def action_from_json(obj: Mapping) -> InterfaceAction:
    return InterfaceAction(int(obj["t"]), Kind(obj["k"]), obj["m"],
                           state_from_json(obj["s"]))


def history_to_json(h: History) -> list:
    return [action_to_json(a) for a in h]


def history_from_json(arr: list) -> History:
    return tuple(action_from_json(o) for o in arr)


def trace_action_to_json(a) -> dict:
    from .lang import CmdAction, PlainCall, PlainRet
    if isinstance(a, InterfaceAction):
        return action_to_json(a)
    if isinstance(a, PlainCall):
        return {"t": a.thread, "k": "call", "m": a.method}
    if isinstance(a, PlainRet):
        return {"t": a.thread, "k": "ret", "m": a.method}
    if isinstance(a, CmdAction):
        return {"t": a.thread, "cmd": prim_to_json(a.command)}
    raise TypeError(f"not an action: {a!r}")


def trace_to_json(tau) -> list:
    return [trace_action_to_json(a) for a in tau]


def denotation_to_json(d) -> dict:
    """Export a component denotation for diffing; traces sorted canonically."""
    if d.faulted:
        return {"faulted": True, "fault_trace": trace_to_json(d.fault_trace or ())}
    traces = sorted(d.traces, key=lambda t: (len(t), repr(t)))
    return {"faulted": False, "traces": [trace_to_json(t) for t in traces]}


def interface_set_to_json(hs: InterfaceSet) -> dict:
    return {"entries": [
        {"initial": footprint_to_json(e.initial), "history": history_to_json(e.history)}
        for e in hs.sorted_entries()
    ]}


def interface_set_from_json(obj: Mapping) -> InterfaceSet:
    return interface_set(
        BalancedHistory(footprint_from_json(e["initial"]), history_from_json(e["history"]))
        for e in obj["entries"])


# ---------------------------------------------------------------------------
# expressions, commands, programs
# ---------------------------------------------------------------------------

def expr_to_json(e: Expr):
    if isinstance(e, IntLit):
        return {"int": e.value}
    if isinstance(e, Tid):
        return "tid"
    if isinstance(e, Deref):
        return {"deref": expr_to_json(e.addr)}
    if isinstance(e, Add):
        return {"add": [expr_to_json(e.left), expr_to_json(e.right)]}
    if isinstance(e, Neg):
        return {"neg": expr_to_json(e.operand)}
    if isinstance(e, Not):
        return {"not": expr_to_json(e.operand)}
    raise TypeError(f"not an expression: {e!r}")


def expr_from_json(obj) -> Expr:
    if obj == "tid":
        return Tid()
    if isinstance(obj, Mapping):
        if "int" in obj:
            return IntLit(int(obj["int"]))
        if "deref" in obj:
            return Deref(expr_from_json(obj["deref"]))
        if "add" in obj:
            a, b = obj["add"]
            return Add(expr_from_json(a), expr_from_json(b))
        if "neg" in obj:
            return Neg(expr_from_json(obj["neg"]))
        if "not" in obj:
            return Not(expr_from_json(obj["not"]))
    raise ValueError(f"bad expression: {obj!r}")


def prim_to_json(c: PrimCommand) -> dict:
    if isinstance(c, Skip):
        return {"skip": {}}
    if isinstance(c, Store):
        return {"store": {"addr": expr_to_json(c.addr), "val": expr_to_json(c.value)}}
    if isinstance(c, Assume):
        return {"assume": expr_to_json(c.cond)}
    raise TypeError(f"not a primitive command: {c!r}")


def prim_from_json(obj: Mapping) -> PrimCommand:
    if "skip" in obj:
        return Skip()
    if "store" in obj:
        return Store(expr_from_json(obj["store"]["addr"]), expr_from_json(obj["store"]["val"]))
    if "assume" in obj:
        return Assume(expr_from_json(obj["assume"]))
    raise ValueError(f"bad primitive command: {obj!r}")


def command_to_json(c: Command) -> dict:
    if isinstance(c, Prim):
        return {"prim": prim_to_json(c.command)}
    if isinstance(c, CallMethod):
        return {"call": c.method}
    if isinstance(c, Seq):
        return {"seq": [command_to_json(c.first), command_to_json(c.second)]}
    if isinstance(c, Choice):
        return {"choice": [command_to_json(c.left), command_to_json(c.right)]}
    if isinstance(c, Star):
        return {"star": command_to_json(c.body)}
    raise TypeError(f"not a command: {c!r}")


def command_from_json(obj: Mapping) -> Command:
    if "prim" in obj:
        return Prim(prim_from_json(obj["prim"]))
    if "call" in obj:
        return CallMethod(obj["call"])
    if "seq" in obj:
        parts = [command_from_json(o) for o in obj["seq"]]
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Seq(part, out)
        return out
    if "choice" in obj:
        parts = [command_from_json(o) for o in obj["choice"]]
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Choice(part, out)
        return out
    if "star" in obj:
        return Star(command_from_json(obj["star"]))
    raise ValueError(f"bad command: {obj!r}")


def _pred_to_json(p: Predicate) -> list:
    return [state_to_json(s) for s in p.sorted_states()]


def _param_pred_to_json(p: ParamPredicate) -> dict:
    out = {str(t): _pred_to_json(pred) for t, pred in p.entries}
    if p.default is not None:
        out["*"] = _pred_to_json(p.default)
    return out


def _param_pred_from_json(obj: Mapping, algebra: Algebra) -> ParamPredicate:
    entries = []
    default = None
    for key, states in obj.items():
        pred = predicate([state_from_json(s) for s in states], algebra)
        if key == "*":
            default = pred
        else:
            entries.append((int(key), pred))
    return ParamPredicate(tuple(sorted(entries)), default)


def gamma_to_json(gamma: MethodSpec) -> dict:
    return {m: {"pre": _param_pred_to_json(gamma.pre(m)),
                "post": _param_pred_to_json(gamma.post(m))}
            for m in gamma.method_names}


def gamma_from_json(obj: Mapping, algebra: Algebra) -> MethodSpec:
    return method_spec({
        m: (_param_pred_from_json(spec["pre"], algebra),
            _param_pred_from_json(spec["post"], algebra))
        for m, spec in obj.items()
    })


def bounds_to_json(b: Bounds) -> dict:
    return {"star": b.star_unroll, "mgc_iters": b.mgc_iters,
            "mgc_threads": b.mgc_threads, "max_trace_len": b.max_trace_len}


def bounds_from_json(obj: Mapping) -> Bounds:
    base = Bounds()
    return Bounds(
        star_unroll=int(obj.get("star", base.star_unroll)),
        mgc_iters=int(obj.get("mgc_iters", base.mgc_iters)),
        mgc_threads=int(obj.get("mgc_threads", base.mgc_threads)),
        max_trace_len=int(obj.get("max_trace_len", base.max_trace_len)),
    )


def universe_to_json(u: StateUniverse) -> dict:
    return {"locations": list(u.locations), "values": list(u.values),
            "permissions": [str(p) for p in u.permissions],
            "threads": list(u.threads)}


def universe_from_json(obj: Mapping) -> StateUniverse:
    base = StateUniverse()
    return StateUniverse(
        locations=tuple(int(x) for x in obj.get("locations", base.locations)),
        values=tuple(int(x) for x in obj.get("values", base.values)),
        permissions=tuple(Fraction(x) for x in obj.get("permissions", base.permissions)),
        threads=tuple(int(x) for x in obj.get("threads", base.threads)),
    )


def program_to_json(p: Program) -> dict:
    out: dict[str, Any] = {"algebra": _alg_tag(p.algebra)}
    if p.library is not None:
        out["library"] = {m: command_to_json(p.library.body(m))
                          for m in p.library.method_names}
    if p.client is not None:
        out["client"] = [command_to_json(c) for c in p.client.threads]
    if p.gamma is not None:
        out["gamma"] = gamma_to_json(p.gamma)
    out["initial"] = [state_to_json(s) for s in sorted(p.initial, key=State.sort_key)]
    out["universe"] = universe_to_json(p.universe)
    out["bounds"] = bounds_to_json(p.bounds)
    return out


def program_from_json(obj: Mapping, *, validate: bool = True) -> Program:
    algebra = _alg_from(obj["algebra"])
    lib = None
    if "library" in obj:
        lib = library({m: command_from_json(c) for m, c in obj["library"].items()})
    client = None
    if "client" in obj:
        client = ClientProgram(tuple(command_from_json(c) for c in obj["client"]))
    gamma = gamma_from_json(obj["gamma"], algebra) if "gamma" in obj else None
    universe = universe_from_json(obj.get("universe", {}))
    program = Program(
        algebra,
        library=lib,
        client=client,
        gamma=gamma,
        initial=frozenset(state_from_json(s) for s in obj.get("initial", [])),
        universe=universe,
        bounds=bounds_from_json(obj.get("bounds", {})),
    )
    if validate and gamma is not None:
        gamma.check_precise(universe)
    return program


def load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return program_from_json(json.load(fh))


def load_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(obj, path: str | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text

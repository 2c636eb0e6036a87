"""Trace and program evaluation; local semantics with ownership transfer.

Three evaluation modes share one engine:

* complete   -- calls and returns are thread-local no-ops;
* library    -- a call brings in any state satisfying the method
  precondition, a return gives up the unique postcondition piece;
* client     -- the mirror image: calls give up the precondition piece,
  returns bring in any compatible postcondition state.

A fault (touching unowned memory, or being unable to transfer what the
contract demands) poisons the whole denotation for that initial state.
Infeasible branches (a false assume) simply produce no outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Union

from .algebra import LawReport, Recorder, State, star, sub_pred
from .footprint import delta
from .history import (
    BalancedHistory,
    History,
    InterfaceAction,
    InterfaceSet,
    Kind,
    interface_set,
    is_balanced,
)
from .lang import (
    Bounds,
    ClientProgram,
    CmdAction,
    Library,
    MethodSpec,
    PlainCall,
    PlainRet,
    Program,
    TOP,
    Trace,
    _Trie,
    client_trace_set,
    command_traces,
    complete_trace_set,
    is_call,
    is_interface,
    library_trace_set,
    prim_step,
)


@dataclass(frozen=True)
class Complete:
    pass


@dataclass(frozen=True)
class LibraryLocal:
    gamma: MethodSpec


@dataclass(frozen=True)
class ClientLocal:
    gamma: MethodSpec


Mode = Union[Complete, LibraryLocal, ClientLocal]

COMPLETE = Complete()


class UnsafeComponentError(ValueError):
    """A component faulted from one of its initial states."""

    def __init__(self, message: str, fault_trace: Trace | None = None):
        super().__init__(message)
        self.fault_trace = fault_trace


def eval_action(mode: Mode, action, s: State):
    """Evaluate one action: ``TOP`` or a tuple of (state, annotated action)."""
    if isinstance(action, CmdAction):
        r = prim_step(action.command, action.thread, s)
        if r is TOP:
            return TOP
        return tuple((s2, action) for s2 in sorted(r, key=State.sort_key))

    if isinstance(mode, Complete):
        return ((s, action),)

    if isinstance(mode, LibraryLocal):
        gamma = mode.gamma
        if action.method not in gamma:
            raise KeyError(f"method {action.method!r} not in the specification")
        if isinstance(action, PlainCall):
            p = gamma.pre(action.method).for_thread(action.thread)
            out = []
            for piece in p.sorted_states():
                combined = star(s, piece)
                if combined is not None:
                    out.append((combined,
                                InterfaceAction(action.thread, Kind.CALL, action.method, piece)))
            return tuple(out)
        q = gamma.post(action.method).for_thread(action.thread)
        split = sub_pred(s, q)
        if split is None:
            return TOP
        rest, piece = split
        return ((rest, InterfaceAction(action.thread, Kind.RET, action.method, piece)),)

    gamma = mode.gamma
    if action.method not in gamma:
        raise KeyError(f"method {action.method!r} not in the specification")
    if isinstance(action, PlainCall):
        p = gamma.pre(action.method).for_thread(action.thread)
        split = sub_pred(s, p)
        if split is None:
            return TOP
        rest, piece = split
        return ((rest, InterfaceAction(action.thread, Kind.CALL, action.method, piece)),)
    q = gamma.post(action.method).for_thread(action.thread)
    out = []
    for piece in q.sorted_states():
        combined = star(s, piece)
        if combined is not None:
            out.append((combined,
                        InterfaceAction(action.thread, Kind.RET, action.method, piece)))
    return tuple(out)


@dataclass(frozen=True)
class EvalResult:
    faulted: bool
    outcomes: frozenset[tuple[State, Trace]]

    def __post_init__(self):
        if self.faulted and self.outcomes:
            raise ValueError("a faulted result carries no outcomes")


def eval_trace(mode: Mode, tau: Trace, s: State) -> EvalResult:
    """Evaluate a trace from a state, annotating calls and returns."""
    current: set[tuple[State, Trace]] = {(s, ())}
    for action in tau:
        nxt: set[tuple[State, Trace]] = set()
        for st, ann in current:
            r = eval_action(mode, action, st)
            if r is TOP:
                return EvalResult(True, frozenset())
            for st2, a2 in r:
                nxt.add((st2, ann + (a2,)))
        current = nxt
    return EvalResult(False, frozenset(current))


@dataclass(frozen=True)
class Denotation:
    """All annotated traces of a component from one initial state."""

    faulted: bool
    fault_trace: Trace | None
    traces: frozenset[Trace]


def _eval_trie(mode: Mode, trie: _Trie, sigma: State) -> Denotation:
    collected: set[Trace] = set()

    def walk(node: _Trie, outcomes: list[tuple[State, Trace]],
             ground_prefix: tuple) -> Trace | None:
        for st, ann in outcomes:
            collected.add(ann)
        for action, child in node.children.items():
            nxt: set[tuple[State, Trace]] = set()
            for st, ann in outcomes:
                r = eval_action(mode, action, st)
                if r is TOP:
                    return ground_prefix + (action,)
                for st2, a2 in r:
                    nxt.add((st2, ann + (a2,)))
            fault = walk(child, list(nxt), ground_prefix + (action,))
            if fault is not None:
                return fault
        return None

    fault = walk(trie, [(sigma, ())], ())
    if fault is not None:
        return Denotation(True, fault, frozenset())
    return Denotation(False, None, frozenset(collected))


_DENOTE_CACHE: dict[tuple, Denotation] = {}


def clear_caches() -> None:
    _DENOTE_CACHE.clear()


def denote_library(lib: Library, gamma: MethodSpec, sigma: State, bounds: Bounds) -> Denotation:
    key = ("library", lib, gamma, sigma, bounds)
    if key not in _DENOTE_CACHE:
        trie = _Trie.of(library_trace_set(lib, bounds))
        _DENOTE_CACHE[key] = _eval_trie(LibraryLocal(gamma), trie, sigma)
    return _DENOTE_CACHE[key]


def denote_client(client: ClientProgram, gamma: MethodSpec, sigma: State, bounds: Bounds) -> Denotation:
    key = ("client", client, gamma, sigma, bounds)
    if key not in _DENOTE_CACHE:
        trie = _Trie.of(client_trace_set(client, bounds))
        _DENOTE_CACHE[key] = _eval_trie(ClientLocal(gamma), trie, sigma)
    return _DENOTE_CACHE[key]


def denote_complete(lib: Library, client: ClientProgram, sigma: State, bounds: Bounds) -> Denotation:
    key = ("complete", lib, client, sigma, bounds)
    if key not in _DENOTE_CACHE:
        trie = _Trie.of(complete_trace_set(lib, client, bounds))
        _DENOTE_CACHE[key] = _eval_trie(COMPLETE, trie, sigma)
    return _DENOTE_CACHE[key]


def eval_program(program: Program, sigma: State, bounds: Bounds | None = None) -> Denotation:
    bounds = bounds or program.bounds
    kind = program.kind
    if kind == "complete":
        return denote_complete(program.library, program.client, sigma, bounds)
    if kind == "library":
        return denote_library(program.library, program.gamma, sigma, bounds)
    return denote_client(program.client, program.gamma, sigma, bounds)


def is_safe(program: Program, states: Iterable[State], bounds: Bounds | None = None) -> bool:
    return all(not eval_program(program, s, bounds).faulted for s in states)


def denotation_pairs(program: Program, states: Iterable[State],
                     bounds: Bounds | None = None) -> frozenset[tuple[State, Trace]]:
    """The (initial state, annotated trace) pairs over a set of initial states."""
    out = set()
    for s in sorted(states, key=State.sort_key):
        d = eval_program(program, s, bounds)
        if d.faulted:
            raise UnsafeComponentError(f"component faults at {s!r}", d.fault_trace)
        out.update((s, t) for t in d.traces)
    return frozenset(out)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def history_of(tau: Trace) -> History:
    return tuple(a for a in tau if isinstance(a, InterfaceAction))


def ground_action(a):
    if isinstance(a, InterfaceAction):
        if a.kind is Kind.CALL:
            return PlainCall(a.thread, a.method)
        return PlainRet(a.thread, a.method)
    return a


def ground(tau: Trace) -> Trace:
    """Erase state annotations from the interface actions of a trace."""
    return tuple(ground_action(a) for a in tau)


def _split_actions(tau: Trace) -> tuple[Trace, Trace]:
    """(client projection, library projection): commands classified by whether
    the thread is inside a method, plus all calls and returns in both."""
    client: list = []
    lib: list = []
    inside: dict[int, bool] = {}
    for a in tau:
        if is_interface(a):
            client.append(a)
            lib.append(a)
            inside[a.thread] = is_call(a)
        elif isinstance(a, CmdAction):
            if inside.get(a.thread, False):
                lib.append(a)
            else:
                client.append(a)
        else:  # pragma: no cover - exhaustive over action kinds
            raise TypeError(f"not an action: {a!r}")
    return tuple(client), tuple(lib)


def client_of(tau: Trace) -> Trace:
    return _split_actions(tau)[0]


def lib_of(tau: Trace) -> Trace:
    return _split_actions(tau)[1]


def cover(tau: Trace, kappa: Trace, lam: Trace) -> bool:
    return (history_of(kappa) == history_of(lam)
            and client_of(tau) == ground(kappa)
            and lib_of(tau) == ground(lam))


def _segments(tau: Trace) -> list[Trace]:
    """Runs of non-interface actions split around each interface action."""
    segs: list[Trace] = []
    cur: list = []
    for a in tau:
        if is_interface(a):
            segs.append(tuple(cur))
            cur = []
        else:
            cur.append(a)
    segs.append(tuple(cur))
    return segs


def canonical_cover(kappa: Trace, lam: Trace) -> Trace:
    """One merge of history-matching local traces: per gap, client commands
    first, library commands after.  Any valid merge would do; this one is the
    deterministic choice the composition checks report."""
    h = history_of(kappa)
    if h != history_of(lam):
        raise ValueError("histories differ")
    csegs = _segments(kappa)
    lsegs = _segments(lam)
    out: list = []
    for k, psi in enumerate(h):
        out.extend(csegs[k])
        out.extend(lsegs[k])
        out.append(ground_action(psi))
    out.extend(csegs[-1])
    out.extend(lsegs[-1])
    return tuple(out)


def all_covers(kappa: Trace, lam: Trace) -> Iterator[Trace]:
    """Every complete-program trace covered by the two local traces."""
    h = history_of(kappa)
    if h != history_of(lam):
        return
    csegs = _segments(kappa)
    lsegs = _segments(lam)

    def shuffles(a: Trace, b: Trace) -> Iterator[tuple]:
        if not a:
            yield b
            return
        if not b:
            yield a
            return
        for rest in shuffles(a[1:], b):
            yield (a[0],) + rest
        for rest in shuffles(a, b[1:]):
            yield (b[0],) + rest

    def go(k: int) -> Iterator[tuple]:
        if k == len(csegs):
            yield ()
            return
        sep = (ground_action(h[k]),) if k < len(h) else ()
        for head in shuffles(csegs[k], lsegs[k]):
            for tail in go(k + 1):
                yield head + sep + tail

    yield from go(0)


# ---------------------------------------------------------------------------
# interface sets and membership
# ---------------------------------------------------------------------------

def interf(lib: Library, gamma: MethodSpec, initial: Iterable[State],
           bounds: Bounds) -> InterfaceSet:
    """The (initial footprint, history) pairs of a library's local behaviours.

    Refuses unsafe libraries; every produced history is checked balanced from
    the footprint of its initial state.
    """
    entries = []
    for sigma0 in sorted(initial, key=State.sort_key):
        d = denote_library(lib, gamma, sigma0, bounds)
        if d.faulted:
            raise UnsafeComponentError(
                f"library faults at {sigma0!r}", d.fault_trace)
        l0 = delta(sigma0)
        for tau in d.traces:
            h = history_of(tau)
            assert is_balanced(h, l0), (sigma0, tau)
            entries.append(BalancedHistory(l0, h))
    return interface_set(entries)


@lru_cache(maxsize=64)
def _library_thread_tries(lib: Library, bounds: Bounds):
    names = lib.method_names
    if not names:
        return {}
    from .lang import CallMethod, Star, _method_eta, choice
    mgc = Star(choice(*(CallMethod(m) for m in names)))
    mgc_bounds = Bounds(star_unroll=bounds.mgc_iters, mgc_iters=bounds.mgc_iters,
                        mgc_threads=bounds.mgc_threads, max_trace_len=bounds.max_trace_len)
    eta = _method_eta(lib, bounds)
    return {t: _Trie.of(command_traces(mgc, t, eta, mgc_bounds))
            for t in range(1, bounds.mgc_threads + 1)}


def _prefix_in_trie(trie: _Trie, tau: Trace) -> bool:
    node = trie
    for a in tau:
        node = node.children.get(a)
        if node is None:
            return False
    return True


def library_trace_member(lib: Library, gamma: MethodSpec, sigma0: State,
                         tau: Trace, bounds: Bounds) -> bool:
    """Annotated-trace membership in the library-local denotation, decided by
    structural membership of the ground trace plus re-evaluation."""
    if len(tau) > bounds.max_trace_len:
        return False
    g = ground(tau)
    tries = _library_thread_tries(lib, bounds)
    threads = {a.thread for a in g}
    if any(t not in tries for t in threads):
        return False
    for t in threads:
        proj = tuple(a for a in g if a.thread == t)
        if not _prefix_in_trie(tries[t], proj):
            return False
    r = eval_trace(LibraryLocal(gamma), g, sigma0)
    if r.faulted:
        return False
    return any(ann == tau for _, ann in r.outcomes)


@lru_cache(maxsize=64)
def _client_thread_tries(client: ClientProgram, bounds: Bounds):
    from .lang import _empty_eta
    return {t + 1: _Trie.of(command_traces(cmd, t + 1, _empty_eta, bounds))
            for t, cmd in enumerate(client.threads)}


def client_trace_member(client: ClientProgram, gamma: MethodSpec, sigma: State,
                        tau: Trace, bounds: Bounds) -> bool:
    if len(tau) > bounds.max_trace_len:
        return False
    g = ground(tau)
    tries = _client_thread_tries(client, bounds)
    threads = {a.thread for a in g}
    if any(t not in tries for t in threads):
        return False
    for t in threads:
        proj = tuple(a for a in g if a.thread == t)
        if not _prefix_in_trie(tries[t], proj):
            return False
    r = eval_trace(ClientLocal(gamma), g, sigma)
    if r.faulted:
        return False
    return any(ann == tau for _, ann in r.outcomes)


# ---------------------------------------------------------------------------
# composition vs decomposition
# ---------------------------------------------------------------------------

PairTransform = Callable[[frozenset[tuple[State, Trace]]], Iterable[tuple[State, Trace]]]


def compose_decompose_check(client: ClientProgram, lib: Library, gamma: MethodSpec,
                            initial_client: Iterable[State], initial_lib: Iterable[State],
                            bounds: Bounds, *,
                            library_transform: PairTransform | None = None) -> LawReport:
    """Check that the complete-program denotation equals the combination of
    the client-local and library-local ones over history-matching pairs.

    The bounds must let the library side keep up with the client: the
    most-general-client iteration count has to cover the client's per-thread
    invocations, or the decomposition direction fails for want of a matching
    library trace.  ``library_transform`` lets tests mutate the library-local
    side; any resulting mismatch must be reported.
    """
    gamma_client = Program(_algebra_of(initial_client, initial_lib), client=client,
                           gamma=gamma, bounds=bounds)
    lib_prog = Program(gamma_client.algebra, library=lib, gamma=gamma, bounds=bounds)
    X = denotation_pairs(gamma_client, initial_client, bounds)
    Y = denotation_pairs(lib_prog, initial_lib, bounds)
    if library_transform is not None:
        Y = frozenset(library_transform(Y))

    rec = Recorder()
    record = rec.record

    lhs: set[tuple[State, Trace]] = set()
    combined_initials = set()
    for s0 in initial_client:
        for s1 in initial_lib:
            c = star(s0, s1)
            if c is not None:
                combined_initials.add(c)
    for sigma in sorted(combined_initials, key=State.sort_key):
        d = denote_complete(lib, client, sigma, bounds)
        if d.faulted:
            record("complete_safety", (sigma,), "safe", d.fault_trace)
            continue
        lhs.update((sigma, t) for t in d.traces)

    # composition direction: every history-matching local pair covers only
    # traces the complete program also produces; covers longer than the
    # interleaving cap fall outside the bounded complete set and are skipped
    y_by_history: dict[History, list[tuple[State, Trace]]] = {}
    for s1, lam in Y:
        y_by_history.setdefault(history_of(lam), []).append((s1, lam))
    for s0, kappa in sorted(X, key=lambda p: (p[0].sort_key(), len(p[1]))):
        for s1, lam in y_by_history.get(history_of(kappa), ()):
            sigma = star(s0, s1)
            if sigma is None:
                continue
            for tau in all_covers(kappa, lam):
                if len(tau) > bounds.max_trace_len:
                    continue
                if (sigma, tau) not in lhs:
                    record("compose", (s0, kappa, s1, lam), "member", tau)
                    break

    # decomposition direction: every complete trace splits into local ones
    x_by_ground: dict[Trace, list[tuple[State, Trace]]] = {}
    for s0, kappa in X:
        x_by_ground.setdefault(ground(kappa), []).append((s0, kappa))
    y_by_ground: dict[Trace, list[tuple[State, Trace]]] = {}
    for s1, lam in Y:
        y_by_ground.setdefault(ground(lam), []).append((s1, lam))
    for sigma, tau in sorted(lhs, key=lambda p: (p[0].sort_key(), len(p[1]))):
        cpart, lpart = _split_actions(tau)
        found = False
        for s0, kappa in x_by_ground.get(cpart, ()):
            for s1, lam in y_by_ground.get(lpart, ()):
                if (history_of(kappa) == history_of(lam)
                        and star(s0, s1) == sigma):
                    found = True
                    break
            if found:
                break
        if not found:
            record("decompose", (sigma, tau), "local pair", None)

    return rec.report()


def _algebra_of(*state_sets: Iterable[State]):
    for states in state_sets:
        for s in states:
            return s.algebra
    raise ValueError("need at least one initial state")

"""Specification extension and the frame rule for linearizability.

An extended contract transfers strictly more state per call/return than its
base (each extended piece splits as base piece * remainder).  A library that
never touches the extra pieces keeps them intact end to end; checking that is
what lets linearizability proved against the base contract carry over to the
extended one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .algebra import State, StateUniverse, star, state_sub, sub_pred
from .history import History, InterfaceAction, Kind
from .lang import Bounds, Library, MethodSpec, TOP, Top, Trace
from .semantics import (
    UnsafeComponentError,
    denote_library,
    history_of,
    interf,
)
from .history import interface_set_leq, LeqReport


def extends(extended: MethodSpec, base: MethodSpec, universe: StateUniverse) -> bool:
    """Every extended pre/post state splits off a base pre/post substate."""
    if set(extended.method_names) != set(base.method_names):
        raise ValueError("method sets differ")
    for m in base.method_names:
        for t in universe.threads:
            for ext_pred, base_pred in ((extended.pre(m).for_thread(t), base.pre(m).for_thread(t)),
                                        (extended.post(m).for_thread(t), base.post(m).for_thread(t))):
                for sigma in ext_pred.states:
                    if not any(state_sub(sigma, piece) is not None
                               for piece in base_pred.states):
                        return False
    return True


@dataclass(frozen=True)
class SpecExtension:
    base: MethodSpec
    extended: MethodSpec

    @staticmethod
    def checked(base: MethodSpec, extended: MethodSpec,
                universe: StateUniverse) -> "SpecExtension":
        base.check_precise(universe)
        extended.check_precise(universe)
        if not extends(extended, base, universe):
            raise ValueError("the extended contract does not extend the base one")
        return SpecExtension(base, extended)


class SplitViolation(ValueError):
    """An interface action whose state does not split against the contract."""

    def __init__(self, action: InterfaceAction):
        super().__init__(f"transferred state does not split against the contract: {action!r}")
        self.action = action


def _split(action: InterfaceAction, gamma: MethodSpec) -> tuple[State, State]:
    pred = (gamma.pre(action.method) if action.kind is Kind.CALL
            else gamma.post(action.method)).for_thread(action.thread)
    parts = sub_pred(action.transferred, pred)
    if parts is None:
        raise SplitViolation(action)
    extra, piece = parts
    return piece, extra


def floor_action(action: InterfaceAction, gamma: MethodSpec) -> InterfaceAction:
    """The part of the transferred state the base contract requires."""
    piece, _ = _split(action, gamma)
    return InterfaceAction(action.thread, action.kind, action.method, piece)


def ceil_action(action: InterfaceAction, gamma: MethodSpec) -> InterfaceAction:
    """The extra transferred state beyond the base contract."""
    _, extra = _split(action, gamma)
    return InterfaceAction(action.thread, action.kind, action.method, extra)


def floor_history(h: Sequence[InterfaceAction], gamma: MethodSpec) -> History:
    return tuple(floor_action(a, gamma) for a in h)


def ceil_history(h: Sequence[InterfaceAction], gamma: MethodSpec) -> History:
    return tuple(ceil_action(a, gamma) for a in h)


def floor_trace(tau: Trace, gamma: MethodSpec) -> Trace:
    return tuple(floor_action(a, gamma) if isinstance(a, InterfaceAction) else a
                 for a in tau)


def extra_eval(h: Sequence[InterfaceAction], sigma: State) -> State | Top:
    """Fold the extra pieces over a (ceil-projected) history.

    Faults when a return demands extra state that was never transferred in or
    that the library modified; a non-fault means the framed-out state came
    back to the client untouched.
    """
    result, _ = extra_eval_explain(h, sigma)
    return result


def extra_eval_explain(h: Sequence[InterfaceAction], sigma: State
                       ) -> tuple[State | Top, Optional[int]]:
    """Like ``extra_eval`` but also reports the index of the action whose
    composition or subtraction failed."""
    cur = sigma
    for i, a in enumerate(h):
        if a.kind is Kind.CALL:
            nxt = star(cur, a.transferred)
        else:
            nxt = state_sub(cur, a.transferred)
        if nxt is None:
            return TOP, i
        cur = nxt
    return cur, None


def star_set(a: Iterable[State], b: Iterable[State]) -> frozenset[State]:
    out = set()
    for s0 in a:
        for s1 in b:
            c = star(s0, s1)
            if c is not None:
                out.add(c)
    return frozenset(out)


@dataclass(frozen=True)
class Hypothesis4Witness:
    initial_base: State
    initial_extra: State
    trace: Trace
    failing_prefix: History
    failing_index: int


@dataclass(frozen=True)
class FrameReport:
    status: str  # "holds-at-bounds" | "violated" | "hypothesis-failed"
    extends_ok: bool
    safety: tuple[tuple[str, bool], ...]
    hypothesis4_ok: bool
    hypothesis4_witness: Optional[Hypothesis4Witness]
    base_lin: Optional[LeqReport]
    direct_check: Optional[LeqReport]

    def lines(self) -> tuple[str, ...]:
        out = [f"extends: {'ok' if self.extends_ok else 'FAILED'}"]
        out += [f"safety {label}: {'ok' if ok else 'FAILED'}" for label, ok in self.safety]
        out.append(f"framed-state preservation: "
                   f"{'ok' if self.hypothesis4_ok else 'FAILED (fault in extra-state fold)'}")
        if self.hypothesis4_witness is not None:
            w = self.hypothesis4_witness
            out.append(f"  witness: from {w.initial_base!r} * {w.initial_extra!r}, "
                       f"extra history {w.failing_prefix!r} "
                       f"fails at action {w.failing_index}")
        if self.base_lin is not None:
            out.append(f"base-contract linearizability: "
                       f"{'ok' if self.base_lin.holds else 'FAILED'}")
        if self.direct_check is not None:
            out.append(f"extended-contract check (direct): "
                       f"{'ok' if self.direct_check.holds else 'FAILED'}")
        out.append(f"verdict: {self.status}")
        return tuple(out)


def check_framed_state_preserved(lib: Library, gamma: MethodSpec, gamma_ext: MethodSpec,
                                 initial_base: Iterable[State], initial_extra: Iterable[State],
                                 bounds: Bounds) -> Optional[Hypothesis4Witness]:
    """Find a library behaviour under the extended contract whose extra-state
    fold faults, or ``None`` when the framed-out state is always preserved."""
    for sigma0 in sorted(initial_base, key=State.sort_key):
        for sigma_extra in sorted(initial_extra, key=State.sort_key):
            combined = star(sigma0, sigma_extra)
            if combined is None:
                continue
            d = denote_library(lib, gamma_ext, combined, bounds)
            if d.faulted:
                raise UnsafeComponentError(
                    f"library faults under the extended contract at {combined!r}",
                    d.fault_trace)
            for tau in sorted(d.traces, key=lambda t: (len(t), repr(t))):
                ceil = ceil_history(history_of(tau), gamma)
                result, index = extra_eval_explain(ceil, sigma_extra)
                if result is TOP:
                    return Hypothesis4Witness(sigma0, sigma_extra, tau, ceil, index)
    return None


def frame_check(lib1: Library, lib2: Library, gamma: MethodSpec, gamma_ext: MethodSpec,
                initial1: Iterable[State], initial2: Iterable[State],
                initial_extra: Iterable[State], bounds: Bounds,
                universe: StateUniverse) -> FrameReport:
    """Frame-rule harness: conclude extended-contract linearizability from
    base-contract linearizability plus preservation of the framed-out state,
    then cross-check the conclusion by brute force at the same bounds.

    All hypotheses are bounded checks; a passing verdict reads
    "holds-at-bounds", never an unconditional claim.
    """
    initial1 = frozenset(initial1)
    initial2 = frozenset(initial2)
    initial_extra = frozenset(initial_extra)
    gamma.check_precise(universe)
    gamma_ext.check_precise(universe)
    ext_ok = extends(gamma_ext, gamma, universe)

    safety = []
    interfs: dict[str, object] = {}
    checks = [
        ("lib1:base", lib1, gamma, initial1),
        ("lib2:base", lib2, gamma, initial2),
        ("lib1:extended", lib1, gamma_ext, star_set(initial1, initial_extra)),
        ("lib2:extended", lib2, gamma_ext, star_set(initial2, initial_extra)),
    ]
    for label, lib, g, states in checks:
        try:
            interfs[label] = interf(lib, g, states, bounds)
            safety.append((label, True))
        except UnsafeComponentError:
            interfs[label] = None
            safety.append((label, False))

    hyp4_witness = None
    hyp4_ok = False
    if safety[2][1]:
        hyp4_witness = check_framed_state_preserved(
            lib1, gamma, gamma_ext, initial1, initial_extra, bounds)
        hyp4_ok = hyp4_witness is None

    base_lin = None
    if interfs["lib1:base"] is not None and interfs["lib2:base"] is not None:
        base_lin = interface_set_leq(interfs["lib1:base"], interfs["lib2:base"])

    hypotheses_ok = (ext_ok and all(ok for _, ok in safety) and hyp4_ok
                     and base_lin is not None and base_lin.holds)

    direct = None
    if interfs["lib1:extended"] is not None and interfs["lib2:extended"] is not None:
        direct = interface_set_leq(interfs["lib1:extended"], interfs["lib2:extended"])

    if not hypotheses_ok:
        status = "hypothesis-failed"
    elif direct is None or not direct.holds:
        # the rule's conclusion must agree with brute force; disagreement
        # would falsify the implementation, so surface it loudly
        status = "violated"
    else:
        status = "holds-at-bounds"

    return FrameReport(status, ext_ok, tuple(safety), hyp4_ok, hyp4_witness,
                       base_lin, direct)

"""Constructive trace rearrangement via validity-checked adjacent swaps.

Given a library trace and a target history that the trace's history
linearizes, the staged procedure below rewrites the trace, one adjacent swap
at a time, into a trace of the same library whose history is exactly the
target.  In the library-local semantics a swap may bring a call earlier past
anything but a return, bring it earlier past a return only when the swapped
history stays balanced, and push a return later past anything but a call.
The client-side procedure is the mirror image (returns move earlier, calls
later).

A balanced-swap gate that fails would exhibit a conflicting pair of
histories, which cannot exist; ``ConflictError`` therefore signals an
implementation bug, never an input problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .algebra import State
from .footprint import Footprint, delta, foot_add, foot_leq, foot_sub
from .history import (
    InterfaceAction,
    Kind,
    evaluate_footprint,
    is_balanced,
    linearized_by,
)
from .lang import Bounds, ClientProgram, Library, MethodSpec, Trace
from .semantics import client_trace_member, history_of, library_trace_member


class SwapKind(Enum):
    NON_RET_BEFORE_CALL = "non-ret-before-call"
    RET_BEFORE_CALL_BALANCED = "ret-before-call-balanced"
    RET_BEFORE_NON_CALL = "ret-before-non-call"


@dataclass(frozen=True)
class SwapStep:
    position: int
    rule: str


@dataclass(frozen=True)
class StageRecord:
    stage: int
    prefix_len: int
    swaps: tuple[SwapStep, ...]


@dataclass(frozen=True)
class RearrangeLog:
    stages: tuple[StageRecord, ...]

    def as_dict(self) -> dict:
        return {
            "stages": [
                {
                    "stage": s.stage,
                    "prefix_len": s.prefix_len,
                    "swaps": [{"position": w.position, "rule": w.rule} for w in s.swaps],
                }
                for s in self.stages
            ]
        }


class ConflictError(AssertionError):
    """A balanced-swap gate failed; conflicting histories cannot exist, so
    this marks a bug in the rearrangement procedure itself."""


def _swapped(trace: Trace, i: int) -> Trace:
    return trace[:i] + (trace[i + 1], trace[i]) + trace[i + 2:]


def _is_iact(a) -> bool:
    return isinstance(a, InterfaceAction)


def _swap_rule_library(a, b, swapped_history, initial: Footprint) -> Optional[SwapKind]:
    a_ret = _is_iact(a) and a.kind is Kind.RET
    b_call = _is_iact(b) and b.kind is Kind.CALL
    if not a_ret and b_call:
        return SwapKind.NON_RET_BEFORE_CALL
    if a_ret and b_call:
        if is_balanced(swapped_history, initial):
            return SwapKind.RET_BEFORE_CALL_BALANCED
        return None
    if a_ret and not b_call:
        return SwapKind.RET_BEFORE_NON_CALL
    return None


def try_swap(lib: Library, gamma: MethodSpec, sigma0: State, trace: Trace,
             i: int, bounds: Bounds) -> Optional[Trace]:
    """Swap positions i and i+1 when a swap rule licenses it.

    The result is re-verified by membership in the library-local denotation
    rather than trusted from the rule.
    """
    if not 0 <= i < len(trace) - 1:
        raise IndexError(i)
    a, b = trace[i], trace[i + 1]
    if a.thread == b.thread:
        return None
    out = _swapped(trace, i)
    rule = _swap_rule_library(a, b, history_of(out), delta(sigma0))
    if rule is None:
        return None
    if not library_trace_member(lib, gamma, sigma0, out, bounds):
        return None
    return out


def _interface_positions(trace: Trace) -> list[int]:
    return [i for i, a in enumerate(trace) if _is_iact(a)]


def rearrange(lib: Library, gamma: MethodSpec, sigma0: State, trace: Trace,
              target_history: Sequence[InterfaceAction], target_initial: Footprint,
              bounds: Bounds, *, debug: bool = False) -> tuple[Trace, RearrangeLog]:
    """Rewrite a library trace into one whose history is ``target_history``.

    Preconditions (checked): the trace is in the library-local denotation
    from ``sigma0``; the target history is balanced from ``target_initial``;
    the target pair is linearized by the trace's pair, i.e.
    ``delta(sigma0)`` is below ``target_initial`` and the target history is
    linearized by the trace's history.
    """
    H = tuple(target_history)
    l0 = delta(sigma0)
    if not is_balanced(H, target_initial):
        raise ValueError("target history not balanced from its initial footprint")
    if not foot_leq(l0, target_initial):
        raise ValueError("trace-side initial footprint must be below the target's")
    if linearized_by(H, history_of(trace)) is None:
        raise ValueError("target history is not linearized by the trace's history")
    if not library_trace_member(lib, gamma, sigma0, trace, bounds):
        raise ValueError("trace is not in the library-local denotation")

    cur = trace
    stages: list[StageRecord] = []

    def do_swap(pos: int, rule: SwapKind, swaps: list[SwapStep]) -> Trace:
        out = _swapped(cur, pos)
        if not library_trace_member(lib, gamma, sigma0, out, bounds):
            raise ConflictError(
                f"swap at {pos} not reproducible in the library-local denotation")
        swaps.append(SwapStep(pos, rule.value))
        return out

    for k in range(len(H)):
        witness = linearized_by(H, history_of(cur), pin=k)
        if witness is None:
            raise ConflictError(f"linearization witness lost at stage {k}")
        swaps: list[SwapStep] = []
        positions = _interface_positions(cur)
        p = positions[witness.mapping[k]]
        psi = H[k]
        assert cur[p] == psi

        if psi.kind is Kind.CALL:
            # slide the matched call left until exactly k interface actions precede it
            while _interface_positions(cur).index(p) > k:
                a = cur[p - 1]
                if a.thread == psi.thread:
                    raise ConflictError("matched call blocked by its own thread")
                out = _swapped(cur, p - 1)
                rule = _swap_rule_library(a, psi, history_of(out), l0)
                if rule is None:
                    raise ConflictError(
                        f"unbalanced return/call swap at stage {k} (conflicting pair)")
                if debug and rule is SwapKind.RET_BEFORE_CALL_BALANCED:
                    _assert_swap_commutes(cur, p - 1, l0)
                cur = do_swap(p - 1, rule, swaps)
                p -= 1
        else:
            # push the blocking returns (leftmost first) to just past the matched one
            while True:
                positions = _interface_positions(cur)
                idx = positions.index(p)
                if idx == k:
                    break
                q = positions[k]
                blocker = cur[q]
                if not (_is_iact(blocker) and blocker.kind is Kind.RET):
                    raise ConflictError(
                        f"unexpected call between matched prefix and return at stage {k}")
                while q < p:
                    b = cur[q + 1]
                    if b.thread == blocker.thread:
                        raise ConflictError("blocking return followed by its own thread")
                    out = _swapped(cur, q)
                    rule = _swap_rule_library(blocker, b, history_of(out), l0)
                    if rule is None:
                        raise ConflictError(f"return blocked while moving right at stage {k}")
                    cur = do_swap(q, rule, swaps)
                    q += 1
                p -= 1  # the matched return shifted left past one blocker

        if debug:
            assert history_of(cur)[:k + 1] == H[:k + 1]
            assert linearized_by(H, history_of(cur), pin=k + 1) is not None
        stages.append(StageRecord(k, p + 1, tuple(swaps)))

    assert history_of(cur) == H
    return cur, RearrangeLog(tuple(stages))


def _assert_swap_commutes(trace: Trace, i: int, initial: Footprint) -> None:
    # the footprint fold of ...ret,call... equals that of ...call,ret... once
    # both orders stay defined; this is the add/sub exchange law in action
    h = history_of(trace[:i])
    a, b = trace[i], trace[i + 1]
    before = evaluate_footprint(h + (a, b), initial)
    after = evaluate_footprint(h + (b, a), initial)
    assert before is not None and before == after, (h, a, b)


# ---------------------------------------------------------------------------
# client side (mirror image)
# ---------------------------------------------------------------------------

def _client_foot_eval(h: Sequence[InterfaceAction], l: Footprint) -> Optional[Footprint]:
    # client-side footprint fold: state leaves at calls and arrives at returns
    cur: Optional[Footprint] = l
    for a in h:
        if cur is None:
            return None
        d = delta(a.transferred)
        cur = foot_sub(cur, d) if a.kind is Kind.CALL else foot_add(cur, d)
    return cur


def _swap_rule_client(a, b, swapped_history, client_initial: Footprint) -> Optional[str]:
    a_call = _is_iact(a) and a.kind is Kind.CALL
    b_ret = _is_iact(b) and b.kind is Kind.RET
    if not a_call and b_ret:
        return "non-call-before-ret"
    if a_call and b_ret:
        if _client_foot_eval(swapped_history, client_initial) is not None:
            return "call-before-ret-balanced"
        return None
    if a_call and not b_ret:
        return "call-before-non-ret"
    return None


def client_rearrange(client: ClientProgram, gamma: MethodSpec, sigma: State,
                     trace: Trace, target_history: Sequence[InterfaceAction],
                     bounds: Bounds, *, debug: bool = False) -> tuple[Trace, RearrangeLog]:
    """Rewrite a client trace into an equivalent one with the target history.

    Requires the trace's history to be linearized by the target.  The result
    has identical per-thread projections and an identical non-interface
    projection (trace equivalence), which together with the new history is
    what the interface-set abstraction argument needs.
    """
    H = tuple(target_history)
    lc = delta(sigma)
    if linearized_by(history_of(trace), H) is None:
        raise ValueError("trace history is not linearized by the target history")
    if not client_trace_member(client, gamma, sigma, trace, bounds):
        raise ValueError("trace is not in the client-local denotation")

    cur = trace
    stages: list[StageRecord] = []

    def do_swap(pos: int, rule: str, swaps: list[SwapStep]) -> Trace:
        out = _swapped(cur, pos)
        if not client_trace_member(client, gamma, sigma, out, bounds):
            raise ConflictError(
                f"swap at {pos} not reproducible in the client-local denotation")
        swaps.append(SwapStep(pos, rule))
        return out

    for k in range(len(H)):
        witness = linearized_by(history_of(cur), H, pin=k)
        if witness is None:
            raise ConflictError(f"linearization witness lost at stage {k}")
        swaps: list[SwapStep] = []
        positions = _interface_positions(cur)
        src_index = witness.mapping.index(k)
        p = positions[src_index]
        psi = H[k]
        assert cur[p] == psi

        if psi.kind is Kind.RET:
            # slide the matched return left until exactly k interface actions precede it
            while _interface_positions(cur).index(p) > k:
                a = cur[p - 1]
                if a.thread == psi.thread:
                    raise ConflictError("matched return blocked by its own thread")
                out = _swapped(cur, p - 1)
                rule = _swap_rule_client(a, psi, history_of(out), lc)
                if rule is None:
                    raise ConflictError(
                        f"call/return swap lost client state at stage {k}")
                cur = do_swap(p - 1, rule, swaps)
                p -= 1
        else:
            # push the blocking calls (leftmost first) to just past the matched one
            while True:
                positions = _interface_positions(cur)
                idx = positions.index(p)
                if idx == k:
                    break
                q = positions[k]
                blocker = cur[q]
                if not (_is_iact(blocker) and blocker.kind is Kind.CALL):
                    raise ConflictError(
                        f"unexpected return between matched prefix and call at stage {k}")
                while q < p:
                    b = cur[q + 1]
                    if b.thread == blocker.thread:
                        raise ConflictError("blocking call followed by its own thread")
                    out = _swapped(cur, q)
                    rule = _swap_rule_client(blocker, b, history_of(out), lc)
                    if rule is None:
                        raise ConflictError(f"call blocked while moving right at stage {k}")
                    cur = do_swap(q, rule, swaps)
                    q += 1
                p -= 1

        if debug:
            assert history_of(cur)[:k + 1] == H[:k + 1]
            assert linearized_by(history_of(cur), H, pin=k + 1) is not None
        stages.append(StageRecord(k, p + 1, tuple(swaps)))

    assert history_of(cur) == H
    _assert_equivalent(trace, cur)
    return cur, RearrangeLog(tuple(stages))


def _assert_equivalent(before: Trace, after: Trace) -> None:
    threads = {a.thread for a in before} | {a.thread for a in after}
    for t in threads:
        assert tuple(a for a in before if a.thread == t) == \
            tuple(a for a in after if a.thread == t)
    assert tuple(a for a in before if not _is_iact(a)) == \
        tuple(a for a in after if not _is_iact(a))

"""Independent oracles and generators shared by the test modules.

The oracles deliberately avoid the algorithms they check: linearization is
decided by enumerating every action-matching bijection, subtraction by
searching the bounded universe, and footprint operations via representative
states.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from itertools import permutations

from ownlin.algebra import ParamPredicate, State, star
from ownlin.history import Kind, call, ret
from ownlin.lang import (
    Assume,
    Bounds,
    Library,
    MethodSpec,
    Prim,
    TID,
    choice,
    library,
    method_spec,
    seq,
    store,
)
from ownlin import ram


def state_sub_oracle(s2: State, s1: State, universe) -> State | None:
    """Search the universe for the unique state composing with s1 to s2."""
    found = None
    for cand in universe.states(s2.algebra):
        if star(cand, s1) == s2:
            assert found is None, "subtraction result not unique"
            found = cand
    return found


def _order_ok(h, h2, mapping) -> bool:
    n = len(h)
    for i in range(n):
        if h2[mapping[i]] != h[i]:
            return False
        for j in range(i + 1, n):
            same_thread = h[i].thread == h[j].thread
            ret_call = h[i].kind is Kind.RET and h[j].kind is Kind.CALL
            if (same_thread or ret_call) and mapping[i] > mapping[j]:
                return False
    return True


def all_witnesses_bruteforce(h, h2):
    """Every constraint-respecting bijection, by permuting equal-action groups."""
    if len(h) != len(h2) or Counter(h) != Counter(h2):
        return
    pos_h = defaultdict(list)
    pos_h2 = defaultdict(list)
    for i, a in enumerate(h):
        pos_h[a].append(i)
    for k, a in enumerate(h2):
        pos_h2[a].append(k)
    actions = list(pos_h)
    perms_per_action = [list(permutations(pos_h2[a])) for a in actions]

    def go(idx, mapping):
        if idx == len(actions):
            yield tuple(mapping)
            return
        src = pos_h[actions[idx]]
        for perm in perms_per_action[idx]:
            for i, k in zip(src, perm):
                mapping[i] = k
            yield from go(idx + 1, mapping)

    n = len(h)
    for mapping in go(0, [None] * n):
        if _order_ok(h, h2, mapping):
            yield mapping


def linearized_by_bruteforce(h, h2) -> bool:
    return next(iter(all_witnesses_bruteforce(h, h2)), None) is not None


EMPTY = ram({})


def exhaustive_histories(max_len: int, threads=(1, 2), methods=("a", "b"),
                         transferred=EMPTY):
    """All well-formed histories up to a length, single state annotation."""
    out = []

    def extend(h, open_m):
        out.append(h)
        if len(h) == max_len:
            return
        for t in threads:
            if open_m.get(t) is None:
                for m in methods:
                    open_m[t] = m
                    extend(h + (call(t, m, transferred),), open_m)
                    open_m[t] = None
            else:
                m = open_m[t]
                open_m[t] = None
                extend(h + (ret(t, m, transferred),), open_m)
                open_m[t] = m

    extend((), {})
    return out


def random_history(rng: random.Random, length: int, threads=(1, 2, 3),
                   methods=("a", "b"), states=(EMPTY, ram({1: 0}))):
    h = []
    open_m = {}
    for _ in range(length):
        t = rng.choice(threads)
        if open_m.get(t) is None:
            m = rng.choice(methods)
            open_m[t] = m
            h.append(call(t, m, rng.choice(states)))
        else:
            h.append(ret(t, open_m.pop(t), rng.choice(states)))
    return tuple(h)


def thread_order_shuffle(rng: random.Random, h):
    """A random permutation preserving each thread's subsequence (well-formed
    by construction, equal as a multiset)."""
    per_thread = defaultdict(list)
    for a in h:
        per_thread[a.thread].append(a)
    threads = list(per_thread)
    out = []
    while any(per_thread[t] for t in threads):
        t = rng.choice([t for t in threads if per_thread[t]])
        out.append(per_thread[t].pop(0))
    return tuple(out)


def delinearize(rng: random.Random, h, steps: int):
    """Random admissible adjacent swaps (calls move earlier, returns later),
    producing a history linearized by the original."""
    cur = list(h)
    for _ in range(steps):
        candidates = []
        for i in range(len(cur) - 1):
            a, b = cur[i], cur[i + 1]
            if a.thread == b.thread:
                continue
            if a.kind is Kind.CALL and b.kind is Kind.RET:
                continue  # would invert a completed invocation
            candidates.append(i)
        if not candidates:
            break
        i = rng.choice(candidates)
        cur[i], cur[i + 1] = cur[i + 1], cur[i]
    return tuple(cur)


# ---------------------------------------------------------------------------
# random safe libraries over two private cells and the argument cells
# ---------------------------------------------------------------------------

_CELLS = (4, 5)


def random_gamma(rng: random.Random, methods, threads=(1, 2)) -> MethodSpec:
    triples = {}
    empty_pred = ParamPredicate.from_fn(lambda t: [ram({})], threads)
    for m in methods:
        if rng.random() < 0.5:
            pre = empty_pred
            post = pre  # a method given nothing cannot conjure state to return
        else:
            pre = ParamPredicate.from_fn(lambda t: [ram({t: v}) for v in (0, 1)], threads)
            post = pre if rng.random() < 0.7 else empty_pred  # may keep the cell
        triples[m] = (pre, post)
    return method_spec(triples)


def _random_prim(rng: random.Random, with_arg: bool):
    from ownlin.lang import Deref, IntLit, Not
    kind = rng.randrange(4 if with_arg else 3)
    cell = rng.choice(_CELLS)
    if kind == 0:
        return Prim(store(cell, rng.choice((0, 1))))
    if kind == 1:
        return Prim(store(cell, Deref(IntLit(rng.choice(_CELLS)))))
    if kind == 2:
        guard = Deref(IntLit(cell))
        return Prim(Assume(Not(guard) if rng.random() < 0.5 else
                           Not(Not(guard))))
    return Prim(store(TID, Deref(IntLit(cell)))) if rng.random() < 0.5 \
        else Prim(store(cell, Deref(TID)))


def random_library(rng: random.Random, gamma: MethodSpec) -> Library:
    bodies = {}
    for m in gamma.method_names:
        with_arg = bool(gamma.pre(m).for_thread(1).states != frozenset({ram({})}))
        n = rng.randrange(1, 4)
        parts = [_random_prim(rng, with_arg) for _ in range(n)]
        body = seq(*parts)
        if rng.random() < 0.4:
            body = choice(body, _random_prim(rng, with_arg))
        bodies[m] = body
    return library(bodies)


RANDOM_LIB_INITIAL = frozenset({ram({4: 0, 5: 0})})
RANDOM_LIB_BOUNDS = Bounds(star_unroll=1, mgc_iters=1, mgc_threads=2, max_trace_len=8)

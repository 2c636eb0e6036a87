import random

from ownlin import corpus, interf, interface_set_leq, ram
from ownlin.checker import (
    Status,
    abstraction_check_code,
    abstraction_check_spec,
    check_lin_code,
    check_lin_interface_set,
    inclusion_based_leq,
)
from ownlin.history import interface_set, is_sequential
from ownlin.lang import Bounds, Prim, SKIP, library, seq
from ownlin.semantics import UnsafeComponentError

from helpers import RANDOM_LIB_BOUNDS, RANDOM_LIB_INITIAL, random_gamma, random_library

GAMMA = corpus.gamma_val()
UNIVERSE = corpus.CORPUS_UNIVERSE
BOUNDS = corpus.DEFAULT_BOUNDS
SMALL = Bounds(star_unroll=1, mgc_iters=1, mgc_threads=2, max_trace_len=8)


def test_every_library_linearizes_itself():
    v = check_lin_code(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL,
                       corpus.mini_stack(), corpus.MINI_INITIAL, SMALL, UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS


def test_lock_stack_linearized_by_plain_stack():
    v = check_lin_code(corpus.lock_stack(), GAMMA, corpus.LOCK_STACK_INITIAL,
                       corpus.plain_stack(), corpus.PLAIN_INITIAL,
                       Bounds(star_unroll=1, mgc_iters=2, mgc_threads=2, max_trace_len=12),
                       UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS


def test_stack_and_queue_distinguished():
    v = check_lin_code(corpus.plain_stack(), GAMMA, corpus.PLAIN_INITIAL,
                       corpus.plain_queue(), corpus.PLAIN_INITIAL,
                       corpus.SEQUENTIAL_BOUNDS, UNIVERSE)
    assert v.status is Status.VIOLATED


def test_unsafe_input_rejected():
    from ownlin.lang import store
    bad = library({"push": Prim(store(9, 1)), "pop": Prim(SKIP)})
    v = check_lin_code(bad, GAMMA, corpus.MINI_INITIAL,
                       corpus.mini_stack(), corpus.MINI_INITIAL, SMALL, UNIVERSE)
    assert v.status is Status.HYPOTHESIS_FAILED
    assert v.exit_code == 2


def _atomic(h) -> bool:
    # every completed invocation is instantaneous; pending calls may hover
    from ownlin.history import Kind
    for i, a in enumerate(h):
        if a.kind is Kind.RET:
            if i == 0 or h[i - 1].kind is not Kind.CALL \
                    or h[i - 1].thread != a.thread or h[i - 1].method != a.method:
                return False
    return True


def test_check_lin_interface_set_variants():
    hs = interf(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL, SMALL)
    v = check_lin_interface_set(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL,
                                hs, SMALL, UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS
    # an atomic abstract set: completed invocations are instantaneous
    atomic_only = interface_set(e for e in hs.entries if _atomic(e.history))
    assert any(not is_sequential(e.history) or len(e.history) > 0
               for e in atomic_only.entries)
    v2 = check_lin_interface_set(corpus.mini_stack_slow(), GAMMA, corpus.MINI_INITIAL,
                                 atomic_only, SMALL, UNIVERSE)
    assert v2.status is Status.HOLDS_AT_BOUNDS
    pruned = interface_set(list(hs.sorted_entries())[:-4])
    v3 = check_lin_interface_set(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL,
                                 pruned, SMALL, UNIVERSE)
    assert v3.status is Status.VIOLATED


def test_inclusion_based_verdict_agrees_on_corpus():
    pairs = [
        (corpus.mini_stack(), corpus.MINI_INITIAL, corpus.mini_stack(), corpus.MINI_INITIAL),
        (corpus.mini_stack_slow(), corpus.MINI_INITIAL, corpus.mini_stack(), corpus.MINI_INITIAL),
        (corpus.plain_stack(), corpus.PLAIN_INITIAL, corpus.plain_queue(), corpus.PLAIN_INITIAL),
    ]
    for lib1, i1, lib2, i2 in pairs:
        h1 = interf(lib1, GAMMA, i1, SMALL)
        h2 = interf(lib2, GAMMA, i2, SMALL)
        assert interface_set_leq(h1, h2).holds == inclusion_based_leq(h1, h2)


def test_inclusion_based_verdict_agrees_on_random_pairs():
    rng = random.Random(1234)
    agreed = 0
    trials = 0
    while agreed < 12 and trials < 60:
        trials += 1
        gamma = random_gamma(rng, ("a", "b"))
        lib1 = random_library(rng, gamma)
        lib2 = random_library(rng, gamma)
        try:
            h1 = interf(lib1, gamma, RANDOM_LIB_INITIAL, RANDOM_LIB_BOUNDS)
            h2 = interf(lib2, gamma, RANDOM_LIB_INITIAL, RANDOM_LIB_BOUNDS)
        except UnsafeComponentError:
            continue
        assert interface_set_leq(h1, h2).holds == inclusion_based_leq(h1, h2)
        agreed += 1
    assert agreed >= 12


def test_abstraction_check_code_identity():
    v = abstraction_check_code(
        corpus.push_pop_client(), GAMMA, corpus.CLIENT_INITIAL,
        corpus.mini_stack(), corpus.MINI_INITIAL,
        corpus.mini_stack(), corpus.MINI_INITIAL, BOUNDS, UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS


def test_abstraction_check_code_negative_control():
    # a library that forgets the push effect, with the linearizability
    # hypothesis forced off so the containment stage itself must catch it;
    # the client observably branches on the popped value
    from ownlin.lang import Add, Assume, CallMethod, Deref, IntLit, Prim, TID, store
    forgetful = library({
        "push": Prim(store(TID, 0)),
        "pop": Prim(store(TID, 0)),
    })
    from ownlin.lang import ClientProgram, Not, seq
    observing = ClientProgram((seq(
        CallMethod("push"), Prim(store(TID, 0)), CallMethod("pop"),
        Prim(Assume(Not(Add(Deref(TID), IntLit(-7)))))),))
    v = abstraction_check_code(
        observing, GAMMA, frozenset({ram({1: 7})}),
        corpus.mini_stack(), corpus.MINI_INITIAL,
        forgetful, corpus.MINI_INITIAL,
        Bounds(star_unroll=1, mgc_iters=2, mgc_threads=1, max_trace_len=16),
        UNIVERSE, assume_linearizable=True)
    assert v.status is Status.VIOLATED


def test_abstraction_check_spec_holds_for_own_interface_set():
    hs = interf(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL, BOUNDS)
    v = abstraction_check_spec(
        corpus.push_pop_client(), GAMMA, corpus.CLIENT_INITIAL,
        corpus.mini_stack(), corpus.MINI_INITIAL, hs, BOUNDS, UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS


def test_abstraction_check_spec_atomic_set_suffices():
    hs = interf(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL, BOUNDS)
    atomic_only = interface_set(e for e in hs.entries if _atomic(e.history))
    assert len(atomic_only) < len(hs)
    v = abstraction_check_spec(
        corpus.push_pop_client(), GAMMA, corpus.CLIENT_INITIAL,
        corpus.mini_stack_slow(), corpus.MINI_INITIAL, atomic_only,
        BOUNDS, UNIVERSE)
    assert v.status is Status.HOLDS_AT_BOUNDS


def test_abstraction_check_spec_pruned_set_detected():
    hs = interf(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL, BOUNDS)
    entries = hs.sorted_entries()
    pruned = interface_set(e for e in entries if len(e.history) < 4)
    v = abstraction_check_spec(
        corpus.push_pop_client(), GAMMA, corpus.CLIENT_INITIAL,
        corpus.mini_stack(), corpus.MINI_INITIAL, pruned, BOUNDS, UNIVERSE,
        assume_linearizable=True)
    assert v.status is Status.VIOLATED


def test_verdicts_are_reproducible():
    v1 = check_lin_code(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL,
                        corpus.mini_stack(), corpus.MINI_INITIAL, SMALL, UNIVERSE)
    v2 = check_lin_code(corpus.mini_stack(), GAMMA, corpus.MINI_INITIAL,
                        corpus.mini_stack(), corpus.MINI_INITIAL, SMALL, UNIVERSE)
    assert v1 == v2
    assert v1.as_dict() == v2.as_dict()

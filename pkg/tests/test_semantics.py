import pytest

from ownlin import (
    Algebra,
    ClientLocal,
    Complete,
    LibraryLocal,
    ParamPredicate,
    UnsafeComponentError,
    compose_decompose_check,
    corpus,
    delta,
    eval_action,
    eval_program,
    eval_trace,
    interf,
    is_balanced,
    ram,
)
from ownlin.history import InterfaceAction, Kind
from ownlin.lang import (
    Bounds,
    CallMethod,
    ClientProgram,
    CmdAction,
    PlainCall,
    PlainRet,
    Prim,
    Program,
    SKIP,
    TOP,
    assume,
    library,
    method_spec,
    seq,
    store,
)
from ownlin.semantics import (
    all_covers,
    canonical_cover,
    client_of,
    cover,
    ground,
    history_of,
    lib_of,
    library_trace_member,
)

THREADS = (1, 2)


def _gamma(pre_states, post_states):
    return method_spec({"m": (
        ParamPredicate.from_fn(lambda t: pre_states, THREADS),
        ParamPredicate.from_fn(lambda t: post_states, THREADS),
    )})


GAMMA_10 = _gamma([ram({10: 0})], [ram({10: 0})])


def test_library_call_receives_precondition_state():
    out = eval_action(LibraryLocal(GAMMA_10), PlainCall(1, "m"), ram({}))
    assert out == ((ram({10: 0}),
                    InterfaceAction(1, Kind.CALL, "m", ram({10: 0}))),)


def test_library_ret_gives_up_postcondition_piece():
    out = eval_action(LibraryLocal(GAMMA_10), PlainRet(1, "m"), ram({10: 0, 1: 2}))
    assert out == ((ram({1: 2}),
                    InterfaceAction(1, Kind.RET, "m", ram({10: 0}))),)


def test_library_ret_faults_without_the_piece():
    assert eval_action(LibraryLocal(GAMMA_10), PlainRet(1, "m"), ram({1: 2})) is TOP


def test_client_call_is_the_mirror_image():
    out = eval_action(ClientLocal(GAMMA_10), PlainCall(1, "m"), ram({10: 0, 1: 2}))
    assert out == ((ram({1: 2}),
                    InterfaceAction(1, Kind.CALL, "m", ram({10: 0}))),)
    assert eval_action(ClientLocal(GAMMA_10), PlainCall(1, "m"), ram({})) is TOP
    back = eval_action(ClientLocal(GAMMA_10), PlainRet(1, "m"), ram({}))
    assert back == ((ram({10: 0}),
                     InterfaceAction(1, Kind.RET, "m", ram({10: 0}))),)


def test_complete_mode_leaves_calls_unannotated():
    s = ram({1: 1})
    assert eval_action(Complete(), PlainCall(1, "m"), s) == ((s, PlainCall(1, "m")),)
    assert eval_action(Complete(), PlainRet(1, "m"), s) == ((s, PlainRet(1, "m")),)


def test_eval_trace_base_cases():
    s = ram({1: 1})
    r = eval_trace(Complete(), (), s)
    assert not r.faulted and r.outcomes == frozenset({(s, ())})
    r = eval_trace(Complete(), (CmdAction(1, assume(0)),), s)
    assert not r.faulted and r.outcomes == frozenset()
    r = eval_trace(Complete(), (CmdAction(1, store(1, 7)),), ram({}))
    assert r.faulted


def test_eval_program_trivial_library_safe():
    prog = Program(Algebra.RAM, library=corpus.trivial_library(),
                   gamma=corpus.gamma_trivial(),
                   bounds=Bounds(1, 1, 1, 6))
    d = eval_program(prog, ram({}))
    assert not d.faulted
    full = (InterfaceAction(1, Kind.CALL, "nop", ram({})),
            CmdAction(1, assume(1)),
            InterfaceAction(1, Kind.RET, "nop", ram({})))
    assert full in d.traces


def test_eval_program_unowned_write_is_unsafe():
    lib = library({"m": Prim(store(5, 1))})
    gamma = _gamma([ram({})], [ram({})])
    gamma = method_spec({"m": (gamma.pre("m"), gamma.post("m"))})
    prog = Program(Algebra.RAM, library=lib, gamma=gamma, bounds=Bounds(1, 1, 1, 6))
    assert eval_program(prog, ram({})).faulted
    assert not eval_program(prog, ram({5: 0})).faulted


def test_client_violating_the_contract_faults():
    client = ClientProgram((CallMethod("m"),))
    prog = Program(Algebra.RAM, client=client, gamma=GAMMA_10, bounds=Bounds(1, 1, 1, 6))
    # the client does not own cell 10, so the call cannot transfer it
    assert eval_program(prog, ram({})).faulted
    assert not eval_program(prog, ram({10: 0})).faulted


def test_interf_entries_are_balanced():
    hs = interf(corpus.mini_stack(), corpus.gamma_val(), corpus.MINI_INITIAL,
                Bounds(1, 1, 2, 8))
    assert len(hs) > 0
    for entry in hs.entries:
        assert is_balanced(entry.history, entry.initial)
    sigma0 = next(iter(corpus.MINI_INITIAL))
    assert all(e.initial == delta(sigma0) for e in hs.entries)


def test_interf_refuses_unsafe_library():
    lib = library({"m": Prim(store(9, 1))})
    with pytest.raises(UnsafeComponentError):
        interf(lib, _gamma([ram({})], [ram({})]), [ram({})], Bounds(1, 1, 1, 6))


def test_projections_partition_commands():
    tau = (PlainCall(1, "m"), CmdAction(1, SKIP), CmdAction(2, SKIP),
           PlainRet(1, "m"), CmdAction(1, SKIP))
    c = client_of(tau)
    l = lib_of(tau)
    assert CmdAction(2, SKIP) in c and CmdAction(2, SKIP) not in l
    assert CmdAction(1, SKIP) in l  # the one inside the method
    assert c[-1] == CmdAction(1, SKIP)  # the one after the return
    assert [a for a in c if isinstance(a, (PlainCall, PlainRet))] == \
        [PlainCall(1, "m"), PlainRet(1, "m")]


def test_cover_and_canonical_cover():
    psi_c = InterfaceAction(1, Kind.CALL, "m", ram({10: 0}))
    psi_r = InterfaceAction(1, Kind.RET, "m", ram({10: 0}))
    kappa = (CmdAction(2, SKIP), psi_c, psi_r)
    lam = (psi_c, CmdAction(1, SKIP), psi_r)
    tau = canonical_cover(kappa, lam)
    assert cover(tau, kappa, lam)
    covers = set(all_covers(kappa, lam))
    assert tau in covers
    for t in covers:
        assert cover(t, kappa, lam)
    assert ground(kappa) == (CmdAction(2, SKIP), PlainCall(1, "m"), PlainRet(1, "m"))
    assert history_of(lam) == (psi_c, psi_r)


def test_compose_decompose_trivial():
    report = compose_decompose_check(
        corpus.one_command_client(), corpus.trivial_library(), corpus.gamma_trivial(),
        [ram({1: 0})], [ram({})], Bounds(1, 1, 1, 8))
    assert report.passed, report.counterexamples[:3]


def test_compose_decompose_mini_stack():
    report = compose_decompose_check(
        ClientProgram((seq(CallMethod("push"), CallMethod("pop")),)),
        corpus.mini_stack(), corpus.gamma_val(),
        [ram({1: 7})], corpus.MINI_INITIAL, Bounds(1, 2, 1, 12))
    assert report.passed, report.counterexamples[:3]


def test_compose_decompose_detects_mutant():
    def drop_transfer(pairs):
        out = []
        for sigma, lam in pairs:
            new = []
            done = False
            for a in lam:
                if (not done and isinstance(a, InterfaceAction)
                        and a.kind is Kind.CALL and a.transferred.cells):
                    a = InterfaceAction(a.thread, a.kind, a.method, ram({}))
                    done = True
                new.append(a)
            out.append((sigma, tuple(new)))
        return out

    report = compose_decompose_check(
        ClientProgram((seq(CallMethod("push"), CallMethod("pop")),)),
        corpus.mini_stack(), corpus.gamma_val(),
        [ram({1: 7})], corpus.MINI_INITIAL, Bounds(1, 1, 1, 12),
        library_transform=drop_transfer)
    assert not report.passed


def test_projections_cover_complete_traces():
    lib = corpus.mini_stack()
    client = ClientProgram((CallMethod("push"), CallMethod("pop")))
    from ownlin.semantics import denote_complete
    from ownlin.algebra import star
    sigma = star(ram({1: 7, 2: 0}), next(iter(corpus.MINI_INITIAL)))
    d = denote_complete(lib, client, sigma, Bounds(1, 1, 2, 10))
    assert not d.faulted
    for tau in d.traces:
        c, l = client_of(tau), lib_of(tau)
        assert cover(tau, c, l)
        cmds = [a for a in tau if isinstance(a, CmdAction)]
        assert sorted(map(repr, cmds)) == sorted(
            map(repr, [a for a in c if isinstance(a, CmdAction)]
                + [a for a in l if isinstance(a, CmdAction)]))


def test_evaluation_preserves_predicted_footprints():
    # the footprint of every reachable state equals the initial footprint
    # pushed through the history so far; internal commands change nothing
    lib = corpus.mini_stack()
    sigma0 = next(iter(corpus.MINI_INITIAL))
    from ownlin.semantics import denote_library
    from ownlin.history import evaluate_footprint as foot_eval
    d = denote_library(lib, corpus.gamma_val(), sigma0, Bounds(1, 1, 2, 8))
    for tau in d.traces:
        r = eval_trace(LibraryLocal(corpus.gamma_val()),
                       tuple(map(_ground_action, tau)), sigma0)
        assert not r.faulted
        for final_state, ann in r.outcomes:
            assert delta(final_state) == foot_eval(history_of(ann), delta(sigma0))


def _ground_action(a):
    from ownlin.semantics import ground_action
    return ground_action(a)


def test_library_trace_member():
    g = corpus.gamma_trivial()
    lib = corpus.trivial_library()
    b = Bounds(1, 1, 1, 6)
    tau = (InterfaceAction(1, Kind.CALL, "nop", ram({})),
           CmdAction(1, assume(1)),
           InterfaceAction(1, Kind.RET, "nop", ram({})))
    assert library_trace_member(lib, g, ram({}), tau, b)
    wrong = (InterfaceAction(1, Kind.CALL, "nop", ram({3: 3})),)
    assert not library_trace_member(lib, g, ram({}), wrong, b)
    assert not library_trace_member(lib, g, ram({}), tau + tau, b)

import json
from fractions import Fraction

import pytest

from ownlin import Algebra, corpus, delta, ram, ram_pi
from ownlin.cli import main
from ownlin.footprint import Full, ram_foot, ram_pi_foot
from ownlin.history import call, ret
from ownlin.lang import Bounds, Program
from ownlin import serialize


def test_state_json_round_trip():
    for s in (ram({}), ram({1: 5}), ram_pi({42: (0, Fraction(1, 2))}),
              ram_pi({1: (7, 1), 2: (0, Fraction(1, 2))})):
        assert serialize.state_from_json(serialize.state_to_json(s)) == s
    assert serialize.state_to_json(ram({1: 5})) == {"alg": "ram", "cells": {"1": 5}}
    assert serialize.state_to_json(ram_pi({42: (0, Fraction(1, 2))})) == \
        {"alg": "ram_pi", "cells": {"42": [0, "1/2"]}}


def test_footprint_json_round_trip():
    for l in (ram_foot(), ram_foot([1, 2]),
              ram_pi_foot({42: (Fraction(1, 2), 0)}), ram_pi_foot({42: Full})):
        assert serialize.footprint_from_json(serialize.footprint_to_json(l)) == l
    assert serialize.footprint_to_json(ram_foot([1, 2])) == {"alg": "ram", "locs": [1, 2]}
    obj = serialize.footprint_to_json(ram_pi_foot({42: (Fraction(1, 2), 0)}))
    assert obj == {"alg": "ram_pi", "cells": {"42": {"perm": "1/2", "val": 0}}}
    assert serialize.footprint_to_json(ram_pi_foot({42: Full}))["cells"]["42"] == "full"


def test_history_json_round_trip():
    h = (call(1, "push", ram({1: 7})), ret(1, "push", ram({1: 0})))
    arr = serialize.history_to_json(h)
    assert arr[0]["t"] == 1 and arr[0]["k"] == "call" and arr[0]["m"] == "push"
    assert serialize.history_from_json(arr) == h


def test_program_json_round_trip():
    for prog in (corpus.lock_stack_program(), corpus.plain_stack_program(),
                 corpus.client_program()):
        obj = serialize.program_to_json(prog)
        assert serialize.program_from_json(obj) == prog


def test_program_loader_checks_precision():
    prog = corpus.plain_stack_program()
    obj = serialize.program_to_json(prog)
    # make the push postcondition imprecise: both the cell and nothing
    obj["gamma"]["push"]["post"]["1"].append({"alg": "ram", "cells": {}})
    with pytest.raises(ValueError):
        serialize.program_from_json(obj)


def test_interface_set_round_trip():
    from ownlin.semantics import interf
    hs = interf(corpus.mini_stack(), corpus.gamma_val(), corpus.MINI_INITIAL,
                Bounds(1, 1, 1, 8))
    obj = serialize.interface_set_to_json(hs)
    assert serialize.interface_set_from_json(obj) == hs


def test_denotation_export():
    from ownlin.semantics import denote_library
    sigma0 = next(iter(corpus.MINI_INITIAL))
    d = denote_library(corpus.mini_stack(), corpus.gamma_val(), sigma0,
                       Bounds(1, 1, 1, 6))
    obj = serialize.denotation_to_json(d)
    assert obj["faulted"] is False
    assert [] in obj["traces"]
    again = serialize.denotation_to_json(d)
    assert serialize.dump_json(obj) == serialize.dump_json(again)


@pytest.fixture()
def corpus_files(tmp_path):
    small = Bounds(star_unroll=1, mgc_iters=1, mgc_threads=2, max_trace_len=8)
    paths = {}
    for name, prog in (
        ("mini", Program(Algebra.RAM, library=corpus.mini_stack(),
                         gamma=corpus.gamma_val(), initial=corpus.MINI_INITIAL,
                         universe=corpus.CORPUS_UNIVERSE, bounds=small)),
        ("mini_slow", Program(Algebra.RAM, library=corpus.mini_stack_slow(),
                              gamma=corpus.gamma_val(), initial=corpus.MINI_INITIAL,
                              universe=corpus.CORPUS_UNIVERSE, bounds=small)),
        ("queue", Program(Algebra.RAM, library=corpus.plain_queue(),
                          gamma=corpus.gamma_val(), initial=corpus.PLAIN_INITIAL,
                          universe=corpus.CORPUS_UNIVERSE,
                          bounds=corpus.SEQUENTIAL_BOUNDS)),
        ("stack_seq", Program(Algebra.RAM, library=corpus.plain_stack(),
                              gamma=corpus.gamma_val(), initial=corpus.PLAIN_INITIAL,
                              universe=corpus.CORPUS_UNIVERSE,
                              bounds=corpus.SEQUENTIAL_BOUNDS)),
    ):
        p = tmp_path / f"{name}.json"
        serialize.dump_json(serialize.program_to_json(prog), str(p))
        paths[name] = str(p)
    return paths


def test_cli_check_lin(corpus_files, capsys):
    code = main(["check-lin", corpus_files["mini_slow"], corpus_files["mini"]])
    assert code == 0
    assert "holds-at-bounds" in capsys.readouterr().out


def test_cli_check_lin_violated(corpus_files, capsys):
    code = main(["--json", "check-lin", corpus_files["stack_seq"], corpus_files["queue"]])
    assert code == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "violated"


def test_cli_check_balanced(tmp_path, capsys):
    h = (call(1, "m", ram({10: 0})), ret(1, "m", ram({10: 0})))
    hist = tmp_path / "hist.json"
    foot = tmp_path / "foot.json"
    serialize.dump_json(serialize.history_to_json(h), str(hist))
    serialize.dump_json(serialize.footprint_to_json(ram_foot()), str(foot))
    assert main(["check-balanced", str(hist), "--from", str(foot)]) == 0
    bad = (call(1, "m", ram({10: 0})), call(2, "m", ram({10: 0})))
    serialize.dump_json(serialize.history_to_json(bad), str(hist))
    assert main(["check-balanced", str(hist), "--from", str(foot)]) == 1


def test_cli_validate_algebra(capsys):
    assert main(["validate-algebra", "--alg", "ram"]) == 0
    assert main(["validate-algebra", "--alg", "ram_pi"]) == 0


def test_cli_dump_interf(corpus_files, capsys):
    assert main(["dump-interf", corpus_files["mini"]]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["entries"]
    assert {"alg": "ram", "locs": [4, 5]} in [e["initial"] for e in payload["entries"]]


def test_cli_abstraction(corpus_files, tmp_path, capsys):
    client = Program(Algebra.RAM, client=corpus.push_pop_client(1),
                     gamma=corpus.gamma_val(), initial=frozenset({ram({1: 7})}),
                     universe=corpus.CORPUS_UNIVERSE,
                     bounds=Bounds(1, 1, 1, 12))
    cpath = tmp_path / "client.json"
    serialize.dump_json(serialize.program_to_json(client), str(cpath))
    code = main(["abstraction", str(cpath), corpus_files["mini_slow"],
                 corpus_files["mini"]])
    assert code == 0


def test_cli_frame_check(corpus_files, tmp_path):
    ext = {
        "algebra": "ram",
        "gamma": serialize.gamma_to_json(corpus.gamma_val()),
        "gamma_extended": serialize.gamma_to_json(corpus.gamma_obj()),
        "initial_extra": [serialize.state_to_json(ram({}))],
    }
    epath = tmp_path / "ext.json"
    serialize.dump_json(ext, str(epath))
    code = main(["frame-check", corpus_files["mini_slow"], corpus_files["mini"],
                 str(epath)])
    assert code == 0


def test_cli_rearrange(corpus_files, tmp_path, capsys):
    target = {
        "initial": serialize.footprint_to_json(
            delta(next(iter(corpus.MINI_INITIAL)))),
        "history": serialize.history_to_json((
            call(1, "push", ram({1: 7})),
            call(2, "pop", ram({2: 0})),
            ret(1, "push", ram({1: 0})),
        )),
    }
    tpath = tmp_path / "target.json"
    serialize.dump_json(target, str(tpath))
    code = main(["rearrange", corpus_files["mini"], str(tpath), "--explain"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["result_history"] == target["history"]
    assert "log" in payload


def test_cli_bad_input_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["dump-interf", str(bad)]) == 2
    assert main(["dump-interf", str(tmp_path / "missing.json")]) == 2


def test_cli_bound_overrides(corpus_files, capsys):
    code = main(["--json", "--max-trace", "6", "dump-interf", corpus_files["mini"]])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert all(len(e["history"]) <= 6 for e in payload["entries"])

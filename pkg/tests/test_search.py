import random

import pytest

from bvq.bridge import classify_structure, to_structure
from bvq.calculus import (
    AI_DOWN, AI_DOWN_LEFT, Derivation, check_derivation, derivation_length,
)
from bvq.ccsr import (
    check_lts_derivation, lts_reachable, parse_actions, parse_process,
    print_actions, print_process, process_congruent,
)
from bvq.search import (
    SearchBudget, SearchError, consumes, derive, extract_lts, invert, prove,
    reach, reduce, split, verdict_to_dict,
)
from bvq.selftest import random_process
from bvq.standardize import is_standard
from bvq.structures import (
    canonical_key, canonicalize, congruent, mk_par, negate, parse_structure,
    print_structure, uid_set,
)


def test_prove_examples():
    out = prove(parse_structure("[a;~a]"))
    assert out.found and derivation_length(out.derivation) == 1
    out = prove(parse_structure("[<a;b>;<~a;~b>]"))
    assert out.found and check_derivation(out.derivation)
    out = prove(parse_structure("[<a;b>;<~b;~a>]"))
    assert not out.found and not out.exhausted
    out = prove(parse_structure("[a;a]"))
    assert not out.found and not out.exhausted


def test_prove_budget_exhaustion_reported():
    out = prove(parse_structure("[<a;b>;<~b;~a>]"),
                budget=SearchBudget(max_steps=2, max_visited=2))
    assert not out.found and out.exhausted


def test_standard_fragment_proofs_are_standard():
    for goal in ["[<a;b>;<~a;~b>]", "[a;~a;b;~b]", "[fo a.<a;b>; fo a.~a; ~b]"]:
        out = prove(parse_structure(goal), "standard")
        assert out.found
        assert is_standard(out.derivation)
        assert all(st.rule != AI_DOWN for st in out.derivation.steps)


def test_derive_examples():
    concl = parse_structure("[<a;r>;<~b;t>;<~a;b>]")
    out = derive(concl, parse_structure("[r;t]"))
    assert out.found and check_derivation(out.derivation)
    out0 = derive(parse_structure("[a;b]"), parse_structure("[b;a]"))
    assert out0.found and derivation_length(out0.derivation) == 0
    out1 = derive(parse_structure("[a;b]"), parse_structure("1"))
    assert not out1.found and not out1.exhausted


def _tracing_derivation():
    concl = parse_structure("[<a;r>;<~b;t>;<~a;b>]")
    out = derive(concl, parse_structure("[r;t]"), "standard")
    assert out.found
    return out.derivation


def _env_ids(d, env_text):
    want = canonical_key(parse_structure(env_text))
    for p in d.conclusion.parts:
        if canonical_key(p) == want:
            return uid_set(p)
    raise AssertionError("environment part not found")


def test_consumes_tracing_example():
    d = _tracing_derivation()
    env = _env_ids(d, "<~a;b>")
    assert consumes(d, env)
    assert consumes(d, frozenset())
    truncated = Derivation(d.conclusion, d.steps[:2])
    assert not consumes(truncated, env)


def test_consumes_rejects_foreign_ids():
    d = _tracing_derivation()
    with pytest.raises(SearchError):
        consumes(d, frozenset({999}))


def test_reduce_tracing_example():
    d = _tracing_derivation()
    red = reduce(d)
    assert check_derivation(red)
    assert classify_structure(red.conclusion).is_process
    assert classify_structure(red.premise).is_process
    # one interaction was erased together with its preparatory move
    assert derivation_length(red) < derivation_length(d)
    if any(st.rule in (AI_DOWN, AI_DOWN_LEFT) for st in red.steps):
        assert is_standard(red)


def test_reduce_single_interaction_gives_trivial():
    out = derive(parse_structure("[<a;e>;<~a;f>]"), parse_structure("[e;f]"),
                 "standard")
    red = reduce(out.derivation)
    assert all(st.rule not in (AI_DOWN, AI_DOWN_LEFT) for st in red.steps)


def test_reduce_worked_instance_shape():
    # the worked instance: erasing the restricted pair from the derivation
    # of [fo a.[<a;b;e1>;<~a;f1>]; ~b] leaves one of [fo a.[<b;e1>;f1]; ~b]
    concl = parse_structure("[fo a.[<a;<b;e1>>;<~a;f1>]; ~b]")
    out = derive(concl, parse_structure("fo a.[e1;f1]"), "standard")
    assert out.found
    red = reduce(out.derivation)
    assert congruent(red.conclusion,
                     parse_structure("[fo a.[<b;e1>;f1]; ~b]"))
    assert congruent(red.premise, parse_structure("fo a.[e1;f1]"))


def test_reduce_random_standard_derivations_keep_process_endpoints():
    rng = random.Random(31)
    checked = 0
    for _ in range(30):
        e = random_process(rng, 8)
        succs = [x for x in __import__("bvq.ccsr", fromlist=["lts_steps"])
                 .lts_steps(e)[1:]]
        for f, alpha, _ in succs[:2]:
            from bvq.ccsr import is_simple_process
            if not is_simple_process(f):
                continue
            v = reach(e, f, alpha)
            if not v.proved or not v.standard.steps:
                continue
            if not any(st.rule in (AI_DOWN, AI_DOWN_LEFT)
                       for st in v.standard.steps):
                continue
            red = reduce(v.standard)
            checked += 1
            assert classify_structure(red.conclusion).is_process
            assert classify_structure(red.premise).is_process
            if any(st.rule in (AI_DOWN, AI_DOWN_LEFT) for st in red.steps):
                assert is_standard(red)
    assert checked > 0


def test_split_seq_shape():
    pr = prove(parse_structure("[<a;b>;<~a;~b>]"))
    res = split(pr.derivation, "seq",
                (parse_structure("a"), parse_structure("b"),
                 parse_structure("<~a;~b>")))
    assert {print_structure(p) for p in res.pieces} == {"~a", "~b"}
    assert check_derivation(res.derivation)
    assert all(check_derivation(p) and canonical_key(p.premise) == "1"
               for p in res.proofs)


def test_split_fo_shape():
    pr = prove(parse_structure("fo a.[a;~a]"))
    res = split(pr.derivation, "fo",
                (parse_structure("a"), parse_structure("[a;~a]"),
                 parse_structure("1")))
    assert canonical_key(res.pieces[0]) == "1"


def test_split_atom_shape():
    pr = prove(parse_structure("[a;~a]"))
    res = split(pr.derivation, "atom",
                (parse_structure("a"), parse_structure("1"),
                 parse_structure("~a")))
    assert canonical_key(res.derivation.premise) == "1"
    assert congruent(res.derivation.conclusion, parse_structure("[a;~a]"))


def test_invert_simple_structure():
    t = parse_structure("[a;~b]")
    goal = canonicalize(mk_par([negate(t), t]))
    pr = prove(goal)
    assert pr.found
    dv = invert(t, pr.derivation)
    assert check_derivation(dv)
    assert congruent(dv.premise, t)
    assert congruent(dv.conclusion, t)


def test_invert_unit_case():
    pr = prove(parse_structure("[a;~a]"))
    dv = invert(parse_structure("1"), pr.derivation)
    assert canonical_key(dv.premise) == "1"
    assert congruent(dv.conclusion, parse_structure("[a;~a]"))


def test_invert_rejects_non_coinvertible():
    pr = prove(parse_structure("[a;~a]"))
    with pytest.raises(SearchError):
        invert(parse_structure("<a;b>"), pr.derivation)


def test_invert_quantified_target():
    t = parse_structure("fo a.[a;b]")
    goal = canonicalize(mk_par([negate(t), canonicalize(t)]))
    pr = prove(goal)
    assert pr.found
    dv = invert(t, pr.derivation)
    assert check_derivation(dv)
    assert congruent(dv.premise, t)


# --- extraction and the pipeline -------------------------------------------

def test_extract_lts_worked_example():
    e = parse_process("nu a.(a.b.0|~a.0)")
    f = parse_process("nu a.(0|0)")
    v = reach(e, f, parse_actions("b"))
    assert v.proved
    assert check_lts_derivation(v.witness)
    assert process_congruent(v.witness.source, e)
    assert process_congruent(v.witness.target, f)
    assert print_actions(v.witness.label) == "b"
    env = parse_structure("~b")
    again = extract_lts(v.standard, e, f, env)
    assert check_lts_derivation(again)
    assert print_actions(again.label) == "b"


def test_extract_lts_trivial_merge():
    e = parse_process("(nu a.a.0)|(nu a.~a.0)")
    f = parse_process("0")
    v = reach(e, f, parse_actions("tau"))
    assert v.proved
    rules = set()

    def walk(n):
        rules.add(n.rule)
        for c in n.children:
            walk(c)

    walk(v.witness)
    assert "res_merge" in rules or "com" in rules
    assert check_lts_derivation(v.witness)


def test_extract_lts_internal_communication_only():
    e = parse_process("a.0|~a.0")
    v = reach(e, parse_process("0"), parse_actions("tau"))
    assert v.proved
    assert print_actions(v.witness.label) == "tau"
    assert check_lts_derivation(v.witness)


def test_reach_examples():
    v = reach(parse_process("nu a.(a.b.0|~a.0)"), parse_process("nu a.(0|0)"),
              parse_actions("b"))
    assert v.proved
    v = reach(parse_process("0"), parse_process("0"), parse_actions("tau"))
    assert v.proved and derivation_length(v.standard) == 0
    assert v.witness.rule == "refl"
    v = reach(parse_process("a.0"), parse_process("0"), parse_actions("b"))
    assert not v.proved and not v.exhausted


def test_reach_requires_simple_target():
    with pytest.raises(SearchError):
        reach(parse_process("a.b.0"), parse_process("c.d.0"),
              parse_actions("tau"))


def test_reach_certificates_validate():
    e = parse_process("(nu a.a.b.0)|(nu a.~a.0)")
    f = parse_process("nu a.(0|0)")
    v = reach(e, f, parse_actions("b"))
    assert v.proved
    assert check_derivation(v.proof)
    assert canonical_key(v.proof.premise) == "1"
    assert check_derivation(v.standard)
    assert is_standard(v.standard)
    assert congruent(v.standard.premise, canonicalize(to_structure(f)))
    assert check_lts_derivation(v.witness)
    payload = verdict_to_dict(v)
    assert payload["status"] == "proved"
    assert set(payload) >= {"proof", "standardDerivation", "ltsWitness", "stats"}


def test_reach_via_inversion_agrees():
    e = parse_process("nu a.(a.b.0|~a.0)")
    f = parse_process("nu a.(0|0)")
    v1 = reach(e, f, parse_actions("b"))
    v2 = reach(e, f, parse_actions("b"), via_inversion=True)
    assert v1.proved and v2.proved
    assert check_derivation(v2.proof)
    assert canonical_key(v2.proof.premise) == "1"


def test_reach_label_sequences():
    v = reach(parse_process("a.b.0"), parse_process("0"), parse_actions("a;b"))
    assert v.proved
    assert print_actions(v.witness.label) == "a;b"
    v = reach(parse_process("a.b.0"), parse_process("b.0"), parse_actions("a"))
    assert v.proved
    v = reach(parse_process("a.b.0"), parse_process("0"), parse_actions("b;a"))
    assert not v.proved


def test_reach_tau_absorption_in_request():
    v = reach(parse_process("a.0"), parse_process("0"),
              parse_actions("tau;a;tau"))
    assert v.proved and print_actions(v.witness.label) == "a"


def test_reach_with_structured_target():
    # composing the proof certificate must not depend on searching the
    # whole interaction space of the target
    e = parse_process("x.0|(a.0|~b.0|nu c.(c.0|d.0))")
    f = parse_process("a.0|~b.0|nu c.(c.0|d.0)")
    v = reach(e, f, parse_actions("x"))
    assert v.proved
    assert check_derivation(v.proof)
    assert canonical_key(v.proof.premise) == "1"
    assert check_lts_derivation(v.witness)


def test_reach_with_twin_occurrences_of_the_observed_label():
    # the process keeps its own copy of the observed label; only the
    # environment occurrence may be consumed
    cases = [
        ("x.~b.0|b.0", "b.0", "x;~b"),
        ("a.0|~a.~d.0", "a.0|~d.0", "~a"),
        ("b.0|(x.~b.0|b.0)", "b.0|b.0", "x;~b"),
    ]
    for e_t, f_t, a_t in cases:
        e, f, alpha = parse_process(e_t), parse_process(f_t), parse_actions(a_t)
        assert lts_reachable(e, f, alpha, 6) is not None
        v = reach(e, f, alpha)
        assert v.proved, (e_t, f_t, a_t)


def test_reach_agrees_with_oracle_spot_checks():
    rng = random.Random(4)
    from bvq.ccsr import enumerate_reachable, is_simple_process
    checked = 0
    for _ in range(25):
        e = random_process(rng, 7)
        for f, alpha, _ in enumerate_reachable(e, 4):
            if not is_simple_process(f):
                continue
            v = reach(e, f, alpha)
            assert v.proved, (print_process(e), print_process(f),
                              print_actions(alpha))
            confirm = lts_reachable(e, f, alpha,
                                    2 * derivation_length(v.standard) + 4)
            assert confirm is not None
            checked += 1
    assert checked > 20

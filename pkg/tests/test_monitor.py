import pytest

import support as S
from rvk.automata import BuchiAutomaton
from rvk.errors import InputError, PreconditionError
from rvk.knowledge import build_obs_dfa
from rvk.logic import Know, Not, anchored, desugar, parse_formula
from rvk.monitor import (Verdict, run_decentralized, run_trace, start_session, step,
                         synthesize_diagnoser, synthesize_monitor, verdict_machine)

T, F, U, I = Verdict.TRUE, Verdict.FALSE, Verdict.UNKNOWN, Verdict.INFEASIBLE


def figure_machine():
    a = S.system("monitorable")
    return a.vocab, synthesize_monitor(a, "a", parse_formula("F e"), S.builder("monitorable")).machine


# -- sessions ------------------------------------------------------------------------------

def test_step_examples():
    v, m = figure_machine()
    session = start_session(m)
    got = []
    for o in S.word(v, "{}", "{}", "{r}", "{r}"):
        session, verdict = step(session, o)
        got.append(verdict)
    assert got == [U, U, T, T]
    assert session.steps == 4 and session.latched is T


def test_infeasible_latches():
    v, m = figure_machine()
    assert run_trace(m, S.word(v, "{r}", "{s}", "{r}")) == [T, I, I]
    assert run_trace(m, S.word(v, "{s}", "{r}")) == [F, I]


def test_foreign_letter():
    v, m = figure_machine()
    session = start_session(m)
    with pytest.raises(InputError):
        step(session, S.ev(v, "{e}"))
    session, _ = step(session, S.ev(v, "{r}"))
    session, _ = step(session, S.ev(v, "{s}"))
    with pytest.raises(InputError):
        step(session, S.ev(v, "{e}"))


def test_session_is_a_value():
    v, m = figure_machine()
    s0 = start_session(m)
    s1, _ = step(s0, S.ev(v, "{r}"))
    assert s0.steps == 0 and s0.latched is None and s1.steps == 1


def test_empty_system_is_infeasible():
    a = S.system("monitorable")
    empty = BuchiAutomaton(a.vocab, a.num_states, a.initial, a.succ, frozenset())
    m = synthesize_monitor(empty, "a", parse_formula("F e")).machine
    for u in S.obs_words(a.vocab, "a", 3):
        if u:
            assert m.output(u) is I
            assert run_trace(m, u) == [I] * len(u)


def test_epistemic_monitor_example():
    a = S.system("epistemic_monitor")
    m = synthesize_monitor(a, "a", parse_formula("!F e")).machine
    assert m.output(S.word(a.vocab, "{p}", "{p}", "{e}")) is F
    assert m.output(S.word(a.vocab, "{p}", "{r}")) is T
    assert m.output(S.word(a.vocab, "{p}", "{p}")) is U


# -- contract ----------------------------------------------------------------------------

# formulas whose value at position 1 depends on a bounded number of letters
BOUNDED = ("{x}", "X {y}", "!{y}", "X^2 {y}", "F<=2 {y}", "G<=1 {x}", "{x} -> X {y}",
           "X ({x} S {y})")


@pytest.mark.parametrize("name", S.EXACT)
def test_monitor_contract_against_oracle(name):
    a = S.system(name)
    v = a.vocab
    oracle = S.oracle(name)
    x, y = v.props[0], v.props[-1]
    obs_cache = {}
    for text in BOUNDED:
        f = parse_formula(text.format(x=x, y=y))
        hat = anchored(f)
        for agent in v.agent_names:
            m = synthesize_monitor(a, agent, f, S.builder(name)).machine
            k_pos, k_neg = Know(agent, hat), Know(agent, Not(hat))
            for w in S.sample(oracle.lassos, 25):
                for k in S.oracle_positions(name, k_pos, w):
                    if k > 6:
                        break
                    if oracle.evaluate(w, k, k_pos):
                        expected = T
                    elif oracle.evaluate(w, k, k_neg):
                        expected = F
                    else:
                        expected = U
                    assert m.output(v.obs_word(agent, w.prefix(k))) is expected, (text, agent, w, k)
            dfa = obs_cache.get(agent) or obs_cache.setdefault(agent, build_obs_dfa(a, agent))
            for u in S.obs_words(v, agent, 4):
                if u:
                    assert (m.output(u) is I) == (not dfa.output(u))


@pytest.mark.parametrize("name", S.EXACT)
def test_verdicts_exclusive(name):
    a = S.system(name)
    b = S.builder(name)
    for f in S.formula_suite(a.vocab)[:14]:
        core = desugar(anchored(f), a.vocab)
        for agent in a.vocab.agent_names:
            m1 = b.knowledge_monitor(core, agent).machine
            m0 = b.knowledge_monitor(Not(core), agent).machine
            seen, todo = {(m1.initial, m0.initial)}, [(m1.initial, m0.initial)]
            while todo:
                p, q = todo.pop()
                assert not (m1.outputs[p] and m0.outputs[q])
                for o in m1.alphabet:
                    nxt = (m1.delta[p][o], m0.delta[q][o])
                    if nxt not in seen:
                        seen.add(nxt)
                        todo.append(nxt)


# -- diagnosers ------------------------------------------------------------------------------

def diagnoser_failures(a, agent, delay, max_len=6):
    """Words breaking Detection or No-false-alarms for the diagnoser of ``e``."""
    k = synthesize_diagnoser(a, agent, "e")
    ebit = a.vocab.prop_bit("e")
    bad = []
    for u in S.live_prefixes(a, max_len):
        faults = [i for i, letter in enumerate(u, start=1) if letter & ebit]
        alarm = k.accepts(a.vocab.obs_word(agent, u))
        if faults and faults[0] + delay <= len(u) and not alarm:
            bad.append(("missed", u))
        if not faults and alarm:
            bad.append(("false alarm", u))
    return bad


@pytest.mark.parametrize("name, delay", [("s1", 2), ("s3", 0)])
def test_diagnoser_on_diagnosable_systems(name, delay):
    assert not diagnoser_failures(S.system(name), "a", delay)


def test_diagnoser_on_random_diagnosable_systems():
    from rvk.analyses import check_p_diagnosable_direct

    checked = 0
    for a in S.random_systems(61, 40, min_states=2, min_props=2):
        for agent in a.vocab.agent_names:
            for d in range(3):
                if check_p_diagnosable_direct(a, agent, "e", d).holds:
                    checked += 1
                    assert not diagnoser_failures(a, agent, d, 5), (agent, d)
                    break
    assert checked > 10


def test_s2_has_no_diagnoser():
    for d in range(5):
        missed = [u for kind, u in diagnoser_failures(S.system("s2"), "a", d, 7) if kind == "missed"]
        assert missed


def test_diagnoser_examples():
    a1, a3 = S.system("s1"), S.system("s3")
    k1 = synthesize_diagnoser(a1, "a", "e")
    assert k1.accepts(S.word(a1.vocab, "{p}", "{p}", "{r}"))
    assert not k1.accepts(S.word(a1.vocab, "{p}", "{p}", "{p}"))
    assert synthesize_diagnoser(a3, "a", "e").accepts(S.word(a3.vocab, "{}"))
    with pytest.raises(PreconditionError):
        synthesize_diagnoser(a1, "a", "p")


def test_diagnoser_session_waits_for_the_alarm():
    a = S.system("s1")
    m = verdict_machine(synthesize_diagnoser(a, "a", "e"))
    assert run_trace(m, S.word(a.vocab, "{p}", "{p}", "{r}", "{r}")) == [U, U, T, T]
    assert run_trace(m, S.word(a.vocab, "{r}")) == [I]


# -- decentralized --------------------------------------------------------------------------

def test_decentralized_examples():
    c1, c3, s1 = S.system("codiag1"), S.system("codiag3"), S.system("s1")
    assert run_decentralized(c1, "e", S.word(c1.vocab, "{e}", "{p1}", "{}")) == [F, T, T]
    assert run_decentralized(c3, "e", S.word(c3.vocab, "{p1,p2,e}", "{}")) == [F, F]
    clean = S.word(s1.vocab, *["{p}"] * 6)
    assert run_decentralized(s1, "e", clean) == [F] * 6


@pytest.mark.parametrize("name", ("codiag1", "codiag2", "codiag3"))
def test_decentralized_is_disjunction(name):
    a = S.system(name)
    v = a.vocab
    local = {ag: synthesize_diagnoser(a, ag, "e", S.builder(name)) for ag in v.agent_names}
    for u in S.live_prefixes(a, 5):
        got = run_decentralized(a, "e", u, builder=S.builder(name))
        for n in range(1, len(u) + 1):
            any_alarm = any(k.accepts(v.obs_word(ag, u[:n])) for ag, k in local.items())
            assert got[n - 1] is (T if any_alarm else F)


def test_decentralized_preconditions():
    a = S.system("codiag1")
    with pytest.raises(PreconditionError):
        run_decentralized(a, "e", (), agents=())
    with pytest.raises(PreconditionError):
        run_decentralized(a, "p1", ())

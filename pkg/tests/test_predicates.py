"""Unit tests for the multiplicity constraint logic.

Every algebraic claim is checked two ways: against small hand-computed
anchor cases (frozen below) and against the brute-force valuation oracle
via hypothesis-generated random constraint sets.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfer.core import OMEGA, ONE, MultVar, Pred, pred, product
from linfer.predicates import (
    NormalPred,
    OracleMismatch,
    all_valuations,
    bf_eliminate_agrees,
    bf_entails,
    bf_is_satisfiable,
    eliminate,
    eliminate_all,
    entails,
    entails_all,
    equivalent,
    eval_pred,
    eval_preds,
    free_vars,
    is_satisfiable,
    normalize,
    oracle_mode,
    set_oracle,
)

p, q, r, s = MultVar("p"), MultVar("q"), MultVar("r"), MultVar("s")


def np_(lhs, *rhs):
    return NormalPred(lhs, tuple(rhs))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


class TestNormalize:
    def test_drops_rhs_omega(self):
        assert normalize([pred(p, OMEGA)]) == ()
        assert normalize([Pred(product((p, q)), product((r, OMEGA)))]) == ()

    def test_drops_lhs_one(self):
        assert normalize([pred(ONE, p)]) == ()
        assert normalize([Pred(product(()), product((p,)))]) == ()

    def test_drops_reflexive_component(self):
        # p <= p * q holds in every valuation.
        assert normalize([Pred(product((p,)), product((p, q)))]) == ()

    def test_splits_lhs_products(self):
        got = normalize([Pred(product((p, q)), product((r,)))])
        assert set(got) == {np_(p, r), np_(q, r)}

    def test_keeps_unsatisfiable_as_omega_leq_one(self):
        got = normalize([pred(OMEGA, ONE)])
        assert got == (np_(OMEGA),)

    def test_dedups_and_sorts(self):
        got = normalize([pred(q, r), pred(p, r), pred(q, r)])
        assert got == (np_(p, r), np_(q, r))

    def test_accepts_normal_preds(self):
        assert normalize([np_(p, q)]) == (np_(p, q),)

    def test_mixed_lhs_drops_only_trivial_parts(self):
        # (1 * p) <= q: the 1 component is trivial, p <= q stays.
        got = normalize([Pred(product((ONE, p)), product((q,)))])
        assert got == (np_(p, q),)

    def test_idempotent(self):
        before = [Pred(product((p, q)), product((r,))), pred(OMEGA, s)]
        once = normalize(before)
        assert normalize(once) == once


# ---------------------------------------------------------------------------
# Satisfiability and entailment anchors
# ---------------------------------------------------------------------------


class TestSatisfiability:
    def test_empty_is_satisfiable(self):
        assert is_satisfiable(())

    def test_omega_leq_one_is_not(self):
        assert not is_satisfiable((np_(OMEGA),))

    def test_forcing_chain(self):
        # p <= 1, w <= p: propagation forces p to 1, then w <= 1 fails.
        assert not is_satisfiable((np_(p), np_(OMEGA, p)))

    def test_omega_lower_bound_alone_is_fine(self):
        assert is_satisfiable((np_(OMEGA, p),))

    def test_cycle_is_satisfiable(self):
        assert is_satisfiable((np_(p, q), np_(q, p)))


class TestEntails:
    def test_reflexivity(self):
        assert entails((np_(p, q),), pred(p, q))

    def test_vacuous_truths(self):
        assert entails((), pred(p, OMEGA))
        assert entails((), pred(ONE, p))
        assert entails((), Pred(product((p,)), product((p, q))))

    def test_empty_given_refutes(self):
        assert not entails((), pred(OMEGA, ONE))
        assert not entails((), pred(OMEGA, p))
        assert not entails((), pred(p, ONE))
        assert not entails((), pred(p, q))

    def test_transitivity(self):
        given = normalize([pred(p, q), pred(q, r)])
        assert entails(given, pred(p, r))
        assert not entails(given, pred(r, p))

    def test_weaker_rhs(self):
        given = normalize([pred(p, q)])
        assert entails(given, Pred(product((p,)), product((q, r))))

    def test_product_lhs_wanted(self):
        given = normalize([pred(p, r), pred(q, r)])
        assert entails(given, Pred(product((p, q)), product((r,))))
        assert not entails(normalize([pred(p, r)]),
                           Pred(product((p, q)), product((r,))))

    def test_unsat_given_entails_anything(self):
        given = normalize([pred(OMEGA, ONE)])
        assert entails(given, pred(OMEGA, ONE))
        assert entails(given, pred(p, q))

    def test_forced_one_upper_bound(self):
        # p <= 1 entails p <= anything.
        given = normalize([pred(p, ONE)])
        assert entails(given, pred(p, q))

    def test_forced_omega_lower_bound(self):
        # w <= q entails p <= q for every p.
        given = normalize([pred(OMEGA, q)])
        assert entails(given, pred(p, q))

    def test_entails_all_and_equivalent(self):
        q1 = [pred(p, q), pred(q, r)]
        q2 = [pred(q, r), pred(p, q), pred(p, r)]
        assert entails_all(normalize(q1), q2)
        assert equivalent(q1, q2)
        assert not equivalent(q1, [pred(r, p)])


# ---------------------------------------------------------------------------
# Quantifier elimination anchors
# ---------------------------------------------------------------------------


class TestEliminate:
    def test_chain_through_eliminated_var(self):
        # Eliminating the middle of p <= x, x <= q leaves p <= q.
        x = MultVar("x")
        before = normalize([pred(p, x), pred(x, q)])
        assert eliminate(x, before) == normalize([pred(p, q)])

    def test_pure_upper_bound_vanishes(self):
        # x only on the left: x := 1 satisfies its predicates for free.
        x = MultVar("x")
        assert eliminate(x, normalize([pred(x, p)])) == ()

    def test_pure_lower_bound_vanishes(self):
        # x only on the right: x := w satisfies its predicates for free.
        x = MultVar("x")
        assert eliminate(x, normalize([pred(p, x)])) == ()

    def test_contradiction_survives(self):
        # exists x. (x <= 1 and w <= x) is w <= 1, not true.
        x = MultVar("x")
        before = normalize([pred(x, ONE), pred(OMEGA, x)])
        assert eliminate(x, before) == (np_(OMEGA),)

    def test_unrelated_predicates_pass_through(self):
        x = MultVar("x")
        before = normalize([pred(p, q), pred(x, r)])
        assert eliminate(x, before) == normalize([pred(p, q)])

    def test_composition_chain(self):
        # The bound chain arising from two nested applications; eliminating
        # the intermediate bounds one by one tightens the chain step by step.
        pf, px, pfx, pxx = (MultVar(n) for n in ("pf", "px", "p'f", "p'x"))
        step0 = normalize([pred(pfx, pf), pred(pxx, px), pred(pfx, pxx)])
        step1 = eliminate(pfx, step0)
        assert step1 == normalize([pred(pxx, px)])
        assert eliminate(pxx, step1) == ()

    def test_chain_with_outer_bound_survives(self):
        x = MultVar("x")
        before = normalize([pred(p, x), pred(x, q), pred(q, r)])
        got = eliminate(x, before)
        assert got == normalize([pred(p, q), pred(q, r)])
        assert bf_eliminate_agrees(x, before, got)

    def test_eliminate_all_ascending(self):
        x, y = MultVar("x"), MultVar("y")
        before = normalize([pred(p, x), pred(x, y), pred(y, q)])
        assert eliminate_all([y, x], before) == normalize([pred(p, q)])

    def test_rejects_literals(self):
        with pytest.raises(TypeError):
            eliminate(OMEGA, ())

    def test_cross_product_blowup_is_sound(self):
        x = MultVar("x")
        before = normalize([pred(p, x), pred(q, x), pred(x, r), pred(x, s)])
        got = eliminate(x, before)
        assert set(got) == {np_(p, r), np_(p, s), np_(q, r), np_(q, s)}
        assert bf_eliminate_agrees(x, before, got)


# ---------------------------------------------------------------------------
# Brute-force oracle self-checks
# ---------------------------------------------------------------------------


class TestOracleHelpers:
    def test_eval_pred(self):
        val = {p: False, q: True}  # p = 1, q = w
        assert eval_pred(pred(p, q), val)
        assert not eval_pred(pred(q, p), val)
        assert eval_pred(pred(q, OMEGA), val)

    def test_eval_preds_conjunction(self):
        val = {p: False, q: False}
        assert eval_preds([pred(p, q), pred(q, p)], val)

    def test_all_valuations_count(self):
        assert len(list(all_valuations([p, q, r]))) == 8

    def test_bf_agreement_on_anchors(self):
        given = normalize([pred(p, q), pred(q, r)])
        assert bf_entails(given, pred(p, r))
        assert not bf_entails(given, pred(r, p))
        assert bf_is_satisfiable(given)
        assert not bf_is_satisfiable(normalize([pred(OMEGA, ONE)]))

    def test_free_vars_excludes_literals(self):
        preds = normalize([pred(OMEGA, p), pred(q, ONE)])
        assert set(free_vars(preds)) == {p, q}


class TestOracleMode:
    def test_oracle_mode_passes_on_real_calls(self):
        with oracle_mode():
            assert entails(normalize([pred(p, q)]), pred(p, q))
            x = MultVar("x")
            eliminate(x, normalize([pred(p, x), pred(x, q)]))

    def test_oracle_catches_planted_disagreement(self):
        # A deliberately wrong "projection" must trip the cross-check.
        x = MultVar("x")
        before = normalize([pred(p, x), pred(x, q)])
        wrong_after = normalize([pred(q, p)])
        assert not bf_eliminate_agrees(x, before, wrong_after)

    def test_set_oracle_restores(self):
        set_oracle(True)
        set_oracle(False)
        # No cross-check should run now; this would be slow otherwise.
        assert entails((), pred(p, OMEGA))


# ---------------------------------------------------------------------------
# Property tests against the oracle
# ---------------------------------------------------------------------------

VARS = [MultVar(f"v{i}") for i in range(5)]
atom_st = st.sampled_from(VARS + [ONE, OMEGA])
product_st = st.lists(atom_st, min_size=1, max_size=3).map(product)
pred_st = st.builds(Pred, product_st, product_st)
preds_st = st.lists(pred_st, max_size=6)


class TestProperties:
    @settings(max_examples=200)
    @given(preds_st)
    def test_satisfiability_agrees_with_oracle(self, ps):
        n = normalize(ps)
        assert is_satisfiable(n) == bf_is_satisfiable(n)

    @settings(max_examples=200)
    @given(preds_st, pred_st)
    def test_entails_agrees_with_oracle(self, given_ps, wanted):
        n = normalize(given_ps)
        assert entails(n, wanted) == bf_entails(n, wanted)

    @settings(max_examples=200)
    @given(preds_st, st.sampled_from(VARS))
    def test_eliminate_is_exact_projection(self, ps, var):
        before = normalize(ps)
        after = eliminate(var, before)
        assert var not in free_vars(after)
        assert bf_eliminate_agrees(var, before, after)

    @settings(max_examples=100)
    @given(preds_st)
    def test_normalize_preserves_meaning(self, ps):
        n = normalize(ps)
        vars = free_vars(n) + [v for v in VARS if v not in free_vars(n)]
        for val in all_valuations(vars):
            assert eval_preds(ps, val) == eval_preds(n, val)

    @settings(max_examples=100)
    @given(preds_st, preds_st)
    def test_entailment_is_monotone_in_given(self, ps1, ps2):
        # Anything entailed by a set is entailed by any superset.
        n1 = normalize(ps1)
        n12 = normalize(list(ps1) + list(ps2))
        for wanted in n1:
            assert entails(n12, wanted)

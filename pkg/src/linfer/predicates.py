"""Multiplicity constraint logic: normal forms, entailment, elimination.

Constraints are conjunctions of inequalities between products over the
two-point lattice 1 < w (product = least upper bound).  Everything here runs
on a *normal form* where each predicate has a single atom on the left and a
product of variables on the right:

* ``M1 * M2 <= M``   splits into  ``M1 <= M  and  M2 <= M``
* ``1 <= M`` and ``M <= w``  are trivially true and dropped
* ``m <= M`` with m occurring in M is trivially true and dropped
* ``w <= 1`` is representable (left w, right the empty product) and is the
  canonical unsatisfiable predicate.

Entailment reduces to propositional Horn satisfiability under the encoding
1 -> true, w -> false, <= -> reverse implication, * -> conjunction: a normal
predicate ``m <= v1 * .. * vk`` *fails* under exactly those valuations that
make every vi equal 1 and m equal w, so

    Q entails (m <= v1..vk)   iff   Q, v1 <= 1, .., vk <= 1, w <= m   is unsat.

Each such set is a definite Horn problem decided by unit propagation alone —
positive clauses force variables to 1, and only w-headed clauses can fail —
so no search is needed.

``eliminate`` performs exact existential quantifier elimination of one
variable p: Q[p:=1] or Q[p:=w] collapses to a cross product of the predicates
where p occurred on the right (which survive p:=1) with those where it
occurred on the left (which survive p:=w), merged pairwise via

    (m <= M  or  w <= M')   ===   m <= M * M'

which holds because the two disjuncts fail on disjoint halves of any
valuation.  The result never mentions p and is valuation-equivalent to the
disjunction of the two instances.
"""

from __future__ import annotations

import itertools
import random
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .core import (MultLit, MultUVar, MultVar, Mult, ONE, OMEGA, Pred, Product,
                   product)

PredLike = Union[Pred, "NormalPred"]


@dataclass(frozen=True)
class NormalPred:
    """``lhs <= rhs`` with an atomic left side and a variables-only right side.

    ``lhs`` is w or a variable (never 1); ``rhs`` is a sorted tuple of
    distinct variables, empty meaning 1.  ``lhs`` never occurs in ``rhs``.
    """

    lhs: Mult
    rhs: tuple[Mult, ...]

    def key(self) -> tuple:
        return (self.lhs.key(), tuple(a.key() for a in self.rhs))

    def to_pred(self) -> Pred:
        return Pred(product((self.lhs,)), Product(self.rhs))

    def __repr__(self) -> str:
        rhs = " * ".join(repr(a) for a in self.rhs) if self.rhs else "1"
        return f"{self.lhs!r} <= {rhs}"


def normalize(preds: Iterable[PredLike]) -> tuple[NormalPred, ...]:
    """Normalize, deduplicate and sort a conjunction of predicates."""
    out: set[NormalPred] = set()
    for p in preds:
        if isinstance(p, NormalPred):
            lhs_atoms: tuple[Mult, ...] = (p.lhs,)
            rhs = Product(p.rhs)
        else:
            lhs_atoms = p.lhs.atoms
            rhs = p.rhs
        if rhs.is_omega():
            continue  # M <= w holds always
        if not lhs_atoms:
            continue  # 1 <= M holds always
        for atom in lhs_atoms:
            if atom == ONE:
                continue
            if atom in rhs.atoms:
                continue  # m <= m * M holds always
            out.add(NormalPred(atom, rhs.atoms))
    return tuple(sorted(out, key=NormalPred.key))


def free_vars(preds: Iterable[NormalPred]) -> list[Mult]:
    """All variables (rigid and unification) in first-occurrence order."""
    seen: set[Mult] = set()
    out: list[Mult] = []
    for p in preds:
        for atom in (p.lhs,) + p.rhs:
            if isinstance(atom, (MultVar, MultUVar)) and atom not in seen:
                seen.add(atom)
                out.append(atom)
    return out


# ---------------------------------------------------------------------------
# Satisfiability and entailment
# ---------------------------------------------------------------------------


def is_satisfiable(preds: Iterable[NormalPred]) -> bool:
    """Horn satisfiability by unit propagation.

    Under the encoding (1 = true, w = false) every normal predicate is the
    clause ``rhs-conjunction implies lhs``.  Setting all variables to w
    satisfies every clause with a non-empty body, so the only work is to
    propagate the variables forced to 1 by empty-body clauses and check that
    no w-headed clause ends up with an all-forced body.
    """
    clauses = list(preds)
    forced: set[Mult] = set()
    changed = True
    while changed:
        changed = False
        for c in clauses:
            if all(v in forced for v in c.rhs):
                if c.lhs == OMEGA:
                    return False  # w <= 1 under the current forcing
                if c.lhs not in forced:
                    forced.add(c.lhs)
                    changed = True
    return True


def entails(given: Iterable[NormalPred], wanted: PredLike) -> bool:
    """Does ``given`` entail ``wanted`` in every valuation?"""
    given = tuple(given)
    for np in normalize([wanted]):
        # A counterexample valuation satisfies given, makes every rhs var 1,
        # and makes the lhs w.  Entailment holds iff no such valuation exists.
        refutation = list(given)
        refutation.extend(NormalPred(v, ()) for v in np.rhs)
        if np.lhs != OMEGA:
            refutation.append(NormalPred(OMEGA, (np.lhs,)))
        if is_satisfiable(refutation):
            if _oracle_enabled:
                _check_entails_oracle(given, np, False)
            return False
        if _oracle_enabled:
            _check_entails_oracle(given, np, True)
    return True


def entails_all(given: Iterable[NormalPred], wanted: Iterable[PredLike]) -> bool:
    given = tuple(given)
    return all(entails(given, p) for p in wanted)


def equivalent(q1: Iterable[PredLike], q2: Iterable[PredLike]) -> bool:
    """Mutual entailment of two constraint sets."""
    n1, n2 = normalize(q1), normalize(q2)
    return entails_all(n1, n2) and entails_all(n2, n1)


# ---------------------------------------------------------------------------
# Quantifier elimination
# ---------------------------------------------------------------------------


def eliminate(var: Mult, preds: Iterable[NormalPred]) -> tuple[NormalPred, ...]:
    """Existentially eliminate ``var`` from a normalized constraint set."""
    if not isinstance(var, (MultVar, MultUVar)):
        raise TypeError(f"can only eliminate variables, not {var!r}")
    preds = tuple(preds)
    at_one: list[NormalPred] = []   # survivors of var := 1, with var struck from rhs
    at_omega: list[NormalPred] = [] # survivors of var := w, as w <= rhs
    rest: list[NormalPred] = []
    for p in preds:
        if p.lhs == var:
            # var <= M: trivial at var := 1; becomes w <= M at var := w.
            at_omega.append(NormalPred(OMEGA, p.rhs))
        elif var in p.rhs:
            # m <= var * M: trivial at var := w; loses var at var := 1.
            at_one.append(NormalPred(p.lhs, tuple(a for a in p.rhs if a != var)))
        else:
            rest.append(p)
    out = list(rest)
    if at_one and at_omega:
        # (m <= M) or (w <= M')  ===  m <= M * M', distributed pairwise.
        for p1, pw in itertools.product(at_one, at_omega):
            out.append(Pred(product((p1.lhs,)), product(p1.rhs + pw.rhs)))
    # With either side empty one disjunct is the whole constraint set minus
    # trivia, i.e. just ``rest``: the cross product contributes nothing.
    result = normalize(out)
    if _oracle_enabled:
        _check_eliminate_oracle(var, tuple(preds), result)
    return result


def eliminate_all(vars: Sequence[Mult], preds: Iterable[NormalPred]) -> tuple[NormalPred, ...]:
    """Eliminate several variables, in ascending creation order."""
    out = normalize(preds)
    for v in sorted(vars, key=lambda m: m.key()):
        out = eliminate(v, out)
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

# The oracle evaluates constraint sets over explicit valuations.  It is used
# by the test suite and by ``--oracle-check`` to cross-validate the Horn and
# elimination machinery on every call.

Valuation = Mapping[Mult, bool]  # True = w, False = 1


def eval_product(atoms: Iterable[Mult], val: Valuation) -> bool:
    """Value of a product under a valuation (True = w)."""
    result = False
    for a in atoms:
        if isinstance(a, MultLit):
            result = result or a.many
        else:
            result = result or val[a]
    return result


def eval_pred(p: PredLike, val: Valuation) -> bool:
    if isinstance(p, NormalPred):
        lhs = eval_product((p.lhs,), val)
        rhs = eval_product(p.rhs, val)
    else:
        lhs = eval_product(p.lhs.atoms, val)
        rhs = eval_product(p.rhs.atoms, val)
    return rhs or not lhs  # lhs <= rhs fails only when lhs = w, rhs = 1


def eval_preds(preds: Iterable[PredLike], val: Valuation) -> bool:
    return all(eval_pred(p, val) for p in preds)


def all_valuations(vars: Sequence[Mult]):
    for bits in itertools.product((False, True), repeat=len(vars)):
        yield dict(zip(vars, bits))


def bf_is_satisfiable(preds: Sequence[NormalPred]) -> bool:
    return any(eval_preds(preds, v) for v in all_valuations(free_vars(preds)))


def _pred_vars(p: PredLike) -> list[Mult]:
    atoms = ((p.lhs,) + p.rhs) if isinstance(p, NormalPred) else (p.lhs.atoms + p.rhs.atoms)
    return [a for a in atoms if isinstance(a, (MultVar, MultUVar))]


def bf_entails(given: Sequence[NormalPred], wanted: PredLike) -> bool:
    # Collect variables from the raw wanted, not its normal form: a trivially
    # true wanted normalizes away but still needs its variables valued.
    vars = list(dict.fromkeys(free_vars(given) + _pred_vars(wanted)))
    return all(eval_pred(wanted, v)
               for v in all_valuations(vars)
               if eval_preds(given, v))


def bf_eliminate_agrees(var: Mult, before: Sequence[NormalPred],
                        after: Sequence[NormalPred],
                        valuations=None) -> bool:
    """Check ``after`` is the existential projection of ``before`` along var."""
    vars = [v for v in free_vars(tuple(before) + tuple(after)) if v != var]
    if valuations is None:
        valuations = all_valuations(vars)
    for val in valuations:
        projected = (eval_preds(before, {**val, var: False})
                     or eval_preds(before, {**val, var: True}))
        if projected != eval_preds(after, val):
            return False
    return True


# ---------------------------------------------------------------------------
# Oracle mode
# ---------------------------------------------------------------------------

_oracle_enabled = False
_ORACLE_EXHAUSTIVE_LIMIT = 16
_ORACLE_SAMPLES = 512


def set_oracle(enabled: bool) -> None:
    """Cross-check every entailment and elimination against brute force.

    Exhaustive up to 16 variables; above that, 512 seeded-random valuations.
    """
    global _oracle_enabled
    _oracle_enabled = enabled


@contextmanager
def oracle_mode():
    set_oracle(True)
    try:
        yield
    finally:
        set_oracle(False)


class OracleMismatch(AssertionError):
    """The fast implementation disagreed with the brute-force oracle."""


def _sampled_valuations(vars: Sequence[Mult], extra: int = 0):
    rng = random.Random(0xC0FFEE)
    for _ in range(_ORACLE_SAMPLES + extra):
        yield {v: rng.random() < 0.5 for v in vars}


def _check_entails_oracle(given, np, fast_result) -> None:
    vars = free_vars(tuple(given) + (np,))
    if len(vars) <= _ORACLE_EXHAUSTIVE_LIMIT:
        slow = bf_entails(given, np)
    else:
        slow = all(eval_pred(np, v) for v in _sampled_valuations(vars)
                   if eval_preds(given, v))
        if fast_result and not slow:
            raise OracleMismatch(f"entails({given!r}, {np!r}): fast=True, sampled counterexample found")
        return  # sampling can only refute a positive fast answer
    if slow != fast_result:
        raise OracleMismatch(f"entails({given!r}, {np!r}): fast={fast_result}, brute force={slow}")


def _check_eliminate_oracle(var, before, after) -> None:
    vars = [v for v in free_vars(tuple(before) + tuple(after)) if v != var]
    if any(var in p.rhs or var == p.lhs for p in after):
        raise OracleMismatch(f"eliminate({var!r}) left the variable in {after!r}")
    if len(vars) <= _ORACLE_EXHAUSTIVE_LIMIT:
        ok = bf_eliminate_agrees(var, before, after)
    else:
        ok = bf_eliminate_agrees(var, before, after, valuations=_sampled_valuations(vars))
    if not ok:
        raise OracleMismatch(f"eliminate({var!r}, {before!r}) -> {after!r} is not the projection")

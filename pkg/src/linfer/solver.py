"""Constraint solving.

Solving happens in two phases, run by :func:`simplify`.

Phase 1 discharges type equalities by syntactic unification.  Arrows and
datatype applications are decomposed structurally; the multiplicities they
carry are *not* unified syntactically but turned into inequality predicates
in both directions, which keeps all multiplicity reasoning in one place.
Unification variables may only be solved if they are *touchable* — created
at the level being solved — which prevents a solution from escaping the
implication that justifies it.

Phase 2 simplifies the remaining predicates.  Each round applies, in order:

* normalization to atomic form,
* forced substitutions: ``pi <= 1`` forces ``pi := 1``, ``w <= pi`` forces
  ``pi := w``, and a cycle ``pi1 <= pi2 <= ... <= pi1`` forces all members
  equal to one representative (preferring a rigid variable, then an
  untouchable, and otherwise the oldest member),
* dropping predicates entailed by the given context,
* greedy minimization: dropping predicates entailed by the context plus the
  remaining ones,
* quantifier elimination of touchable multiplicity variables that do not
  occur in the type being disambiguated.

The rounds repeat until nothing changes: elimination can expose new
entailments (a variable bridging two predicates disappears, leaving a
consequence the given context covers), so a single pass is not enough.

Implications are solved after their enclosing constraints, each under the
enclosing given context strengthened with the enclosing residual; an
implication must simplify to the empty residual, otherwise the annotation it
came from does not justify the body and we report it as too weak.  The inner
substitution is local to the implication and is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (Mult, MultLit, MultUVar, MultVar, OMEGA, ONE, Pred, Subst,
                   TyData, TyFun, TyUVar, Type, free_mult_uvars,
                   free_ty_uvars, product)
from .diagnostics import CheckError, Span
from .gen import Eq, Implication, WPred, Wanted, wanted_mult_uvars, wanted_ty_uvars
from .predicates import (NormalPred, entails, free_vars, normalize)
from .syntax import show_pred, show_type

_BUDGET_SLACK = 64


class UnificationError(CheckError):
    pass


class OccursError(UnificationError):
    pass


class TouchabilityError(UnificationError):
    pass


class SignatureTooWeak(CheckError):
    pass


class UnsatisfiableConstraints(CheckError):
    pass


@dataclass
class SolveResult:
    theta: Subst
    residual: tuple[Pred, ...]
    # The residual as it stood before any quantifier elimination: together
    # with the given context it entails every predicate that was wanted,
    # which the eliminated form need not.  The declarative re-checker
    # validates derivations against this.
    certified: tuple[Pred, ...]


def _subst_wanted(theta: Subst, w: Wanted) -> Wanted:
    out = Wanted()
    out.eqs = [Eq(theta.apply_type(e.lhs), theta.apply_type(e.rhs), e.span) for e in w.eqs]
    out.preds = [WPred(theta.apply_pred(p.pred), p.span) for p in w.preds]
    out.implications = [
        Implication(i.level,
                    tuple(theta.apply_pred(g) for g in i.given),
                    _subst_wanted(theta, i.wanted),
                    theta.apply_type(i.disamb),
                    i.span, i.name)
        for i in w.implications
    ]
    return out


# ---------------------------------------------------------------------------
# Phase 1: type equalities
# ---------------------------------------------------------------------------


def _unify(eqs: list[Eq], theta: Subst, ty_touch: set[int],
           preds_out: list[WPred]) -> None:
    """Solve the equalities into ``theta``, decomposed multiplicities into
    ``preds_out``."""
    budget = 10 * sum(_eq_size(e) for e in eqs) + _BUDGET_SLACK
    work = list(eqs)
    while work:
        budget -= 1
        if budget < 0:
            raise RuntimeError("unification did not converge within its budget")
        eq = work.pop()
        lhs = theta.apply_type(eq.lhs)
        rhs = theta.apply_type(eq.rhs)
        if lhs == rhs:
            continue
        match (lhs, rhs):
            case (TyFun(d1, m1, c1), TyFun(d2, m2, c2)):
                preds_out.append(WPred(Pred(product([m1]), product([m2])), eq.span))
                preds_out.append(WPred(Pred(product([m2]), product([m1])), eq.span))
                work.append(Eq(d1, d2, eq.span))
                work.append(Eq(c1, c2, eq.span))
            case (TyData(n1, ms1, as1), TyData(n2, ms2, as2)):
                if n1 != n2:
                    raise UnificationError(
                        f"cannot match '{show_type(lhs)}' with '{show_type(rhs)}'", eq.span)
                for m1, m2 in zip(ms1, ms2):
                    preds_out.append(WPred(Pred(product([m1]), product([m2])), eq.span))
                    preds_out.append(WPred(Pred(product([m2]), product([m1])), eq.span))
                for a1, a2 in zip(as1, as2):
                    work.append(Eq(a1, a2, eq.span))
            case (TyUVar(), TyUVar()):
                _solve_var_var(lhs, rhs, theta, ty_touch, eq.span)
            case (TyUVar(), _):
                _solve_var_ty(lhs, rhs, theta, ty_touch, eq.span)
            case (_, TyUVar()):
                _solve_var_ty(rhs, lhs, theta, ty_touch, eq.span)
            case _:
                raise UnificationError(
                    f"cannot match '{show_type(lhs)}' with '{show_type(rhs)}'", eq.span)


def _eq_size(eq: Eq) -> int:
    def size(t: Type) -> int:
        match t:
            case TyFun(d, _, c):
                return 1 + size(d) + size(c)
            case TyData(_, _, args):
                return 1 + sum(size(a) for a in args)
            case _:
                return 1
    return size(eq.lhs) + size(eq.rhs)


def _solve_var_var(u: TyUVar, v: TyUVar, theta: Subst, ty_touch: set[int],
                   span: Span) -> None:
    u_ok = u.uid in ty_touch
    v_ok = v.uid in ty_touch
    if u_ok and v_ok:
        # Solve the younger in terms of the older; keeps solutions anchored
        # to the variables that were introduced first.
        young, old = (u, v) if u.uid > v.uid else (v, u)
        theta.bind_ty(young, old)
    elif u_ok:
        theta.bind_ty(u, v)
    elif v_ok:
        theta.bind_ty(v, u)
    else:
        raise TouchabilityError(
            f"cannot unify '{show_type(u)}' with '{show_type(v)}': "
            f"both belong to an outer scope", span)


def _solve_var_ty(u: TyUVar, t: Type, theta: Subst, ty_touch: set[int],
                  span: Span) -> None:
    if u.uid not in ty_touch:
        raise TouchabilityError(
            f"cannot unify '{show_type(u)}' with '{show_type(t)}': "
            f"the variable belongs to an outer scope", span)
    if any(v.uid == u.uid for v in free_ty_uvars(t)):
        raise OccursError(
            f"cannot construct the infinite type {show_type(u)} ~ {show_type(t)}", span)
    theta.bind_ty(u, t)


# ---------------------------------------------------------------------------
# Phase 2: predicates
# ---------------------------------------------------------------------------


def _forced_substitution(preds: tuple[NormalPred, ...], theta: Subst,
                         mult_touch: set[int]) -> bool:
    """Apply one round of forced multiplicity settlements.  True if any."""
    changed = False
    for p in preds:
        if (isinstance(p.lhs, MultUVar) and p.lhs.uid in mult_touch
                and not p.rhs):
            theta.bind_mult(p.lhs, ONE)
            return True
        if (p.lhs == OMEGA and len(p.rhs) == 1
                and isinstance(p.rhs[0], MultUVar) and p.rhs[0].uid in mult_touch):
            theta.bind_mult(p.rhs[0], OMEGA)
            return True
    # Cycles among single-atom predicates force equality.
    edges: dict[Mult, set[Mult]] = {}
    for p in preds:
        if len(p.rhs) == 1 and not isinstance(p.lhs, MultLit):
            edges.setdefault(p.lhs, set()).add(p.rhs[0])
    for scc in _cycles(edges):
        touch = [m for m in scc if isinstance(m, MultUVar) and m.uid in mult_touch]
        if not touch:
            continue
        rep = min(scc, key=lambda m: _rep_priority(m, mult_touch))
        for m in touch:
            if m != rep:
                theta.bind_mult(m, rep)
                changed = True
        if changed:
            return True
    return changed


def _rep_priority(m: Mult, mult_touch: set[int]) -> tuple:
    # Prefer a variable the substitution may not touch: rigids first, then
    # untouchable unification variables, then touchable ones; oldest wins ties.
    if isinstance(m, MultVar):
        return (0, m.key())
    if m.uid not in mult_touch:
        return (1, m.key())
    return (2, m.key())


def _cycles(edges: dict[Mult, set[Mult]]) -> list[set[Mult]]:
    """Strongly connected components with more than one member (Tarjan)."""
    index: dict[Mult, int] = {}
    low: dict[Mult, int] = {}
    on_stack: set[Mult] = set()
    stack: list[Mult] = []
    out: list[set[Mult]] = []
    counter = [0]

    def visit(v: Mult) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in edges.get(v, ()):
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            scc = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                scc.add(w)
                if w == v:
                    break
            if len(scc) > 1:
                out.append(scc)

    for v in list(edges):
        if v not in index:
            visit(v)
    return out


def _minimize(given: tuple, preds: tuple[NormalPred, ...]) -> tuple[NormalPred, ...]:
    """Drop predicates entailed by the given context plus the others."""
    kept = list(preds)
    i = 0
    while i < len(kept):
        candidate = kept[i]
        rest = kept[:i] + kept[i + 1:]
        if entails(tuple(given) + tuple(rest), candidate):
            kept.pop(i)
        else:
            i += 1
    return tuple(kept)


def simplify(wanted: Wanted, given: tuple[Pred, ...], disamb: Type, level: int,
             *, no_elim: bool = False) -> SolveResult:
    from .predicates import eliminate_all

    mult_touch = {
        v.uid
        for v in wanted_mult_uvars(wanted) + free_mult_uvars(disamb)
        if v.level >= level
    }
    mult_touch -= {v.uid for v in free_mult_uvars(list(given)) if isinstance(v, MultUVar)}
    ty_touch = {
        v.uid
        for v in wanted_ty_uvars(wanted) + free_ty_uvars(disamb)
        if v.level >= level
    }

    theta = Subst()
    decomposed: list[WPred] = []
    _unify(list(wanted.eqs), theta, ty_touch, decomposed)

    given_n = normalize(theta.apply_pred(g) for g in given)
    preds = normalize(theta.apply_pred(p.pred) for p in list(wanted.preds) + decomposed)

    certified: tuple[NormalPred, ...] | None = None
    budget = 10 * (len(preds) + len(wanted.eqs)) + _BUDGET_SLACK
    while True:
        budget -= 1
        if budget < 0:
            raise RuntimeError("predicate simplification did not converge within its budget")
        before = preds

        while _forced_substitution(preds, theta, mult_touch):
            preds = normalize(_apply_normal(theta, preds))
        preds = normalize(p for p in preds if not entails(given_n, p))
        preds = _minimize(given_n, preds)

        if not no_elim:
            protected = {v.uid for v in free_mult_uvars(theta.apply_type(disamb))}
            elim = sorted(
                (v for v in free_vars(preds)
                 if isinstance(v, MultUVar) and v.uid in mult_touch
                 and v.uid not in protected),
                key=lambda v: v.uid)
            if elim:
                if certified is None:
                    certified = preds
                preds = eliminate_all(elim, preds)

        if preds == before:
            break

    if certified is None:
        certified = preds
    return SolveResult(
        theta,
        tuple(p.to_pred() for p in preds),
        tuple(theta.apply_pred(p.to_pred()) for p in certified),
    )


def _apply_normal(theta: Subst, preds: tuple[NormalPred, ...]):
    for p in preds:
        yield theta.apply_pred(p.to_pred())


# ---------------------------------------------------------------------------
# Full solving, implications included
# ---------------------------------------------------------------------------


def solve(wanted: Wanted, given: tuple[Pred, ...], disamb: Type, level: int,
          *, no_elim: bool = False) -> SolveResult:
    result = simplify(wanted, given, disamb, level, no_elim=no_elim)
    for impl in wanted.implications:
        inner_given = (tuple(result.theta.apply_pred(g) for g in given)
                       + tuple(impl.given)
                       + result.residual)
        inner_wanted = _subst_wanted(result.theta, impl.wanted)
        inner_disamb = result.theta.apply_type(impl.disamb)
        inner = solve(inner_wanted, inner_given, inner_disamb, impl.level,
                      no_elim=no_elim)
        if inner.residual:
            leftover = ", ".join(show_pred(p) for p in inner.residual)
            raise SignatureTooWeak(
                f"signature of '{impl.name}' is too weak: "
                f"cannot discharge {leftover}", impl.span, binding=impl.name)
    return result

"""Whole-program checking.

Bindings are checked top to bottom; each may refer to the ones before it and
to itself.  An unannotated binding is inferred: its constraints are solved
with everything touchable and no assumptions, the residual predicates become
the scheme's context, and the remaining free unification variables are
generalized into rigid binders.  Self-recursion is monomorphic here — the
binding sees itself at a fresh monotype, in the usual Hindley-Milner way.

An annotated binding is checked against its signature: the signature is
skolemized (its variables become rigid, so inference cannot specialize
them), its context becomes the given assumptions, and after solving the
residual must be empty — anything left over means the signature promises
less than the body requires, which is reported rather than silently
strengthened.  Recursive occurrences see the full signature, so annotated
polymorphic recursion works.

Alongside the environment of schemes, checking records everything a later
declarative re-check needs: the zonked derivation tree, the environment it
was checked under, and the certifying context (given plus the residual as it
stood before quantifier elimination — elimination weakens the residual, so
the pre-elimination form is what still entails each emitted predicate).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (MultUVar, MultVar, Pred, Scheme, Subst, Supply, TyUVar,
                   TyVar, Type, free_mult_uvars, free_ty_uvars, mono)
from .diagnostics import CheckError
from .gen import (ConInfo, ConstraintGen, Deriv, Eq, Wanted, build_con_env,
                  show_wanted, zonk_deriv)
from .predicates import is_satisfiable, normalize
from .solver import SignatureTooWeak, UnsatisfiableConstraints, solve
from .syntax import Binding, Program, free_expr_vars, show_pred


@dataclass
class BindingReport:
    name: str
    scheme: Scheme                     # as entered into the environment
    annotated: bool
    deriv: Deriv                       # zonked derivation of the right-hand side
    replay_env: dict[str, Scheme]      # schemes in scope for the derivation
    replay_given: tuple[Pred, ...]     # certifying context for its side conditions
    expected_ty: Type                  # what the derivation's root type must be
    residual: tuple[Pred, ...]         # final residual (context before generalizing)
    constraints_text: str              # generated constraints, pre-solve


@dataclass
class ProgramReport:
    con_env: dict[str, ConInfo]
    bindings: list[BindingReport]
    env: dict[str, Scheme]


def check_program(program: Program, *, no_elim: bool = False) -> ProgramReport:
    con_env = build_con_env(program.data_decls())
    supply = Supply()
    gen = ConstraintGen(supply, con_env)
    env: dict[str, Scheme] = {}
    reports: list[BindingReport] = []
    for b in program.bindings():
        try:
            if b.scheme is None:
                report = _check_unannotated(gen, supply, env, b, no_elim)
            else:
                report = _check_annotated(gen, supply, env, b, no_elim)
        except CheckError as e:
            if e.diagnostic.binding is None:
                e.diagnostic.binding = b.name
            raise
        env[b.name] = report.scheme
        reports.append(report)
    return ProgramReport(con_env, reports, env)


def _check_unannotated(gen: ConstraintGen, supply: Supply,
                       env: dict[str, Scheme], b: Binding,
                       no_elim: bool) -> BindingReport:
    wanted = Wanted()
    gen_env = dict(env)
    recursive = b.name in free_expr_vars(b.expr)
    if recursive:
        alpha = supply.fresh_ty(0)
        gen_env[b.name] = mono(alpha)
    ty, _usage, deriv = gen.infer(b.expr, gen_env, 0, wanted)
    if recursive:
        wanted.eqs.append(Eq(alpha, ty, b.span))
    constraints_text = show_wanted(wanted)

    result = solve(wanted, (), ty, 0, no_elim=no_elim)
    if not is_satisfiable(normalize(result.residual)):
        shown = ", ".join(show_pred(p) for p in result.residual)
        raise UnsatisfiableConstraints(
            f"the inferred constraints are unsatisfiable: {shown}",
            b.span, binding=b.name)

    body = result.theta.apply_type(ty)
    residual = tuple(result.theta.apply_pred(p) for p in result.residual)
    promo = _generalizer(body, residual)
    scheme = Scheme(
        tuple(v.name for v in promo.mult.values()),
        tuple(v.name for v in promo.ty.values()),
        tuple(promo.apply_pred(p) for p in residual),
        promo.apply_type(body))

    replay_env = dict(env)
    replay_env[b.name] = scheme
    return BindingReport(
        name=b.name,
        scheme=scheme,
        annotated=False,
        deriv=zonk_deriv(deriv, result.theta, promo),
        replay_env=replay_env,
        replay_given=tuple(promo.apply_pred(p) for p in result.certified),
        expected_ty=scheme.body,
        residual=residual,
        constraints_text=constraints_text)


def _generalizer(body: Type, residual: tuple[Pred, ...]) -> Subst:
    """A substitution promoting the leftover unification variables of the
    inferred type and residual to fresh rigid binders."""
    mult_vs = free_mult_uvars([body, list(residual)])
    ty_vs = free_ty_uvars([body, list(residual)])
    return Subst(
        ty={v.uid: TyVar(f"t{i}") for i, v in enumerate(ty_vs)},
        mult={v.uid: MultVar(f"m{i}") for i, v in enumerate(mult_vs)})


def _check_annotated(gen: ConstraintGen, supply: Supply,
                     env: dict[str, Scheme], b: Binding,
                     no_elim: bool) -> BindingReport:
    scheme = b.scheme
    _, _, given, skol_body = supply.skolemize(scheme)
    wanted = Wanted()
    gen_env = dict(env)
    gen_env[b.name] = scheme
    ty, _usage, deriv = gen.infer(b.expr, gen_env, 0, wanted)
    wanted.eqs.append(Eq(skol_body, ty, b.span))
    constraints_text = show_wanted(wanted)

    result = solve(wanted, given, ty, 0, no_elim=no_elim)
    if result.residual:
        shown = ", ".join(show_pred(p) for p in result.residual)
        raise SignatureTooWeak(
            f"signature is too weak: cannot discharge {shown}",
            b.span, binding=b.name)

    return BindingReport(
        name=b.name,
        scheme=scheme,
        annotated=True,
        deriv=zonk_deriv(deriv, result.theta),
        replay_env=gen_env,
        replay_given=given + result.certified,
        expected_ty=skol_body,
        residual=(),
        constraints_text=constraints_text)

"""Constraint generation.

Walking an expression produces four things: its type (built from fresh
unification variables), a *usage environment* mapping each free variable to
the multiplicity product with which it is consumed, a bag of wanted
constraints, and a derivation tree that a later pass can re-check against the
declarative rules once everything has been zonked.

The rules, per expression form:

* variable: instantiate the scheme with fresh variables; its instantiated
  context becomes wanted predicates; usage is ``{x: 1}``.
* lambda: the parameter gets a fresh type and the arrow a fresh multiplicity
  annotation ``pi``; if the body uses the parameter with product ``M`` we emit
  ``M <= pi``.  An unused parameter emits nothing: absence means zero uses,
  and zero uses are fine at any annotation.
* application ``e1 e2``: fresh ``beta`` and ``pi`` with ``t1 ~ t2 ->[pi]
  beta``; the argument's usage is scaled by ``pi``.
* constructor application (always saturated): instantiate the datatype's
  parameters fresh; each field's declared type yields an equality and each
  argument's usage is scaled by the field's instantiated multiplicity.
* case: the scrutinee is consumed with a fresh multiplicity ``pi0``; each
  alternative instantiates its constructor's datatype parameters fresh and
  equates the scrutinee type with the resulting datatype; a binder used with
  product ``M`` in an alternative body yields ``M <= pi0 * nu`` where ``nu``
  is the field's instantiated multiplicity.  Branch usages are joined with
  the least upper bound (a variable missing from one branch counts as zero,
  and the join of zero with anything nonzero is ``w``).
* annotated let: the right-hand side is checked against its signature under
  an *implication* — its constraints are solved separately under the
  signature's context, with the signature skolemized so it cannot be
  specialized.  The let body sees the signature.  Let is not recursive.

Unannotated ``let`` never reaches this module; the parser desugars it to an
immediately-applied lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .core import (Mult, MultUVar, MultVar, OMEGA, PRODUCT_ONE, Pred, Product,
                   Scheme, Supply, TyData, TyFun, TyUVar, Type, Usage,
                   add_usage, free_mult_uvars, free_ty_uvars, lub_usage, mono,
                   pred, product, rename_rigid, scale_usage)
from .diagnostics import CheckError, Span
from .syntax import (Alt, DataDecl, ECase, ECon, ELam, ELet, EApp, EVar, Expr,
                     show_mult, show_pred, show_type)


# ---------------------------------------------------------------------------
# Wanted constraints
# ---------------------------------------------------------------------------


@dataclass
class Eq:
    """A wanted type equality."""

    lhs: Type
    rhs: Type
    span: Span

    def __repr__(self) -> str:
        return f"{show_type(self.lhs)} ~ {show_type(self.rhs)}"


@dataclass
class WPred:
    """A wanted multiplicity predicate."""

    pred: Pred
    span: Span

    def __repr__(self) -> str:
        return show_pred(self.pred)


@dataclass
class Implication:
    """Constraints to be solved under local assumptions.

    ``level`` is the nesting depth; unification variables created while
    inferring the protected expression carry this level, and only the solver
    run for this implication may solve them.  ``given`` is the skolemized
    signature context, ``disamb`` the inferred type whose free variables must
    survive disambiguation.
    """

    level: int
    given: tuple[Pred, ...]
    wanted: "Wanted"
    disamb: Type
    span: Span
    name: str

    def __repr__(self) -> str:
        g = ", ".join(show_pred(p) for p in self.given) or "true"
        return f"({g}) => [{self.wanted!r}]"


@dataclass
class Wanted:
    eqs: list[Eq] = field(default_factory=list)
    preds: list[WPred] = field(default_factory=list)
    implications: list[Implication] = field(default_factory=list)

    def merge(self, other: "Wanted") -> None:
        self.eqs.extend(other.eqs)
        self.preds.extend(other.preds)
        self.implications.extend(other.implications)

    def is_empty(self) -> bool:
        return not (self.eqs or self.preds or self.implications)

    def __repr__(self) -> str:
        parts = [repr(e) for e in self.eqs]
        parts += [repr(p) for p in self.preds]
        parts += [repr(i) for i in self.implications]
        return " /\\ ".join(parts) if parts else "true"


def wanted_mult_uvars(w: Wanted) -> list[MultUVar]:
    """Free multiplicity unification variables, in first-occurrence order.

    Variables belonging to a nested implication (level >= the implication's
    own level) are internal to it and are not reported.
    """
    out: list[MultUVar] = []
    seen: set[int] = set()

    def push(vs) -> None:
        for v in vs:
            if v.uid not in seen:
                seen.add(v.uid)
                out.append(v)

    for eq in w.eqs:
        push(free_mult_uvars([eq.lhs, eq.rhs]))
    for wp in w.preds:
        push(free_mult_uvars(wp.pred))
    for impl in w.implications:
        inner = free_mult_uvars(list(impl.given)) + wanted_mult_uvars(impl.wanted) \
            + free_mult_uvars(impl.disamb)
        push(v for v in inner if v.level < impl.level)
    return out


def wanted_ty_uvars(w: Wanted) -> list[TyUVar]:
    out: list[TyUVar] = []
    seen: set[int] = set()

    def push(vs) -> None:
        for v in vs:
            if v.uid not in seen:
                seen.add(v.uid)
                out.append(v)

    for eq in w.eqs:
        push(free_ty_uvars([eq.lhs, eq.rhs]))
    for impl in w.implications:
        inner = wanted_ty_uvars(impl.wanted) + free_ty_uvars(impl.disamb)
        push(v for v in inner if v.level < impl.level)
    return out


def show_wanted(w: Wanted, indent: str = "") -> str:
    lines = []
    for eq in w.eqs:
        lines.append(f"{indent}{eq!r}")
    for wp in w.preds:
        lines.append(f"{indent}{wp!r}")
    for impl in w.implications:
        g = ", ".join(show_pred(p) for p in impl.given) or "true"
        lines.append(f"{indent}implication (level {impl.level}, given {g}):")
        lines.append(show_wanted(impl.wanted, indent + "  "))
    return "\n".join(lines) if lines else f"{indent}true"


# ---------------------------------------------------------------------------
# Derivation trees
# ---------------------------------------------------------------------------


@dataclass
class DVar:
    span: Span
    ty: Type
    name: str


@dataclass
class DAbs:
    span: Span
    ty: Type  # always an arrow; its annotation is the parameter's multiplicity
    param: str
    body: "Deriv"


@dataclass
class DApp:
    span: Span
    ty: Type
    fn: "Deriv"
    arg: "Deriv"


@dataclass
class DCon:
    span: Span
    ty: Type  # the instantiated datatype
    name: str
    args: tuple["Deriv", ...]


@dataclass
class DAlt:
    span: Span
    con: str
    binders: tuple[str, ...]
    body: "Deriv"


@dataclass
class DCase:
    span: Span
    ty: Type
    pi0: Mult  # multiplicity with which the scrutinee is consumed
    scrut: "Deriv"
    alts: tuple[DAlt, ...]


@dataclass
class DLet:
    span: Span
    ty: Type
    name: str
    scheme: Scheme
    rhs_usage: Usage  # already scaled by w; certified by the implication
    body: "Deriv"


Deriv = Union[DVar, DAbs, DApp, DCon, DCase, DLet]


def zonk_deriv(d: Deriv, *substs) -> Deriv:
    """Rewrite every type and multiplicity in the tree through the
    substitutions, applied left to right."""

    def zt(t: Type) -> Type:
        for s in substs:
            t = s.apply_type(t)
        return t

    def zm(m: Mult) -> Mult:
        for s in substs:
            m = s.apply_mult(m)
        return m

    def zu(u: Usage) -> Usage:
        for s in substs:
            u = s.apply_usage(u)
        return u

    def go(d: Deriv) -> Deriv:
        match d:
            case DVar(span, ty, name):
                return DVar(span, zt(ty), name)
            case DAbs(span, ty, param, body):
                return DAbs(span, zt(ty), param, go(body))
            case DApp(span, ty, fn, arg):
                return DApp(span, zt(ty), go(fn), go(arg))
            case DCon(span, ty, name, args):
                return DCon(span, zt(ty), name, tuple(go(a) for a in args))
            case DCase(span, ty, pi0, scrut, alts):
                return DCase(span, zt(ty), zm(pi0), go(scrut),
                             tuple(DAlt(a.span, a.con, a.binders, go(a.body))
                                   for a in alts))
            case DLet(span, ty, name, scheme, rhs_usage, body):
                return DLet(span, zt(ty), name, scheme, zu(rhs_usage), go(body))
        raise TypeError(f"unknown derivation node {d!r}")

    return go(d)


# ---------------------------------------------------------------------------
# Datatype environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConInfo:
    name: str
    data_name: str
    mult_params: tuple[str, ...]
    ty_params: tuple[str, ...]
    field_mults: tuple[Mult, ...]
    field_types: tuple[Type, ...]

    def arity(self) -> int:
        return len(self.field_types)


def build_con_env(decls: list[DataDecl]) -> dict[str, ConInfo]:
    env: dict[str, ConInfo] = {}
    for d in decls:
        for c in d.constructors:
            env[c.name] = ConInfo(c.name, d.name, d.mult_params, d.ty_params,
                                  c.field_mults, c.field_types)
    return env


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


class ConstraintGen:
    def __init__(self, supply: Supply, con_env: dict[str, ConInfo]) -> None:
        self.supply = supply
        self.con_env = con_env

    def infer(self, expr: Expr, env: dict[str, Scheme], level: int,
              wanted: Wanted) -> tuple[Type, Usage, Deriv]:
        """Infer a type for ``expr``, accumulating constraints into ``wanted``."""
        match expr:
            case EVar(span, name):
                return self._infer_var(span, name, env, level, wanted)
            case ELam(span, param, body):
                return self._infer_abs(span, param, body, env, level, wanted)
            case EApp(span, fn, arg):
                return self._infer_app(span, fn, arg, env, level, wanted)
            case ECon(span, name, args):
                return self._infer_con(span, name, args, env, level, wanted)
            case ECase(span, scrut, alts):
                return self._infer_case(span, scrut, alts, env, level, wanted)
            case ELet(span, name, scheme, rhs, body):
                return self._infer_let(span, name, scheme, rhs, body, env, level, wanted)
        raise TypeError(f"unknown expression {expr!r}")

    def _infer_var(self, span, name, env, level, wanted):
        if name not in env:
            raise CheckError(f"unbound variable '{name}'", span)
        _, _, ctx, body = self.supply.instantiate(env[name], level)
        for p in ctx:
            wanted.preds.append(WPred(p, span))
        return body, {name: PRODUCT_ONE}, DVar(span, body, name)

    def _infer_abs(self, span, param, body_expr, env, level, wanted):
        alpha = self.supply.fresh_ty(level)
        pi = self.supply.fresh_mult(level)
        body_ty, usage, body_deriv = self.infer(
            body_expr, {**env, param: mono(alpha)}, level, wanted)
        if param in usage:
            wanted.preds.append(WPred(pred(usage[param], pi), span))
            usage = {x: m for x, m in usage.items() if x != param}
        ty = TyFun(alpha, pi, body_ty)
        return ty, usage, DAbs(span, ty, param, body_deriv)

    def _infer_app(self, span, fn_expr, arg_expr, env, level, wanted):
        fn_ty, fn_usage, fn_deriv = self.infer(fn_expr, env, level, wanted)
        arg_ty, arg_usage, arg_deriv = self.infer(arg_expr, env, level, wanted)
        beta = self.supply.fresh_ty(level)
        pi = self.supply.fresh_mult(level)
        wanted.eqs.append(Eq(fn_ty, TyFun(arg_ty, pi, beta), span))
        usage = add_usage(fn_usage, scale_usage(pi, arg_usage))
        return beta, usage, DApp(span, beta, fn_deriv, arg_deriv)

    def _instantiate_con(self, info: ConInfo, level: int):
        mmap = {p: self.supply.fresh_mult(level) for p in info.mult_params}
        tmap = {a: self.supply.fresh_ty(level) for a in info.ty_params}
        field_mults = tuple(
            mmap[m.name] if isinstance(m, MultVar) else m
            for m in info.field_mults)
        field_types = tuple(rename_rigid(t, mmap, tmap) for t in info.field_types)
        result = TyData(info.data_name,
                        tuple(mmap[p] for p in info.mult_params),
                        tuple(tmap[a] for a in info.ty_params))
        return field_mults, field_types, result

    def _infer_con(self, span, name, arg_exprs, env, level, wanted):
        info = self.con_env[name]
        field_mults, field_types, result = self._instantiate_con(info, level)
        usage: Usage = {}
        arg_derivs = []
        for arg_expr, f_mult, f_ty in zip(arg_exprs, field_mults, field_types):
            arg_ty, arg_usage, arg_deriv = self.infer(arg_expr, env, level, wanted)
            wanted.eqs.append(Eq(arg_ty, f_ty, arg_deriv.span))
            usage = add_usage(usage, scale_usage(f_mult, arg_usage))
            arg_derivs.append(arg_deriv)
        return result, usage, DCon(span, result, name, tuple(arg_derivs))

    def _infer_case(self, span, scrut_expr, alts: tuple[Alt, ...], env, level, wanted):
        scrut_ty, scrut_usage, scrut_deriv = self.infer(scrut_expr, env, level, wanted)
        data_names = {self.con_env[a.con].data_name for a in alts}
        if len(data_names) > 1:
            raise CheckError(
                "case alternatives mix constructors of "
                + " and ".join(f"'{n}'" for n in sorted(data_names)), span)
        pi0 = self.supply.fresh_mult(level)
        beta = self.supply.fresh_ty(level)
        alt_usages: list[Usage] = []
        alt_derivs: list[DAlt] = []
        for alt in alts:
            info = self.con_env[alt.con]
            field_mults, field_types, result = self._instantiate_con(info, level)
            wanted.eqs.append(Eq(scrut_ty, result, alt.span))
            alt_env = dict(env)
            for binder, f_ty in zip(alt.binders, field_types):
                alt_env[binder] = mono(f_ty)
            body_ty, body_usage, body_deriv = self.infer(alt.body, alt_env, level, wanted)
            wanted.eqs.append(Eq(beta, body_ty, alt.span))
            for binder, f_mult in zip(alt.binders, field_mults):
                if binder in body_usage:
                    wanted.preds.append(
                        WPred(pred(body_usage[binder], product([pi0, f_mult])), alt.span))
            body_usage = {x: m for x, m in body_usage.items() if x not in alt.binders}
            alt_usages.append(body_usage)
            alt_derivs.append(DAlt(alt.span, alt.con, alt.binders, body_deriv))
        joined = alt_usages[0]
        for u in alt_usages[1:]:
            joined = lub_usage(joined, u)
        usage = add_usage(scale_usage(pi0, scrut_usage), joined)
        return beta, usage, DCase(span, beta, pi0, scrut_deriv, tuple(alt_derivs))

    def _infer_let(self, span, name, scheme: Scheme, rhs, body, env, level, wanted):
        _, _, given, skol_body = self.supply.skolemize(scheme)
        inner = Wanted()
        rhs_ty, rhs_usage, _rhs_deriv = self.infer(rhs, env, level + 1, inner)
        inner.eqs.append(Eq(skol_body, rhs_ty, span))
        wanted.implications.append(
            Implication(level + 1, given, inner, rhs_ty, span, name))
        body_ty, body_usage, body_deriv = self.infer(
            body, {**env, name: scheme}, level, wanted)
        # The bound variable is unrestricted (hence the w-scaling of the
        # right-hand side's usage), so it leaves no condition behind.
        body_usage = {x: m for x, m in body_usage.items() if x != name}
        rhs_scaled = scale_usage(OMEGA, rhs_usage)
        usage = add_usage(rhs_scaled, body_usage)
        return body_ty, usage, DLet(span, body_ty, name, scheme, rhs_scaled, body_deriv)

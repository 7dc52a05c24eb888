"""Declarative re-checking of recorded derivations.

Inference is a pile of moving parts — generation, unification, forced
substitutions, entailment, elimination — and a bug in any of them could
produce a well-formed but wrong scheme.  This module is the safety net: it
takes the zonked derivation tree recorded for a binding and re-checks it
against the declarative typing rules directly, sharing nothing with the
solver but the entailment test.

For each node it recomputes the usage environment bottom-up and checks the
rule's side conditions under the binding's *certifying context* (the given
context plus the residual as it stood before quantifier elimination):

* a variable's type must be an instance of its scheme in the environment,
  found by matching, and the instantiated scheme context must be entailed;
* a lambda binder used with product ``M`` needs ``M <= pi`` entailed, where
  ``pi`` is the annotation on the arrow; an unused binder needs nothing;
* an application must agree structurally with the arrow it eliminates, and
  scales the argument usage by the arrow's multiplicity;
* constructor fields must have exactly their declared (instantiated) types;
* a case binder used with product ``M`` needs ``M <= pi0 * nu`` entailed;
  branch usages are joined with the least upper bound;
* a let body is checked under the signature; the right-hand side was
  certified separately by its implication when the program was checked, so
  only its (already ``w``-scaled) usage participates here.

Eliminated multiplicity variables may survive in the tree; they are treated
as opaque atoms, and the certifying context still mentions them, which is
exactly why the pre-elimination residual is the right context to check
against.

The matcher is conservative: a scheme variable that occurs only in the
context and not in the body cannot be recovered from the node's type and is
left opaque, which can reject (never wrongly accept) exotic schemes produced
with elimination disabled.
"""

from __future__ import annotations

from .core import (Mult, MultVar, PRODUCT_ONE, Pred, Scheme, TyData, TyFun,
                   TyUVar, TyVar, Type, Usage, add_usage, lub_usage, mono,
                   product, rename_rigid, scale_usage, _rename_pred)
from .checker import BindingReport, ProgramReport
from .diagnostics import LinError, Span
from .gen import (ConInfo, DAbs, DApp, DCase, DCon, DLet, DVar, Deriv)
from .predicates import NormalPred, entails, normalize
from .syntax import show_mult, show_pred, show_product, show_scheme, show_type


class ReplayError(LinError):
    """The recorded derivation does not satisfy the declarative rules."""


def replay_program(report: ProgramReport) -> None:
    for b in report.bindings:
        replay_binding(report, b)


def replay_binding(report: ProgramReport, b: BindingReport) -> None:
    try:
        if b.deriv.ty != b.expected_ty:
            raise ReplayError(
                f"derivation concludes '{show_type(b.deriv.ty)}' but the "
                f"binding was given '{show_type(b.expected_ty)}'", b.deriv.span)
        given = normalize(b.replay_given)
        usage = _check(b.deriv, b.replay_env, given, report.con_env)
        for name in usage:
            if name not in b.replay_env:
                raise ReplayError(
                    f"usage of '{name}' escapes its scope", b.deriv.span)
    except ReplayError as e:
        if e.diagnostic.binding is None:
            e.diagnostic.binding = b.name
        raise


def _check(d: Deriv, env: dict[str, Scheme], given: tuple[NormalPred, ...],
           con_env: dict[str, ConInfo]) -> Usage:
    match d:
        case DVar(span, ty, name):
            if name not in env:
                raise ReplayError(f"'{name}' is not in scope", span)
            scheme = env[name]
            mmap, _tmap = _match_scheme(scheme, ty, span)
            for p in scheme.context:
                inst = _rename_pred(p, mmap)
                _require(given, inst, span,
                         f"instantiating '{name}' at '{show_type(ty)}'")
            return {name: PRODUCT_ONE}

        case DAbs(span, ty, param, body):
            if not isinstance(ty, TyFun):
                raise ReplayError(
                    f"lambda recorded at non-arrow type '{show_type(ty)}'", span)
            usage = _check(body, {**env, param: mono(ty.dom)}, given, con_env)
            _same_type(body.ty, ty.cod, body.span)
            if param in usage:
                _require(given, Pred(usage[param], product([ty.mult])), span,
                         f"binder '{param}' used {show_product(usage[param])} "
                         f"times at annotation {show_mult(ty.mult)}")
                usage = {x: m for x, m in usage.items() if x != param}
            return usage

        case DApp(span, ty, fn, arg):
            fn_usage = _check(fn, env, given, con_env)
            arg_usage = _check(arg, env, given, con_env)
            if not isinstance(fn.ty, TyFun):
                raise ReplayError(
                    f"application of non-arrow type '{show_type(fn.ty)}'", span)
            _same_type(arg.ty, fn.ty.dom, arg.span)
            _same_type(ty, fn.ty.cod, span)
            return add_usage(fn_usage, scale_usage(fn.ty.mult, arg_usage))

        case DCon(span, ty, name, args):
            info = con_env[name]
            mmap, tmap = _data_instance(info, ty, span)
            usage: Usage = {}
            for child, f_mult, f_ty in zip(args, info.field_mults, info.field_types):
                child_usage = _check(child, env, given, con_env)
                _same_type(child.ty, _inst_type(f_ty, mmap, tmap), child.span)
                usage = add_usage(usage, scale_usage(_inst_mult(f_mult, mmap), child_usage))
            return usage

        case DCase(span, ty, pi0, scrut, alts):
            scrut_usage = _check(scrut, env, given, con_env)
            joined: Usage | None = None
            for alt in alts:
                info = con_env[alt.con]
                mmap, tmap = _data_instance(info, scrut.ty, alt.span)
                alt_env = dict(env)
                field_mults = [_inst_mult(m, mmap) for m in info.field_mults]
                for binder, f_ty in zip(alt.binders, info.field_types):
                    alt_env[binder] = mono(_inst_type(f_ty, mmap, tmap))
                body_usage = _check(alt.body, alt_env, given, con_env)
                _same_type(alt.body.ty, ty, alt.span)
                for binder, f_mult in zip(alt.binders, field_mults):
                    if binder in body_usage:
                        _require(given,
                                 Pred(body_usage[binder], product([pi0, f_mult])),
                                 alt.span,
                                 f"pattern binder '{binder}' of '{alt.con}'")
                body_usage = {x: m for x, m in body_usage.items()
                              if x not in alt.binders}
                joined = body_usage if joined is None else lub_usage(joined, body_usage)
            return add_usage(scale_usage(pi0, scrut_usage), joined or {})

        case DLet(span, ty, name, scheme, rhs_usage, body):
            usage = _check(body, {**env, name: scheme}, given, con_env)
            _same_type(body.ty, ty, span)
            usage = {x: m for x, m in usage.items() if x != name}
            return add_usage(rhs_usage, usage)

    raise TypeError(f"unknown derivation node {d!r}")


def _require(given, p: Pred, span: Span, what: str) -> None:
    if not entails(given, p):
        raise ReplayError(
            f"side condition {show_pred(p)} is not entailed ({what})", span)


def _same_type(actual: Type, expected: Type, span: Span) -> None:
    if actual != expected:
        raise ReplayError(
            f"derivation records '{show_type(actual)}' where "
            f"'{show_type(expected)}' is required", span)


# ---------------------------------------------------------------------------
# Scheme instance matching
# ---------------------------------------------------------------------------


def _match_scheme(scheme: Scheme, ty: Type, span: Span) -> tuple[dict[str, Mult], dict[str, Type]]:
    """Find the instantiation under which ``scheme``'s body is ``ty``."""
    mmap: dict[str, Mult] = {}
    tmap: dict[str, Type] = {}

    def fail() -> ReplayError:
        return ReplayError(
            f"'{show_type(ty)}' is not an instance of '{show_scheme(scheme, canonical=False)}'",
            span)

    def go_m(pat: Mult, sub: Mult) -> None:
        if isinstance(pat, MultVar) and pat.name in scheme.mult_binders:
            if mmap.setdefault(pat.name, sub) != sub:
                raise fail()
        elif pat != sub:
            raise fail()

    def go_t(pat: Type, sub: Type) -> None:
        match pat:
            case TyVar(name) if name in scheme.ty_binders:
                if tmap.setdefault(name, sub) != sub:
                    raise fail()
            case TyVar() | TyUVar():
                if pat != sub:
                    raise fail()
            case TyData(name, mults, args):
                if (not isinstance(sub, TyData) or sub.name != name
                        or len(sub.args) != len(args)):
                    raise fail()
                for pm, sm in zip(mults, sub.mults):
                    go_m(pm, sm)
                for pa, sa in zip(args, sub.args):
                    go_t(pa, sa)
            case TyFun(dom, mult, cod):
                if not isinstance(sub, TyFun):
                    raise fail()
                go_t(dom, sub.dom)
                go_m(mult, sub.mult)
                go_t(cod, sub.cod)
            case _:
                raise fail()

    go_t(scheme.body, ty)
    # Binders that occur only in the context cannot be recovered; leave them
    # opaque.
    for name in scheme.mult_binders:
        mmap.setdefault(name, MultVar(name))
    for name in scheme.ty_binders:
        tmap.setdefault(name, TyVar(name))
    return mmap, tmap


def _data_instance(info: ConInfo, ty: Type, span: Span) -> tuple[dict[str, Mult], dict[str, Type]]:
    if not isinstance(ty, TyData) or ty.name != info.data_name:
        raise ReplayError(
            f"constructor '{info.name}' of '{info.data_name}' recorded at "
            f"type '{show_type(ty)}'", span)
    return (dict(zip(info.mult_params, ty.mults)),
            dict(zip(info.ty_params, ty.args)))


def _inst_mult(m: Mult, mmap: dict[str, Mult]) -> Mult:
    if isinstance(m, MultVar) and m.name in mmap:
        return mmap[m.name]
    return m


def _inst_type(t: Type, mmap: dict[str, Mult], tmap: dict[str, Type]) -> Type:
    return rename_rigid(t, mmap, tmap)

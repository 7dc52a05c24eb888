"""Unit tests for constraint generation.

Each test parses a tiny expression, runs the generator, and inspects the
emitted equalities, predicates, implications, and usage environment.
"""

import pytest

from linfer.core import (
    OMEGA,
    ONE,
    PRODUCT_OMEGA,
    PRODUCT_ONE,
    MultUVar,
    MultVar,
    Scheme,
    Supply,
    TyData,
    TyFun,
    TyUVar,
    TyVar,
    mono,
    pred,
    product,
)
from linfer.diagnostics import CheckError
from linfer.gen import (
    ConstraintGen,
    DAbs,
    DApp,
    DCase,
    DCon,
    DLet,
    DVar,
    Wanted,
    build_con_env,
    show_wanted,
    wanted_mult_uvars,
    wanted_ty_uvars,
    zonk_deriv,
)
from linfer.syntax import parse_program, parse_type

DATA = """\
data Bool where { True : Bool; False : Bool }
data Pair p q a b where { Pair : a ->[p] b ->[q] Pair p q a b }
data List a where { Nil : List a; Cons : a ->[1] List a ->[1] List a }
"""

PROG = parse_program(DATA)
CON_ENV = build_con_env(PROG.data_decls())

a = TyVar("a")


def gen(src: str, env: dict[str, Scheme] | None = None):
    """Generate constraints for the body of ``it = <src>``."""
    prog = parse_program(DATA + "it = " + src + "\n")
    g = ConstraintGen(Supply(), CON_ENV)
    wanted = Wanted()
    ty, usage, deriv = g.infer(prog.bindings()[-1].expr, env or {}, 0, wanted)
    return ty, usage, deriv, wanted


class TestVar:
    def test_monotype_lookup(self):
        ty, usage, deriv, wanted = gen("x", {"x": mono(a)})
        assert ty == a
        assert usage == {"x": PRODUCT_ONE}
        assert isinstance(deriv, DVar)
        assert wanted.is_empty()

    def test_instantiation_freshens_binders(self):
        sch = parse_type("forall p a. (p <= p * p) => a ->[p] a")
        ty1, _, _, w1 = gen("f", {"f": sch})
        ty2, _, _, _ = gen("f", {"f": sch})
        assert isinstance(ty1.mult, MultUVar) and isinstance(ty1.dom, TyUVar)
        # Fresh supplies start at the same uid, but within one run two
        # instantiations must differ; across runs the shapes agree.
        assert type(ty1) is type(ty2)

    def test_instantiated_context_becomes_wanted(self):
        sch = parse_type("forall p q a. (p <= q) => a ->[p] a ->[q] a")
        ty, _, _, wanted = gen("f", {"f": sch})
        assert len(wanted.preds) == 1
        wp = wanted.preds[0].pred
        assert wp.lhs.atoms == (ty.mult,)
        assert wp.rhs.atoms == (ty.cod.mult,)

    def test_unbound_variable(self):
        with pytest.raises(CheckError) as ei:
            gen("nope")
        assert "unbound variable 'nope'" in str(ei.value)


class TestAbs:
    def test_used_binder_emits_usage_bound(self):
        ty, usage, deriv, wanted = gen(r"\x -> x")
        assert isinstance(ty, TyFun)
        assert usage == {}
        assert len(wanted.preds) == 1
        wp = wanted.preds[0].pred
        # usage(x) = 1 must be below the arrow's multiplicity variable.
        assert wp.lhs == PRODUCT_ONE
        assert wp.rhs.atoms == (ty.mult,)

    def test_unused_binder_emits_nothing(self):
        ty, usage, deriv, wanted = gen(r"\x -> y", {"y": mono(a)})
        # An unused binder admits any multiplicity: no constraint at all.
        assert not wanted.preds
        assert usage == {"y": PRODUCT_ONE}

    def test_shared_binder_forces_omega(self):
        _, _, _, wanted = gen(r"\f -> f f")
        # f is used twice: the usage bound's left side collapses to w.
        bound = [wp.pred for wp in wanted.preds if wp.pred.lhs == PRODUCT_OMEGA]
        assert bound

    def test_binder_removed_from_usage(self):
        _, usage, _, _ = gen(r"\x -> x")
        assert "x" not in usage


class TestApp:
    def test_emits_arrow_equality(self):
        ty, usage, deriv, wanted = gen("f x", {"f": mono(a), "x": mono(a)})
        assert len(wanted.eqs) == 1
        eq = wanted.eqs[0]
        assert eq.lhs == a
        assert isinstance(eq.rhs, TyFun)
        assert eq.rhs.dom == a
        assert eq.rhs.cod == ty
        assert isinstance(deriv, DApp)

    def test_argument_usage_scaled(self):
        _, usage, _, wanted = gen("f x", {"f": mono(a), "x": mono(a)})
        pi = wanted.eqs[0].rhs.mult
        assert usage["f"] == PRODUCT_ONE
        assert usage["x"] == product((pi,))

    def test_nested_argument_scaling_compounds(self):
        env = {"f": mono(a), "g": mono(a), "x": mono(a)}
        _, usage, _, wanted = gen("f (g x)", env)
        outer_pi = wanted.eqs[1].rhs.mult
        inner_pi = wanted.eqs[0].rhs.mult
        assert usage["x"] == product((outer_pi, inner_pi))
        assert usage["g"] == product((outer_pi,))


class TestCon:
    def test_nullary(self):
        ty, usage, deriv, wanted = gen("True")
        assert ty == TyData("Bool", (), ())
        assert usage == {} and wanted.is_empty()
        assert isinstance(deriv, DCon)

    def test_field_equalities_and_scaling(self):
        env = {"x": mono(a), "y": mono(a)}
        ty, usage, _, wanted = gen("Pair x y", env)
        assert isinstance(ty, TyData) and ty.name == "Pair"
        p_uv, q_uv = ty.mults
        # Field usage is scaled by the constructor's multiplicity argument.
        assert usage == {"x": product((p_uv,)), "y": product((q_uv,))}
        assert len(wanted.eqs) == 2
        assert wanted.eqs[0].rhs == ty.args[0]

    def test_linear_fields_scale_by_one(self):
        env = {"x": mono(a), "xs": mono(a)}
        _, usage, _, _ = gen("Cons x xs", env)
        assert usage == {"x": PRODUCT_ONE, "xs": PRODUCT_ONE}


class TestCase:
    def test_scrutinee_scaled_and_alts_joined(self):
        env = {"b": mono(TyData("Bool", (), ())), "x": mono(a), "y": mono(a)}
        ty, usage, deriv, wanted = gen("case b of { True -> x; False -> y }", env)
        assert isinstance(deriv, DCase)
        pi0 = deriv.pi0
        assert usage["b"] == product((pi0,))
        # One-branch-only variables get lub'd against zero, i.e. w.
        assert usage["x"] == PRODUCT_OMEGA
        assert usage["y"] == PRODUCT_OMEGA

    def test_shared_alt_variable_multiplies(self):
        env = {"b": mono(TyData("Bool", (), ())), "x": mono(a)}
        _, usage, _, _ = gen("case b of { True -> x; False -> x }", env)
        assert usage["x"] == PRODUCT_ONE  # 1 * 1 in the two-point lattice

    def test_used_binder_bounded_by_scrutinee_mult(self):
        _, _, deriv, wanted = gen("\\p -> case p of { Pair x y -> x }")
        case_deriv = deriv.body
        pi0 = case_deriv.pi0
        binder_preds = [wp.pred for wp in wanted.preds
                        if pi0 in wp.pred.rhs.atoms]
        # x is used: 1 <= pi0 * p.  y is unused: nothing.
        assert len(binder_preds) == 1
        assert binder_preds[0].lhs == PRODUCT_ONE
        assert len(binder_preds[0].rhs.atoms) == 2

    def test_result_type_equalities_per_alt(self):
        env = {"b": mono(TyData("Bool", (), ())), "x": mono(a)}
        _, _, deriv, wanted = gen("case b of { True -> x; False -> x }", env)
        beta = deriv.ty
        assert sum(1 for e in wanted.eqs if e.lhs == beta) == 2

    def test_scrutinee_shape_equality_per_alt(self):
        env = {"xs": mono(a)}
        _, _, _, wanted = gen("case xs of { Nil -> xs; Cons y ys -> ys }", env)
        shape_eqs = [e for e in wanted.eqs if e.lhs == a]
        assert len(shape_eqs) == 2
        assert all(isinstance(e.rhs, TyData) and e.rhs.name == "List"
                   for e in shape_eqs)

    def test_mixed_constructors_rejected(self):
        env = {"x": mono(a)}
        with pytest.raises(CheckError) as ei:
            gen("case x of { True -> x; Nil -> x }", env)
        assert "mix constructors" in str(ei.value)

    def test_binders_removed_from_alt_usage(self):
        _, usage, _, _ = gen("\\xs -> case xs of { Cons y ys -> y; Nil -> xs }")
        assert usage == {}


class TestLet:
    SRC = "let g : forall a. a ->[1] a = \\x -> x in g y"

    def test_implication_recorded(self):
        _, _, _, wanted = gen(self.SRC, {"y": mono(a)})
        assert len(wanted.implications) == 1
        impl = wanted.implications[0]
        assert impl.level == 1
        assert impl.name == "g"
        assert impl.given == ()  # no context on this signature
        # The right-hand side's constraints live inside the implication.
        assert impl.wanted.eqs

    def test_given_carries_skolemized_context(self):
        src = "let g : forall p a. (p <= 1) => a ->[p] a = \\x -> x in g y"
        _, _, _, wanted = gen(src, {"y": mono(a)})
        impl = wanted.implications[0]
        assert len(impl.given) == 1
        lhs = impl.given[0].lhs.atoms[0]
        assert isinstance(lhs, MultVar) and lhs.name.startswith("p#")

    def test_disambiguation_target_is_rhs_type(self):
        _, _, _, wanted = gen(self.SRC, {"y": mono(a)})
        impl = wanted.implications[0]
        # The skolemized signature body must equal the inferred rhs type.
        assert any(e.lhs == impl.disamb or e.rhs == impl.disamb
                   for e in impl.wanted.eqs)

    def test_body_sees_polymorphic_scheme(self):
        src = "let g : forall a. a ->[1] a = \\x -> x in Pair (g y) (g True)"
        ty, _, _, _ = gen(src, {"y": mono(a)})
        assert isinstance(ty, TyData) and ty.name == "Pair"

    def test_rhs_usage_scaled_by_omega(self):
        src = "let g : forall b. b ->[1] b = \\x -> f x in g y"
        _, usage, deriv, _ = gen(src, {"f": mono(a), "y": mono(a)})
        assert usage["f"] == PRODUCT_OMEGA
        assert isinstance(deriv, DLet)
        assert deriv.rhs_usage["f"] == PRODUCT_OMEGA

    def test_bound_name_absent_from_usage(self):
        _, usage, _, _ = gen(self.SRC, {"y": mono(a)})
        assert "g" not in usage

    def test_let_shadowing_keeps_outer_usage_separate(self):
        # The inner 'f' must not erase the outer parameter's usage record.
        _, _, _, wanted = gen(
            r"\f -> let f : forall a. a ->[1] a = \x -> x in f y",
            {"y": mono(a)})
        # Outer lambda f is unused (shadowed), so no usage bound on it; the
        # bound for x lives inside the implication, not at the outer level.
        assert wanted.preds == []
        assert len(wanted.implications[0].wanted.preds) == 1


class TestWantedHelpers:
    def test_level_filtering_hides_implication_locals(self):
        _, _, _, wanted = gen(TestLet.SRC, {"y": mono(a)})
        outer_mults = wanted_mult_uvars(wanted)
        outer_tys = wanted_ty_uvars(wanted)
        assert all(v.level == 0 for v in outer_mults)
        assert all(v.level == 0 for v in outer_tys)
        inner = wanted.implications[0].wanted
        assert any(v.level == 1 for v in wanted_mult_uvars(inner))

    def test_first_occurrence_order(self):
        _, _, _, wanted = gen("f x", {"f": mono(a), "x": mono(a)})
        vs = wanted_mult_uvars(wanted)
        assert [v.uid for v in vs] == sorted(v.uid for v in vs)

    def test_show_wanted_mentions_implications(self):
        _, _, _, wanted = gen(TestLet.SRC, {"y": mono(a)})
        text = show_wanted(wanted)
        assert "implication (level 1" in text
        assert "true" not in text.splitlines()[0]

    def test_zonk_deriv_applies_substitutions(self):
        from linfer.core import Subst
        _, _, deriv, wanted = gen("f x", {"f": mono(a), "x": mono(a)})
        beta = deriv.ty
        s = Subst()
        s.bind_ty(beta, TyData("Bool", (), ()))
        z = zonk_deriv(deriv, s)
        assert z.ty == TyData("Bool", (), ())
        # The original derivation is untouched.
        assert deriv.ty == beta

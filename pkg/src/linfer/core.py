"""Core data model: multiplicities, types, usage environments, substitutions.

The object language is a lambda calculus whose function arrows carry a
*multiplicity*: ``a ->[1] b`` consumes its argument exactly once, ``a ->[w] b``
imposes no restriction.  Multiplicities form the two-point lattice 1 < w with
multiplication given by least upper bound (1 is the unit, w is absorbing), so
products of multiplicity atoms are idempotent, commutative and associative and
can be kept in a canonical sorted, deduplicated form.

Type schemes quantify over both multiplicity and type variables and carry a
context of inequality predicates between multiplicity products, e.g.

    forall p q a b. (p <= q) => (a ->[p] b) ->[w] List a ->[q] List b

Inference manipulates two flavours of variable: *rigid* variables stand for
scheme binders (and skolems of checked signatures) and are never solved;
*unification* variables are placeholders introduced during inference.  Each
unification variable records the nesting level of the implication under which
it was created; a variable may only be solved by the solver run for its own
level ("touchable"), which is what keeps local assumptions from leaking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Optional, Union


# ---------------------------------------------------------------------------
# Multiplicities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mult:
    """Base class for multiplicity atoms."""

    def key(self) -> tuple:
        raise NotImplementedError


@dataclass(frozen=True)
class MultLit(Mult):
    many: bool

    def key(self) -> tuple:
        return (1 if self.many else 0, "")

    def __repr__(self) -> str:
        return "w" if self.many else "1"


ONE = MultLit(False)
OMEGA = MultLit(True)


@dataclass(frozen=True)
class MultVar(Mult):
    """Rigid multiplicity variable (scheme binder or skolem)."""

    name: str

    def key(self) -> tuple:
        return (2, self.name)

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MultUVar(Mult):
    """Multiplicity unification variable."""

    uid: int
    level: int

    def key(self) -> tuple:
        return (3, self.uid)

    def __repr__(self) -> str:
        return f"'m{self.uid}"


@dataclass(frozen=True)
class Product:
    """Canonical product of multiplicity atoms.

    The empty product is 1; a product containing w collapses to w alone.
    Construct via :func:`product`, which establishes the canonical form.
    """

    atoms: tuple[Mult, ...]

    def is_one(self) -> bool:
        return not self.atoms

    def is_omega(self) -> bool:
        return self.atoms == (OMEGA,)

    def is_atom(self) -> bool:
        return len(self.atoms) <= 1

    def as_atom(self) -> Mult:
        if not self.atoms:
            return ONE
        if len(self.atoms) == 1:
            return self.atoms[0]
        raise ValueError(f"product {self!r} is not a single atom")

    def __repr__(self) -> str:
        if not self.atoms:
            return "1"
        return " * ".join(repr(a) for a in self.atoms)


def product(factors: Iterable[Union[Mult, Product]]) -> Product:
    """Multiply atoms and products into canonical form."""
    atoms: set[Mult] = set()
    for f in factors:
        if isinstance(f, Product):
            atoms.update(f.atoms)
        else:
            atoms.add(f)
    if OMEGA in atoms:
        return Product((OMEGA,))
    atoms.discard(ONE)
    return Product(tuple(sorted(atoms, key=lambda a: a.key())))


PRODUCT_ONE = product(())
PRODUCT_OMEGA = product((OMEGA,))


@dataclass(frozen=True)
class Pred:
    """An inequality ``lhs <= rhs`` between multiplicity products."""

    lhs: Product
    rhs: Product

    def key(self) -> tuple:
        return (tuple(a.key() for a in self.lhs.atoms),
                tuple(a.key() for a in self.rhs.atoms))

    def __repr__(self) -> str:
        return f"{self.lhs!r} <= {self.rhs!r}"


def pred(lhs: Union[Mult, Product], rhs: Union[Mult, Product]) -> Pred:
    if isinstance(lhs, Mult):
        lhs = product((lhs,))
    if isinstance(rhs, Mult):
        rhs = product((rhs,))
    return Pred(lhs, rhs)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Type:
    """Base class for monotypes."""


@dataclass(frozen=True)
class TyVar(Type):
    """Rigid type variable."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TyUVar(Type):
    """Type unification variable."""

    uid: int
    level: int

    def __repr__(self) -> str:
        return f"'t{self.uid}"


@dataclass(frozen=True)
class TyData(Type):
    """Saturated datatype application ``D m1 .. mk t1 .. tn``."""

    name: str
    mults: tuple[Mult, ...]
    args: tuple[Type, ...]

    def __repr__(self) -> str:
        parts = [self.name] + [repr(m) for m in self.mults] + [repr(a) for a in self.args]
        return " ".join(parts)


@dataclass(frozen=True)
class TyFun(Type):
    """Function type ``dom ->[mult] cod``; the annotation is a single atom."""

    dom: Type
    mult: Mult
    cod: Type

    def __repr__(self) -> str:
        return f"({self.dom!r} ->[{self.mult!r}] {self.cod!r})"


@dataclass(frozen=True)
class Scheme:
    """Qualified polytype: forall mult and type binders, context => body.

    Top-level schemes are closed (the parser rejects unbound signature
    variables and generalization binds what it finds), but a scheme is also
    how a plain monotype enters an environment, and a monotype may freely
    mention rigid variables bound further out.  Binder order is whatever the
    producer chose; the pretty printer canonicalizes names and order.
    """

    mult_binders: tuple[str, ...]
    ty_binders: tuple[str, ...]
    context: tuple[Pred, ...]
    body: Type

    def is_mono(self) -> bool:
        return not self.mult_binders and not self.ty_binders and not self.context


def mono(ty: Type) -> Scheme:
    """Wrap a monotype as a trivial scheme."""
    return Scheme((), (), (), ty)


# ---------------------------------------------------------------------------
# Usage environments
# ---------------------------------------------------------------------------

# A usage environment maps variable names to the multiplicity product with
# which the expression uses them.  Absent variables are unused (multiplicity
# zero); a zero entry is never stored explicitly.

Usage = dict[str, Product]


def add_usage(d1: Mapping[str, Product], d2: Mapping[str, Product]) -> Usage:
    """Sequential combination: anything used by both sides is used many times."""
    out: Usage = dict(d1)
    for x, m in d2.items():
        out[x] = PRODUCT_OMEGA if x in out else m
    return out


def scale_usage(m: Union[Mult, Product], d: Mapping[str, Product]) -> Usage:
    """Scale every entry by ``m`` (usage under a context applied m times)."""
    if isinstance(m, Mult):
        m = product((m,))
    return {x: product((m, v)) for x, v in d.items()}


def lub_usage(d1: Mapping[str, Product], d2: Mapping[str, Product]) -> Usage:
    """Branch combination: shared entries multiply, one-sided entries become w.

    A variable used in only one branch has usages 0 and m whose least upper
    bound is w (zero is below w but not below 1), hence the one-sided case.
    """
    out: Usage = {}
    for x in set(d1) | set(d2):
        if x in d1 and x in d2:
            out[x] = product((d1[x], d2[x]))
        else:
            out[x] = PRODUCT_OMEGA
    return out


# ---------------------------------------------------------------------------
# Free variables
# ---------------------------------------------------------------------------


def _walk_mults(obj) -> Iterator[Mult]:
    """Yield every multiplicity atom in ``obj`` in left-to-right order."""
    match obj:
        case Mult():
            yield obj
        case Product(atoms):
            yield from atoms
        case Pred(lhs, rhs):
            yield from lhs.atoms
            yield from rhs.atoms
        case TyVar() | TyUVar():
            return
        case TyData(_, mults, args):
            yield from mults
            for a in args:
                yield from _walk_mults(a)
        case TyFun(dom, mult, cod):
            yield from _walk_mults(dom)
            yield mult
            yield from _walk_mults(cod)
        case Scheme(_, _, context, body):
            for p in context:
                yield from _walk_mults(p)
            yield from _walk_mults(body)
        case dict():
            for v in obj.values():
                yield from _walk_mults(v)
        case list() | tuple():
            for item in obj:
                yield from _walk_mults(item)
        case _:
            raise TypeError(f"cannot walk multiplicities of {obj!r}")


def _walk_types(obj) -> Iterator[Type]:
    match obj:
        case TyVar() | TyUVar():
            yield obj
        case TyData(_, _, args):
            for a in args:
                yield from _walk_types(a)
        case TyFun(dom, _, cod):
            yield from _walk_types(dom)
            yield from _walk_types(cod)
        case Mult() | Product() | Pred():
            return
        case Scheme(_, _, _, body):
            yield from _walk_types(body)
        case dict():
            for v in obj.values():
                yield from _walk_types(v)
        case list() | tuple():
            for item in obj:
                yield from _walk_types(item)
        case _:
            raise TypeError(f"cannot walk types of {obj!r}")


def _dedup(seq: Iterable) -> list:
    seen = set()
    out = []
    for item in seq:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def free_mult_uvars(obj) -> list[MultUVar]:
    """Multiplicity unification variables in first-occurrence order."""
    return _dedup(m for m in _walk_mults(obj) if isinstance(m, MultUVar))


def free_ty_uvars(obj) -> list[TyUVar]:
    """Type unification variables in first-occurrence order."""
    return _dedup(t for t in _walk_types(obj) if isinstance(t, TyUVar))


def free_rigid_mult_vars(obj) -> list[MultVar]:
    return _dedup(m for m in _walk_mults(obj) if isinstance(m, MultVar))


def free_rigid_ty_vars(obj) -> list[TyVar]:
    return _dedup(t for t in _walk_types(obj) if isinstance(t, TyVar))


# ---------------------------------------------------------------------------
# Substitutions
# ---------------------------------------------------------------------------


@dataclass
class Subst:
    """Substitution over unification variables.

    Multiplicity images are single atoms (never products), so applying a
    substitution to a function arrow keeps the annotation a single atom.
    Extension is constant-time; application chases chains of bindings and
    compresses the path behind it, so every application still zonks fully.
    The occurs check keeps the binding graph acyclic, which is what makes
    the chase terminate.
    """

    ty: dict[int, Type] = field(default_factory=dict)
    mult: dict[int, Mult] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not self.ty and not self.mult

    # -- extension ---------------------------------------------------------

    def bind_ty(self, var: TyUVar, ty: Type) -> None:
        if var.uid in self.ty:
            raise ValueError(f"variable {var!r} already solved")
        self.ty[var.uid] = ty

    def bind_mult(self, var: MultUVar, m: Mult) -> None:
        if var.uid in self.mult:
            raise ValueError(f"variable {var!r} already solved")
        self.mult[var.uid] = m

    # -- application -------------------------------------------------------

    def apply_mult(self, m: Mult) -> Mult:
        while isinstance(m, MultUVar):
            image = self.mult.get(m.uid)
            if image is None:
                return m
            m = image
        return m

    def apply_product(self, p: Product) -> Product:
        return product(self.apply_mult(a) for a in p.atoms)

    def apply_pred(self, p: Pred) -> Pred:
        return Pred(self.apply_product(p.lhs), self.apply_product(p.rhs))

    def apply_type(self, t: Type) -> Type:
        match t:
            case TyUVar(uid, _):
                image = self.ty.get(uid)
                if image is None:
                    return t
                resolved = self.apply_type(image)
                if resolved is not image:
                    self.ty[uid] = resolved
                return resolved
            case TyVar():
                return t
            case TyData(name, mults, args):
                new_mults = tuple(self.apply_mult(m) for m in mults)
                new_args = tuple(self.apply_type(a) for a in args)
                if (all(n is o for n, o in zip(new_mults, mults))
                        and all(n is o for n, o in zip(new_args, args))):
                    return t
                return TyData(name, new_mults, new_args)
            case TyFun(dom, mult, cod):
                new_dom = self.apply_type(dom)
                new_mult = self.apply_mult(mult)
                new_cod = self.apply_type(cod)
                if new_dom is dom and new_mult is mult and new_cod is cod:
                    return t
                return TyFun(new_dom, new_mult, new_cod)
        raise TypeError(f"cannot substitute in {t!r}")

    def apply_usage(self, d: Mapping[str, Product]) -> Usage:
        return {x: self.apply_product(v) for x, v in d.items()}


# ---------------------------------------------------------------------------
# Fresh variable supply and instantiation
# ---------------------------------------------------------------------------


class Supply:
    """Deterministic source of unification variables.

    A single counter serves both sorts, so creation order is totally ordered
    across multiplicity and type variables; the disambiguation step and the
    pretty printer rely on that order for reproducible output.
    """

    def __init__(self) -> None:
        self._counter = itertools.count()
        self._skolem_counter = itertools.count(1)

    def fresh_mult(self, level: int) -> MultUVar:
        return MultUVar(next(self._counter), level)

    def fresh_ty(self, level: int) -> TyUVar:
        return TyUVar(next(self._counter), level)

    def skolemize(self, scheme: Scheme) -> tuple[dict[str, MultVar], dict[str, TyVar], tuple[Pred, ...], Type]:
        """Freshen a scheme's binders into rigid skolems.

        Returns the renamings plus the instantiated context and body.  Fresh
        names carry a ``#n`` suffix so nested signatures reusing a binder name
        cannot be confused; the pretty printer strips the suffix when it is
        unambiguous.
        """
        n = next(self._skolem_counter)
        mmap = {name: MultVar(f"{name}#{n}") for name in scheme.mult_binders}
        tmap = {name: TyVar(f"{name}#{n}") for name in scheme.ty_binders}
        ctx = tuple(_rename_pred(p, mmap) for p in scheme.context)
        body = rename_rigid(scheme.body, mmap, tmap)
        return mmap, tmap, ctx, body

    def instantiate(self, scheme: Scheme, level: int) -> tuple[tuple[MultUVar, ...], tuple[TyUVar, ...], tuple[Pred, ...], Type]:
        """Replace a scheme's binders with fresh unification variables."""
        mvars = tuple(self.fresh_mult(level) for _ in scheme.mult_binders)
        tvars = tuple(self.fresh_ty(level) for _ in scheme.ty_binders)
        mmap = dict(zip(scheme.mult_binders, mvars))
        tmap = dict(zip(scheme.ty_binders, tvars))
        ctx = tuple(_rename_pred(p, mmap) for p in scheme.context)
        body = rename_rigid(scheme.body, mmap, tmap)
        return mvars, tvars, ctx, body


def _rename_mult(m: Mult, mmap: Mapping[str, Mult]) -> Mult:
    if isinstance(m, MultVar) and m.name in mmap:
        return mmap[m.name]
    return m


def _rename_pred(p: Pred, mmap: Mapping[str, Mult]) -> Pred:
    return Pred(product(_rename_mult(a, mmap) for a in p.lhs.atoms),
                product(_rename_mult(a, mmap) for a in p.rhs.atoms))


def rename_rigid(t: Type, mmap: Mapping[str, Mult], tmap: Mapping[str, Type]) -> Type:
    """Substitute rigid variables by name (used for instantiation/skolemization)."""
    match t:
        case TyVar(name):
            return tmap.get(name, t)
        case TyUVar():
            return t
        case TyData(name, mults, args):
            return TyData(name,
                          tuple(_rename_mult(m, mmap) for m in mults),
                          tuple(rename_rigid(a, mmap, tmap) for a in args))
        case TyFun(dom, mult, cod):
            return TyFun(rename_rigid(dom, mmap, tmap), _rename_mult(mult, mmap),
                         rename_rigid(cod, mmap, tmap))
    raise TypeError(f"cannot rename in {t!r}")

"""Surface syntax: lexer, parser, and the canonical pretty printer.

Source files (`.lin`) contain datatype declarations and top-level bindings:

    data List a where { Nil : List a; Cons : a -o List a -o List a }

    map f xs = case xs of { Nil -> Nil; Cons y ys -> Cons (f y) (map f ys) }

    dup : forall a. a ->[w] Pair a a = \\x -> Pair x x

Arrows are written ``->[m]`` with a single multiplicity atom (a variable,
``1`` or ``w``); ``-o`` abbreviates ``->[1]`` and a bare ``->`` abbreviates
``->[w]``.  Signatures may quantify explicitly (``forall p a.``) or leave
quantification implicit; a parenthesized context ``(p <= q, ...) =>`` states
multiplicity inequalities, with ``*`` for products.  ``--`` starts a line
comment.

Bindings come in two forms: equations ``name arg .. = expr`` (sugar for
nested lambdas) and annotated ``name : SIG = expr``.  ``let x = e1 in e2``
desugars to ``(\\x -> e2) e1``; ``let x : SIG = e1 in e2`` is the annotated
(generalizing) let.  Constructors are saturated in the AST: an under-applied
constructor is eta-expanded at parse time.

Layout is minimal: every top-level item starts in column 1 and continuation
lines are indented, which is how an application knows not to swallow the
next binding.

Whether a lowercase name in a datatype application such as ``Many p a`` is a
multiplicity or a type cannot be decided token-by-token, so types are first
parsed into a raw tree and then resolved against the declared
multiplicity/type arities.  Datatype parameters get their sorts from how the
constructor fields use them (arrow-annotation position means multiplicity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import (Mult, MultLit, MultUVar, MultVar, ONE, OMEGA, Pred, Product,
                   Scheme, TyData, TyFun, Type, TyUVar, TyVar,
                   free_rigid_mult_vars, free_rigid_ty_vars, product,
                   rename_rigid, _rename_pred)
from .diagnostics import ParseError, Span

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

KEYWORDS = frozenset({"forall", "data", "where", "case", "of", "let", "in"})

# Maximal munch, so longer symbols come first.
SYMBOLS = ["->[", "->", "-o", "=>", "<=", "=", ":", ";", ",", ".", "(", ")",
           "{", "}", "]", "*", "\\"]


@dataclass(frozen=True)
class Token:
    kind: str   # 'lident' | 'uident' | 'int' | 'eof' | keyword | symbol
    text: str
    span: Span


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        span = Span(line, col)
        if c.isalpha():
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            kind = word if word in KEYWORDS else ("uident" if word[0].isupper() else "lident")
            tokens.append(Token(kind, word, span))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], span))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(sym, sym, span))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", span)
    tokens.append(Token("eof", "", Span(line, col)))
    return tokens


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Expr:
    """Base class for expressions."""

    span: Span


@dataclass
class EVar(Expr):
    span: Span
    name: str


@dataclass
class ELam(Expr):
    span: Span
    param: str
    body: Expr


@dataclass
class EApp(Expr):
    span: Span
    fn: Expr
    arg: Expr


@dataclass
class ECon(Expr):
    """Saturated constructor application."""

    span: Span
    name: str
    args: tuple[Expr, ...]


@dataclass
class Alt:
    span: Span
    con: str
    binders: tuple[str, ...]
    body: Expr


@dataclass
class ECase(Expr):
    span: Span
    scrut: Expr
    alts: tuple[Alt, ...]


@dataclass
class ELet(Expr):
    """Annotated, generalizing let."""

    span: Span
    name: str
    scheme: Scheme
    rhs: Expr
    body: Expr


@dataclass
class ConDecl:
    span: Span
    name: str
    field_mults: tuple[Mult, ...]
    field_types: tuple[Type, ...]


@dataclass
class DataDecl:
    span: Span
    name: str
    mult_params: tuple[str, ...]
    ty_params: tuple[str, ...]
    constructors: tuple[ConDecl, ...]


@dataclass
class Binding:
    span: Span
    name: str
    scheme: Optional[Scheme]
    expr: Expr


@dataclass
class Program:
    decls: list[Union[DataDecl, Binding]]

    def bindings(self) -> list[Binding]:
        return [d for d in self.decls if isinstance(d, Binding)]

    def data_decls(self) -> list[DataDecl]:
        return [d for d in self.decls if isinstance(d, DataDecl)]


def free_expr_vars(e: Expr) -> set[str]:
    match e:
        case EVar(_, name):
            return {name}
        case ELam(_, param, body):
            return free_expr_vars(body) - {param}
        case EApp(_, fn, arg):
            return free_expr_vars(fn) | free_expr_vars(arg)
        case ECon(_, _, args):
            out: set[str] = set()
            for a in args:
                out |= free_expr_vars(a)
            return out
        case ECase(_, scrut, alts):
            out = free_expr_vars(scrut)
            for alt in alts:
                out |= free_expr_vars(alt.body) - set(alt.binders)
            return out
        case ELet(_, name, _, rhs, body):
            return free_expr_vars(rhs) | (free_expr_vars(body) - {name})
    raise TypeError(f"unknown expression {e!r}")


# ---------------------------------------------------------------------------
# Raw types (pre sort-resolution)
# ---------------------------------------------------------------------------


@dataclass
class RName:
    span: Span
    name: str


@dataclass
class RLit:
    span: Span
    many: bool


@dataclass
class RCon:
    span: Span
    name: str
    args: list["RawT"]


@dataclass
class RFun:
    span: Span
    dom: "RawT"
    mult: Union[RName, RLit]
    cod: "RawT"


RawT = Union[RName, RLit, RCon, RFun]

MULT_SORT = "multiplicity"
TYPE_SORT = "type"


class SortMap:
    """Tracks the inferred sort of each lowercase name in a signature."""

    def __init__(self, binders: Optional[Sequence[str]] = None) -> None:
        self.explicit = binders is not None
        self.sorts: dict[str, Optional[str]] = {}
        self.order: list[str] = []
        if binders is not None:
            for b in binders:
                self.sorts[b] = None
                self.order.append(b)

    def mark(self, name: str, sort: str, span: Span) -> None:
        if name not in self.sorts:
            if self.explicit:
                raise ParseError(f"variable '{name}' is not bound by the forall", span)
            self.sorts[name] = sort
            self.order.append(name)
            return
        current = self.sorts[name]
        if current is None:
            self.sorts[name] = sort
        elif current != sort:
            raise ParseError(
                f"variable '{name}' is used both as a {current} and as a {sort}", span)

    def partitioned(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Binders split by sort, in first-use order; unused default to type."""
        mults = tuple(n for n in self.order if self.sorts[n] == MULT_SORT)
        tys = tuple(n for n in self.order if self.sorts[n] != MULT_SORT)
        return mults, tys


class TypeResolver:
    """Resolves raw trees to core types against declared datatype arities."""

    def __init__(self, data_table: Mapping[str, tuple[int, int]], sorts: SortMap) -> None:
        self.data_table = data_table
        self.sorts = sorts

    def type_of(self, raw: RawT) -> Type:
        match raw:
            case RName(span, name):
                if name == "w":
                    raise ParseError("'w' is the unrestricted multiplicity, not a type", span)
                self.sorts.mark(name, TYPE_SORT, span)
                return TyVar(name)
            case RLit(span, _):
                raise ParseError("multiplicity literal used where a type is expected", span)
            case RCon(span, name, args):
                if name not in self.data_table:
                    raise ParseError(f"unknown type constructor '{name}'", span)
                n_mults, n_tys = self.data_table[name]
                if len(args) != n_mults + n_tys:
                    raise ParseError(
                        f"'{name}' expects {n_mults + n_tys} arguments, got {len(args)}", span)
                mults = tuple(self.mult_of(a) for a in args[:n_mults])
                tys = tuple(self.type_of(a) for a in args[n_mults:])
                return TyData(name, mults, tys)
            case RFun(_, dom, mult, cod):
                return TyFun(self.type_of(dom), self.mult_of(mult), self.type_of(cod))
        raise TypeError(f"unknown raw type {raw!r}")

    def mult_of(self, raw: RawT) -> Mult:
        match raw:
            case RLit(_, many):
                return OMEGA if many else ONE
            case RName(span, name):
                if name == "w":
                    return OMEGA
                self.sorts.mark(name, MULT_SORT, span)
                return MultVar(name)
            case RCon(span, _, _) | RFun(span, _, _, _):
                raise ParseError("expected a multiplicity (a variable, 1 or w)", span)
        raise TypeError(f"unknown raw type {raw!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class Parser:
    def __init__(self, source: str,
                 data_table: Optional[dict[str, tuple[int, int]]] = None,
                 con_arity: Optional[dict[str, int]] = None) -> None:
        self.tokens = tokenize(source)
        self.pos = 0
        # name -> (multiplicity arity, type arity), in declaration order
        self.data_table: dict[str, tuple[int, int]] = dict(data_table or {})
        self.con_arity: dict[str, int] = dict(con_arity or {})
        self._eta_counter = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            want = what or f"'{kind}'"
            found = f"'{tok.text}'" if tok.text else "end of input"
            raise ParseError(f"expected {want}, found {found}", tok.span)
        return self.advance()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    # -- programs -------------------------------------------------------------

    def parse_program(self) -> Program:
        decls: list[Union[DataDecl, Binding]] = []
        bound: set[str] = set()
        while not self.at("eof"):
            if self.at("data"):
                decls.append(self.parse_data_decl())
            elif self.at("lident"):
                b = self.parse_binding()
                if b.name in bound:
                    raise ParseError(f"duplicate definition of '{b.name}'", b.span)
                bound.add(b.name)
                decls.append(b)
            else:
                tok = self.peek()
                raise ParseError(
                    f"expected a data declaration or a binding, found '{tok.text}'", tok.span)
        return Program(decls)

    def parse_binding(self) -> Binding:
        name_tok = self.expect("lident", "a binding name")
        if self.at(":"):
            self.advance()
            scheme = self.parse_scheme()
            self.expect("=")
            expr = self.parse_expr()
            return Binding(name_tok.span, name_tok.text, scheme, expr)
        params = []
        while self.at("lident"):
            params.append(self.advance())
        self.expect("=")
        expr = self.parse_expr()
        for p in reversed(params):
            expr = ELam(p.span, p.text, expr)
        return Binding(name_tok.span, name_tok.text, None, expr)

    # -- data declarations ----------------------------------------------------

    def parse_data_decl(self) -> DataDecl:
        start = self.expect("data")
        name_tok = self.expect("uident", "a datatype name")
        name = name_tok.text
        if name in self.data_table:
            raise ParseError(f"duplicate datatype '{name}'", name_tok.span)
        params: list[str] = []
        while self.at("lident"):
            p = self.advance()
            if p.text in params:
                raise ParseError(f"duplicate parameter '{p.text}'", p.span)
            if p.text == "w":
                raise ParseError("'w' is reserved for the unrestricted multiplicity", p.span)
            params.append(p.text)
        self.expect("where")
        self.expect("{")
        raw_cons: list[tuple[Token, RawT]] = []
        while True:
            con_tok = self.expect("uident", "a constructor name")
            self.expect(":")
            raw_cons.append((con_tok, self.parse_raw_type()))
            if self.at(";"):
                self.advance()
                if self.at("}"):
                    break
                continue
            break
        self.expect("}")
        decl = self._resolve_data_decl(start.span, name, params, raw_cons)
        self.data_table[name] = (len(decl.mult_params), len(decl.ty_params))
        for con in decl.constructors:
            if con.name in self.con_arity:
                raise ParseError(f"duplicate constructor '{con.name}'", con.span)
            self.con_arity[con.name] = len(con.field_types)
        return decl

    def _resolve_data_decl(self, span: Span, name: str, params: list[str],
                           raw_cons: list[tuple[Token, RawT]]) -> DataDecl:
        # Pass 1: infer each parameter's sort from how the fields use it.
        sorts = SortMap(params)
        for _, raw in raw_cons:
            self._mark_data_sorts(raw, name, params, sorts)
        mult_params, ty_params = sorts.partitioned()
        # The internal representation applies multiplicity arguments first,
        # so the header must list them first.
        ordered = list(mult_params) + list(ty_params)
        if ordered != params:
            raise ParseError(
                f"multiplicity parameters must precede type parameters "
                f"(expected order: {' '.join(ordered)})", span)
        self.data_table[name] = (len(mult_params), len(ty_params))
        try:
            # Pass 2: resolve the constructor signatures fully.
            cons: list[ConDecl] = []
            expected_result = TyData(name,
                                     tuple(MultVar(p) for p in mult_params),
                                     tuple(TyVar(a) for a in ty_params))
            for con_tok, raw in raw_cons:
                resolver = TypeResolver(self.data_table, SortMap(params))
                field_mults: list[Mult] = []
                field_types: list[Type] = []
                node = raw
                while isinstance(node, RFun):
                    field_types.append(resolver.type_of(node.dom))
                    field_mults.append(resolver.mult_of(node.mult))
                    node = node.cod
                result = resolver.type_of(node)
                if result != expected_result:
                    raise ParseError(
                        f"constructor '{con_tok.text}' must return "
                        f"{name} {' '.join(params)}".rstrip(), node.span)
                cons.append(ConDecl(con_tok.span, con_tok.text,
                                    tuple(field_mults), tuple(field_types)))
        finally:
            del self.data_table[name]
        return DataDecl(span, name, mult_params, ty_params, tuple(cons))

    def _mark_data_sorts(self, raw: RawT, current: str, params: list[str],
                         sorts: SortMap) -> None:
        match raw:
            case RName(span, n):
                if n != "w":
                    sorts.mark(n, TYPE_SORT, span)
            case RLit():
                pass
            case RFun(_, dom, mult, cod):
                if isinstance(mult, RName) and mult.name != "w":
                    sorts.mark(mult.name, MULT_SORT, mult.span)
                self._mark_data_sorts(dom, current, params, sorts)
                self._mark_data_sorts(cod, current, params, sorts)
            case RCon(span, n, args):
                if n == current:
                    # Recursive occurrences must repeat the header parameters,
                    # so they carry no sort information of their own.
                    arg_names = [a.name if isinstance(a, RName) else None for a in args]
                    if arg_names != list(params):
                        raise ParseError(
                            f"recursive use of '{current}' must be applied to "
                            f"exactly its parameters ({' '.join(params) or 'none'})", span)
                    return
                if n not in self.data_table:
                    raise ParseError(f"unknown type constructor '{n}' "
                                     f"(datatypes must be declared before use)", span)
                n_mults, n_tys = self.data_table[n]
                if len(args) != n_mults + n_tys:
                    raise ParseError(
                        f"'{n}' expects {n_mults + n_tys} arguments, got {len(args)}", span)
                for a in args[:n_mults]:
                    if isinstance(a, RName) and a.name != "w":
                        sorts.mark(a.name, MULT_SORT, a.span)
                for a in args[n_mults:]:
                    self._mark_data_sorts(a, current, params, sorts)

    # -- types ----------------------------------------------------------------

    def parse_scheme(self) -> Scheme:
        binders: Optional[list[str]] = None
        if self.at("forall"):
            self.advance()
            binders = []
            while self.at("lident"):
                tok = self.advance()
                if tok.text in binders:
                    raise ParseError(f"duplicate binder '{tok.text}'", tok.span)
                if tok.text == "w":
                    raise ParseError("'w' is reserved for the unrestricted multiplicity", tok.span)
                binders.append(tok.text)
            self.expect(".")
        sorts = SortMap(binders)
        context: tuple[Pred, ...] = ()
        if self._context_ahead():
            context = self.parse_context(sorts)
            self.expect("=>")
        raw = self.parse_raw_type()
        body = TypeResolver(self.data_table, sorts).type_of(raw)
        mult_binders, ty_binders = sorts.partitioned()
        return Scheme(mult_binders, ty_binders, context, body)

    def _context_ahead(self) -> bool:
        """Is the upcoming '(' a context, i.e. followed by '=>' after it closes?"""
        if not self.at("("):
            return False
        depth = 0
        i = self.pos
        while i < len(self.tokens):
            kind = self.tokens[i].kind
            if kind == "(":
                depth += 1
            elif kind == ")":
                depth -= 1
                if depth == 0:
                    return self.tokens[i + 1].kind == "=>"
            elif kind == "eof":
                return False
            i += 1
        return False

    def parse_context(self, sorts: SortMap) -> tuple[Pred, ...]:
        self.expect("(")
        preds = [self.parse_pred(sorts)]
        while self.at(","):
            self.advance()
            preds.append(self.parse_pred(sorts))
        self.expect(")")
        return tuple(preds)

    def parse_pred(self, sorts: SortMap) -> Pred:
        lhs = self.parse_mult_product(sorts)
        self.expect("<=")
        rhs = self.parse_mult_product(sorts)
        return Pred(lhs, rhs)

    def parse_mult_product(self, sorts: SortMap) -> Product:
        atoms = [self.parse_mult_atom(sorts)]
        while self.at("*"):
            self.advance()
            atoms.append(self.parse_mult_atom(sorts))
        return product(atoms)

    def parse_mult_atom(self, sorts: SortMap) -> Mult:
        tok = self.peek()
        if tok.kind == "int" and tok.text == "1":
            self.advance()
            return ONE
        if tok.kind == "lident":
            self.advance()
            if tok.text == "w":
                return OMEGA
            sorts.mark(tok.text, MULT_SORT, tok.span)
            return MultVar(tok.text)
        raise ParseError("expected a multiplicity (a variable, 1 or w)", tok.span)

    def parse_raw_type(self) -> RawT:
        dom = self.parse_raw_btype()
        tok = self.peek()
        if tok.kind == "->[":
            self.advance()
            mult = self.parse_raw_mult_atom()
            if self.at("*"):
                raise ParseError("arrow annotations must be a single multiplicity, not a product",
                                 self.peek().span)
            self.expect("]")
            return RFun(tok.span, dom, mult, self.parse_raw_type())
        if tok.kind == "-o":
            self.advance()
            return RFun(tok.span, dom, RLit(tok.span, False), self.parse_raw_type())
        if tok.kind == "->":
            self.advance()
            return RFun(tok.span, dom, RLit(tok.span, True), self.parse_raw_type())
        return dom

    def parse_raw_mult_atom(self) -> Union[RName, RLit]:
        tok = self.peek()
        if tok.kind == "int" and tok.text == "1":
            self.advance()
            return RLit(tok.span, False)
        if tok.kind == "lident":
            self.advance()
            if tok.text == "w":
                return RLit(tok.span, True)
            return RName(tok.span, tok.text)
        raise ParseError("expected a multiplicity (a variable, 1 or w)", tok.span)

    def parse_raw_btype(self) -> RawT:
        tok = self.peek()
        if tok.kind == "uident":
            self.advance()
            args = []
            while self._at_ty_atom():
                args.append(self.parse_raw_atype())
            return RCon(tok.span, tok.text, args)
        return self.parse_raw_atype()

    def _at_ty_atom(self) -> bool:
        # Same layout convention as expression application: a token in
        # column 1 starts the next top-level item, never a type argument.
        tok = self.peek()
        return tok.kind in ("lident", "uident", "int", "(") and tok.span.col > 1

    def parse_raw_atype(self) -> RawT:
        tok = self.peek()
        if tok.kind == "lident":
            self.advance()
            return RName(tok.span, tok.text)
        if tok.kind == "int" and tok.text == "1":
            self.advance()
            return RLit(tok.span, False)
        if tok.kind == "uident":
            self.advance()
            return RCon(tok.span, tok.text, [])
        if tok.kind == "(":
            self.advance()
            inner = self.parse_raw_type()
            self.expect(")")
            return inner
        raise ParseError(f"expected a type, found '{tok.text}'", tok.span)

    # -- expressions ------------------------------------------------------------

    def parse_expr(self) -> Expr:
        tok = self.peek()
        if tok.kind == "\\":
            self.advance()
            params = [self.expect("lident", "a parameter name")]
            while self.at("lident"):
                params.append(self.advance())
            self.expect("->")
            body = self.parse_expr()
            for p in reversed(params):
                body = ELam(p.span, p.text, body)
            return body
        if tok.kind == "let":
            self.advance()
            name_tok = self.expect("lident", "a variable name")
            if self.at(":"):
                self.advance()
                scheme = self.parse_scheme()
                self.expect("=")
                rhs = self.parse_expr()
                self.expect("in")
                body = self.parse_expr()
                return ELet(tok.span, name_tok.text, scheme, rhs, body)
            self.expect("=")
            rhs = self.parse_expr()
            self.expect("in")
            body = self.parse_expr()
            # Unannotated let is monomorphic: immediately-applied lambda.
            return EApp(tok.span, ELam(name_tok.span, name_tok.text, body), rhs)
        if tok.kind == "case":
            self.advance()
            scrut = self.parse_expr()
            self.expect("of")
            self.expect("{")
            alts = [self.parse_alt()]
            while self.at(";"):
                self.advance()
                if self.at("}"):
                    break
                alts.append(self.parse_alt())
            self.expect("}")
            return ECase(tok.span, scrut, tuple(alts))
        return self.parse_app()

    def parse_alt(self) -> Alt:
        con_tok = self.expect("uident", "a constructor pattern")
        if con_tok.text not in self.con_arity:
            raise ParseError(f"unknown constructor '{con_tok.text}'", con_tok.span)
        binders: list[str] = []
        while self.at("lident"):
            b = self.advance()
            if b.text in binders:
                raise ParseError(f"duplicate pattern binder '{b.text}'", b.span)
            binders.append(b.text)
        arity = self.con_arity[con_tok.text]
        if len(binders) != arity:
            raise ParseError(
                f"constructor '{con_tok.text}' has {arity} field(s) "
                f"but the pattern binds {len(binders)}", con_tok.span)
        self.expect("->")
        body = self.parse_expr()
        return Alt(con_tok.span, con_tok.text, tuple(binders), body)

    def parse_app(self) -> Expr:
        head_tok = self.peek()
        if head_tok.kind == "uident":
            # Constructor in head position absorbs its arguments.
            self.advance()
            arity = self._con_arity(head_tok)
            args: list[Expr] = []
            while len(args) < arity and self._at_atom():
                args.append(self.parse_atom())
            expr = self._saturate(head_tok, args)
            while self._at_atom():
                expr = EApp(self.peek().span, expr, self.parse_atom())
            return expr
        expr = self.parse_atom()
        while self._at_atom():
            expr = EApp(self.peek().span, expr, self.parse_atom())
        return expr

    def _at_atom(self) -> bool:
        # A token in column 1 starts the next top-level item, never an
        # application argument; continuation lines must be indented.
        tok = self.peek()
        return tok.kind in ("lident", "uident", "(") and tok.span.col > 1

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "lident":
            self.advance()
            return EVar(tok.span, tok.text)
        if tok.kind == "uident":
            self.advance()
            return self._saturate(tok, [])
        if tok.kind == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        raise ParseError(f"expected an expression, found '{tok.text}'", tok.span)

    def _con_arity(self, tok: Token) -> int:
        if tok.text not in self.con_arity:
            raise ParseError(f"unknown constructor '{tok.text}'", tok.span)
        return self.con_arity[tok.text]

    def _saturate(self, con_tok: Token, args: list[Expr]) -> Expr:
        """Build a saturated constructor node, eta-expanding missing arguments."""
        arity = self._con_arity(con_tok)
        missing = arity - len(args)
        if missing == 0:
            return ECon(con_tok.span, con_tok.text, tuple(args))
        fresh = []
        for _ in range(missing):
            self._eta_counter += 1
            fresh.append(f"_eta{self._eta_counter}")
        full = tuple(args) + tuple(EVar(con_tok.span, v) for v in fresh)
        expr: Expr = ECon(con_tok.span, con_tok.text, full)
        for v in reversed(fresh):
            expr = ELam(con_tok.span, v, expr)
        return expr


def parse_program(source: str) -> Program:
    return Parser(source).parse_program()


def parse_type(source: str, data: Union[Program, Mapping[str, tuple[int, int]], None] = None) -> Scheme:
    """Parse a standalone type signature.

    ``data`` supplies datatype arities, either as a parsed :class:`Program`
    or as a mapping ``name -> (multiplicity arity, type arity)``.
    """
    if isinstance(data, Program):
        table = {d.name: (len(d.mult_params), len(d.ty_params)) for d in data.data_decls()}
    else:
        table = dict(data or {})
    parser = Parser(source, data_table=table)
    scheme = parser.parse_scheme()
    parser.expect("eof", "end of the type")
    return scheme


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

_MULT_NAMES = ["p", "q", "r", "s", "t", "u"]
_TY_NAMES = ["a", "b", "c", "d", "e", "f"]


def canonicalize(scheme: Scheme) -> Scheme:
    """Rename binders to the canonical alphabet in first-occurrence order.

    Multiplicity binders become p, q, r, s, t, u, p1, p2, ...; type binders
    a, b, c, d, e, f, a1, ...  The body is scanned first, then the context in
    its stored order.  Context predicates are then sorted by their rendered
    form and deduplicated; binders that occur nowhere are dropped.
    """
    mult_order: list[str] = []
    ty_order: list[str] = []
    for v in free_rigid_mult_vars(scheme.body):
        if v.name in scheme.mult_binders and v.name not in mult_order:
            mult_order.append(v.name)
    for v in free_rigid_ty_vars(scheme.body):
        if v.name in scheme.ty_binders and v.name not in ty_order:
            ty_order.append(v.name)
    for p in scheme.context:
        for v in free_rigid_mult_vars(p):
            if v.name in scheme.mult_binders and v.name not in mult_order:
                mult_order.append(v.name)

    mmap = {old: MultVar(new) for old, new in zip(mult_order, _names(_MULT_NAMES))}
    tmap = {old: TyVar(new) for old, new in zip(ty_order, _names(_TY_NAMES))}

    body = rename_rigid(scheme.body, dict(mmap), tmap)
    context = tuple(_rename_pred(p, mmap) for p in scheme.context)
    rendered = sorted({show_pred(p) for p in context})
    context = tuple(_parse_back_pred(s) for s in rendered)
    return Scheme(tuple(v.name for v in mmap.values()),
                  tuple(v.name for v in tmap.values()),
                  context, body)


def _names(base: list[str]):
    yield from base
    i = 1
    while True:
        yield f"{base[0]}{i}"
        i += 1


def _parse_back_pred(rendered: str) -> Pred:
    lhs, rhs = rendered.split(" <= ")
    return Pred(_parse_back_product(lhs), _parse_back_product(rhs))


def _parse_back_product(rendered: str) -> Product:
    atoms: list[Mult] = []
    for part in rendered.split(" * "):
        if part == "1":
            atoms.append(ONE)
        elif part == "w":
            atoms.append(OMEGA)
        else:
            atoms.append(MultVar(part))
    return product(atoms)


def show_mult(m: Mult) -> str:
    match m:
        case MultLit(many):
            return "w" if many else "1"
        case MultVar(name):
            return name
        case MultUVar(uid, _):
            return f"'m{uid}"
    raise TypeError(f"unknown multiplicity {m!r}")


def show_product(p: Product) -> str:
    if not p.atoms:
        return "1"
    return " * ".join(show_mult(a) for a in p.atoms)


def show_pred(p) -> str:
    if hasattr(p, "to_pred"):
        p = p.to_pred()
    return f"{show_product(p.lhs)} <= {show_product(p.rhs)}"


def show_type(t: Type, atom: bool = False) -> str:
    match t:
        case TyVar(name):
            return name
        case TyUVar(uid, _):
            return f"'t{uid}"
        case TyData(name, mults, args):
            if not mults and not args:
                return name
            parts = [name]
            parts.extend(show_mult(m) for m in mults)
            parts.extend(show_type(a, atom=True) for a in args)
            s = " ".join(parts)
            return f"({s})" if atom else s
        case TyFun(dom, mult, cod):
            dom_s = show_type(dom, atom=False)
            if isinstance(dom, TyFun):
                dom_s = f"({dom_s})"
            s = f"{dom_s} ->[{show_mult(mult)}] {show_type(cod)}"
            return f"({s})" if atom else s
    raise TypeError(f"unknown type {t!r}")


def show_scheme(scheme: Scheme, canonical: bool = True) -> str:
    if canonical:
        scheme = canonicalize(scheme)
    parts = []
    binders = list(scheme.mult_binders) + list(scheme.ty_binders)
    if binders:
        parts.append(f"forall {' '.join(binders)}.")
    if scheme.context:
        rendered = ", ".join(show_pred(p) for p in scheme.context)
        parts.append(f"({rendered}) =>")
    parts.append(show_type(scheme.body))
    return " ".join(parts)

"""Typechecker and type inference for a small linear functional language.

Function arrows carry a multiplicity — ``a ->[1] b`` consumes its argument
exactly once, ``a ->[w] b`` without restriction — and inference produces
principal qualified schemes such as

    map : forall p q a b. (p <= q) => (a ->[p] b) ->[w] List a ->[q] List b

by generating equality and inequality constraints, solving entailment over
the two-point multiplicity lattice, and eliminating the multiplicity
variables the final type does not mention.

Typical use::

    from linfer import check_program, parse_program, show_scheme

    report = check_program(parse_program(source))
    for b in report.bindings:
        print(b.name, ":", show_scheme(b.scheme))
"""

from .core import (Mult, MultLit, MultUVar, MultVar, ONE, OMEGA, Pred,
                   Product, PRODUCT_ONE, PRODUCT_OMEGA, Scheme, Subst, Supply,
                   TyData, TyFun, TyUVar, TyVar, Type, add_usage, lub_usage,
                   mono, pred, product, scale_usage)
from .diagnostics import CheckError, Diagnostic, LinError, ParseError, Span
from .predicates import (NormalPred, OracleMismatch, eliminate, eliminate_all,
                         entails, entails_all, equivalent, is_satisfiable,
                         normalize, oracle_mode, set_oracle)
from .syntax import (Program, canonicalize, parse_program, parse_type,
                     show_pred, show_scheme, show_type)
from .gen import Wanted, build_con_env
from .solver import (OccursError, SignatureTooWeak, SolveResult,
                     TouchabilityError, UnificationError,
                     UnsatisfiableConstraints, simplify, solve)
from .checker import BindingReport, ProgramReport, check_program
from .replay import ReplayError, replay_binding, replay_program

__version__ = "0.1.0"

__all__ = [
    "BindingReport", "CheckError", "Diagnostic", "LinError", "Mult",
    "MultLit", "MultUVar", "MultVar", "NormalPred", "OccursError", "OMEGA",
    "ONE", "OracleMismatch", "ParseError", "Pred", "Product", "PRODUCT_OMEGA",
    "PRODUCT_ONE", "Program", "ProgramReport", "ReplayError", "Scheme",
    "SignatureTooWeak", "SolveResult", "Span", "Subst", "Supply",
    "TouchabilityError", "TyData", "TyFun", "TyUVar", "TyVar", "Type",
    "UnificationError", "UnsatisfiableConstraints", "Wanted", "add_usage",
    "build_con_env", "canonicalize", "check_program", "eliminate",
    "eliminate_all", "entails", "entails_all", "equivalent", "is_satisfiable",
    "lub_usage", "mono", "normalize", "oracle_mode", "parse_program",
    "parse_type", "pred", "product", "replay_binding", "replay_program",
    "scale_usage", "set_oracle", "show_pred", "show_scheme", "show_type",
    "simplify", "solve",
]

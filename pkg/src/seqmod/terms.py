"""Two-sorted first-order syntax: terms, literals, formulas, domains.

Terms come in an uninterpreted sort and a rational sort.  Rational terms
admit exact linear combinations over `fractions.Fraction`.  Three kinds of
variables coexist: bound variables (placeholders under a quantifier),
eigenvariables (rigid: introduced by universal quantifiers, plus the
problem constants), and meta-variables (flexible: introduced by
existential quantifiers, to be solved by a theory backend).

A Domain records the declaration order of eigenvariables and
meta-variables; each meta-variable may only be instantiated with ground
terms built from the eigenvariables declared before it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence, Union

SORT_TERM = "term"
SORT_RAT = "rat"

SORTS = (SORT_TERM, SORT_RAT)

# Rational constants available to bounded ground-term enumeration.  The
# order is significant: the first entry is the default witness value.
DEFAULT_RATIONAL_SAMPLES: tuple[Fraction, ...] = (
    Fraction(0),
    Fraction(1),
    Fraction(-1),
    Fraction(1, 2),
    Fraction(-1, 2),
    Fraction(2),
    Fraction(-2),
    Fraction(15),
    Fraction(23),
    Fraction(46, 3),
)


class SortError(ValueError):
    """A term or atom was built with inconsistent sorts."""


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class BoundVar:
    """Occurrence of a quantified variable inside its binder's body."""

    name: str
    sort: str = SORT_TERM

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class EigenVar:
    """Rigid variable: a problem constant or a universally bound witness."""

    name: str
    sort: str = SORT_TERM

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MetaVar:
    """Flexible variable awaiting instantiation by a theory backend."""

    name: str
    sort: str = SORT_TERM

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class RatConst:
    """Exact rational constant."""

    value: Fraction

    @property
    def sort(self) -> str:
        return SORT_RAT

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class FunApp:
    """Application of an uninterpreted function symbol."""

    symbol: str
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        for a in self.args:
            if term_sort(a) != SORT_TERM:
                raise SortError("argument %s of %s is not term-sorted" % (a, self.symbol))

    @property
    def sort(self) -> str:
        return SORT_TERM

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return "%s(%s)" % (self.symbol, ", ".join(map(str, self.args)))


@dataclass(frozen=True)
class LinTerm:
    """Canonical linear combination over rational-sorted variables.

    coeffs holds (variable, coefficient) pairs: coefficients nonzero,
    variables distinct and sorted by var_key.  The constructors below
    collapse degenerate combinations, so a LinTerm value always has at
    least one variable term and is never a bare variable.
    """

    coeffs: tuple[tuple["Term", Fraction], ...]
    const: Fraction = Fraction(0)

    @property
    def sort(self) -> str:
        return SORT_RAT

    def __str__(self) -> str:
        parts = []
        for var, c in self.coeffs:
            if c == 1:
                parts.append(str(var))
            else:
                parts.append("%s*%s" % (c, var))
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return " + ".join(parts)


Term = Union[BoundVar, EigenVar, MetaVar, RatConst, FunApp, LinTerm]

VarTerm = Union[BoundVar, EigenVar, MetaVar]

_VAR_KINDS = {BoundVar: 0, EigenVar: 1, MetaVar: 2}


def is_var(t: Term) -> bool:
    return type(t) in _VAR_KINDS


def var_key(v: Term) -> tuple[int, str]:
    """Total deterministic order on variables of all three kinds."""
    return (_VAR_KINDS[type(v)], v.name)


def term_sort(t: Term) -> str:
    return t.sort


def mk_lin(coeffs: Mapping[Term, Fraction], const: Fraction) -> Term:
    """Build a canonical rational term from a coefficient map.

    Returns a RatConst when no variable survives and the bare variable
    when the combination is exactly 1*v + 0.
    """
    items = []
    for v, c in coeffs.items():
        if term_sort(v) != SORT_RAT:
            raise SortError("linear combination over non-rational term %s" % (v,))
        if c != 0:
            items.append((v, Fraction(c)))
    items.sort(key=lambda vc: var_key(vc[0]))
    const = Fraction(const)
    if not items:
        return RatConst(const)
    if len(items) == 1 and items[0][1] == 1 and const == 0:
        return items[0][0]
    return LinTerm(tuple(items), const)


def lin_of(t: Term) -> tuple[dict[Term, Fraction], Fraction]:
    """Decompose a rational-sorted term into (coefficient map, constant)."""
    if isinstance(t, RatConst):
        return {}, t.value
    if isinstance(t, LinTerm):
        return dict(t.coeffs), t.const
    if is_var(t):
        if t.sort != SORT_RAT:
            raise SortError("expected rational term, got %s" % (t,))
        return {t: Fraction(1)}, Fraction(0)
    raise SortError("expected rational term, got %s" % (t,))


def lin_combine(*weighted: tuple[Fraction, Term]) -> Term:
    """Exact weighted sum of rational terms."""
    coeffs: dict[Term, Fraction] = {}
    const = Fraction(0)
    for w, t in weighted:
        cs, k = lin_of(t)
        const += w * k
        for v, c in cs.items():
            coeffs[v] = coeffs.get(v, Fraction(0)) + w * c
    return mk_lin(coeffs, const)


def term_vars(t: Term) -> frozenset[Term]:
    """All variables (bound, eigen, meta) occurring in a term."""
    if is_var(t):
        return frozenset([t])
    if isinstance(t, RatConst):
        return frozenset()
    if isinstance(t, FunApp):
        out: frozenset[Term] = frozenset()
        for a in t.args:
            out |= term_vars(a)
        return out
    if isinstance(t, LinTerm):
        return frozenset(v for v, _ in t.coeffs)
    raise TypeError(t)


def term_metas(t: Term) -> frozenset[MetaVar]:
    return frozenset(v for v in term_vars(t) if isinstance(v, MetaVar))


def term_eigens(t: Term) -> frozenset[EigenVar]:
    return frozenset(v for v in term_vars(t) if isinstance(v, EigenVar))


def term_depth(t: Term) -> int:
    """Function-application nesting depth; variables and constants are 0."""
    if isinstance(t, FunApp) and t.args:
        return 1 + max(term_depth(a) for a in t.args)
    return 0


def subst_term(t: Term, mapping: Mapping[Term, Term]) -> Term:
    """Simultaneous replacement of variables by terms.

    Images substituted into a linear combination must themselves be
    rational-sorted; the result is renormalised.
    """
    if is_var(t):
        return mapping.get(t, t)
    if isinstance(t, RatConst):
        return t
    if isinstance(t, FunApp):
        return FunApp(t.symbol, tuple(subst_term(a, mapping) for a in t.args))
    if isinstance(t, LinTerm):
        parts: list[tuple[Fraction, Term]] = [(Fraction(1), RatConst(t.const))]
        for v, c in t.coeffs:
            parts.append((c, subst_term(v, mapping)))
        return lin_combine(*parts)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Literals


ARITH_OPS = ("<=", "<", "=")


@dataclass(frozen=True)
class PredAtom:
    """Uninterpreted predicate application."""

    name: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return "%s(%s)" % (self.name, ", ".join(map(str, self.args)))


@dataclass(frozen=True)
class ArithAtom:
    """Comparison of two rational-sorted terms; op is one of <=, <, =."""

    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if self.op not in ARITH_OPS:
            raise ValueError("unknown arithmetic operator %r" % (self.op,))

    def __str__(self) -> str:
        return "%s %s %s" % (self.lhs, self.op, self.rhs)


Atom = Union[PredAtom, ArithAtom]


@dataclass(frozen=True)
class Literal:
    """Signed atom."""

    positive: bool
    atom: Atom

    def __str__(self) -> str:
        return str(self.atom) if self.positive else "~" + str(self.atom)


def neg(lit: Literal) -> Literal:
    return Literal(not lit.positive, lit.atom)


def pos(atom: Atom) -> Literal:
    return Literal(True, atom)


def atom_vars(atom: Atom) -> frozenset[Term]:
    if isinstance(atom, PredAtom):
        out: frozenset[Term] = frozenset()
        for a in atom.args:
            out |= term_vars(a)
        return out
    return term_vars(atom.lhs) | term_vars(atom.rhs)


def literal_vars(lit: Literal) -> frozenset[Term]:
    return atom_vars(lit.atom)


def subst_literal(lit: Literal, mapping: Mapping[Term, Term]) -> Literal:
    atom = lit.atom
    if isinstance(atom, PredAtom):
        new: Atom = PredAtom(atom.name, tuple(subst_term(a, mapping) for a in atom.args))
    else:
        new = ArithAtom(atom.op, subst_term(atom.lhs, mapping), subst_term(atom.rhs, mapping))
    return Literal(lit.positive, new)


# ---------------------------------------------------------------------------
# Formulas in negation normal form


@dataclass(frozen=True)
class Lit:
    lit: Literal

    def __str__(self) -> str:
        return str(self.lit)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return "(%s /\\ %s)" % (self.left, self.right)


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return "(%s \\/ %s)" % (self.left, self.right)


@dataclass(frozen=True)
class Forall:
    var: str
    sort: str
    body: "Formula"

    def __str__(self) -> str:
        return "forall %s. %s" % (self.var, self.body)


@dataclass(frozen=True)
class Exists:
    var: str
    sort: str
    body: "Formula"

    def __str__(self) -> str:
        return "exists %s. %s" % (self.var, self.body)


Formula = Union[Lit, And, Or, Forall, Exists]

# A context is an ordered multiset of formulas; order is the search
# traversal order, multiset equality is the sequent-level identity.
Context = tuple[Formula, ...]


def substitute(formula: Formula, bound: str, replacement: Term) -> Formula:
    """Replace free occurrences of the bound variable named `bound`.

    Binder names are globally fresh after parsing, so capture cannot
    occur; an inner binder reusing the name still shadows correctly.
    """
    if isinstance(formula, Lit):
        mapping = {
            v: replacement
            for v in literal_vars(formula.lit)
            if isinstance(v, BoundVar) and v.name == bound
        }
        return Lit(subst_literal(formula.lit, mapping)) if mapping else formula
    if isinstance(formula, And):
        return And(substitute(formula.left, bound, replacement),
                   substitute(formula.right, bound, replacement))
    if isinstance(formula, Or):
        return Or(substitute(formula.left, bound, replacement),
                  substitute(formula.right, bound, replacement))
    if isinstance(formula, (Forall, Exists)):
        if formula.var == bound:
            return formula
        cls = type(formula)
        return cls(formula.var, formula.sort, substitute(formula.body, bound, replacement))
    raise TypeError(formula)


def formula_vars(formula: Formula) -> frozenset[Term]:
    if isinstance(formula, Lit):
        return literal_vars(formula.lit)
    if isinstance(formula, (And, Or)):
        return formula_vars(formula.left) | formula_vars(formula.right)
    if isinstance(formula, (Forall, Exists)):
        return frozenset(
            v for v in formula_vars(formula.body)
            if not (isinstance(v, BoundVar) and v.name == formula.var)
        )
    raise TypeError(formula)


def literals_of(context: Context) -> tuple[Literal, ...]:
    """Literal members of a context, deduplicated, in first-occurrence order."""
    seen: dict[Literal, None] = {}
    for f in context:
        if isinstance(f, Lit) and f.lit not in seen:
            seen[f.lit] = None
    return tuple(seen)


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    """Problem vocabulary.

    preds maps a predicate name to its argument sorts, funs maps an
    uninterpreted function symbol to its arity (arguments and result are
    term-sorted), consts lists the declared uninterpreted constants.
    """

    preds: tuple[tuple[str, tuple[str, ...]], ...] = ()
    funs: tuple[tuple[str, int], ...] = ()
    consts: tuple[str, ...] = ()

    def pred_sorts(self, name: str) -> Optional[tuple[str, ...]]:
        for n, sorts in self.preds:
            if n == name:
                return sorts
        return None

    def fun_arity(self, name: str) -> Optional[int]:
        for n, k in self.funs:
            if n == name:
                return k
        return None


# ---------------------------------------------------------------------------
# Domains


class DomainError(ValueError):
    """A domain was extended or queried inconsistently."""


@dataclass(frozen=True)
class Domain:
    """Ordered declarations of eigenvariables and meta-variables.

    decls interleaves both kinds in declaration order; a meta-variable's
    authorised eigenvariables are exactly those declared before it.
    """

    decls: tuple[Union[EigenVar, MetaVar], ...] = ()

    @staticmethod
    def initial(eigens: Sequence[EigenVar]) -> "Domain":
        d = Domain()
        for e in eigens:
            d = d.add_eigen(e)
        return d

    def _check_fresh(self, name: str) -> None:
        if any(v.name == name for v in self.decls):
            raise DomainError("name %r already declared" % (name,))

    def add_eigen(self, v: EigenVar) -> "Domain":
        self._check_fresh(v.name)
        return Domain(self.decls + (v,))

    def add_meta(self, v: MetaVar) -> "Domain":
        self._check_fresh(v.name)
        return Domain(self.decls + (v,))

    @property
    def eigens(self) -> tuple[EigenVar, ...]:
        return tuple(v for v in self.decls if isinstance(v, EigenVar))

    @property
    def metas(self) -> tuple[MetaVar, ...]:
        return tuple(v for v in self.decls if isinstance(v, MetaVar))

    def authorised(self, meta: MetaVar) -> frozenset[EigenVar]:
        out: list[EigenVar] = []
        for v in self.decls:
            if v == meta:
                return frozenset(out)
            if isinstance(v, EigenVar):
                out.append(v)
        raise DomainError("meta-variable %s not declared" % (meta,))

    def last_meta(self) -> Optional[MetaVar]:
        for v in reversed(self.decls):
            if isinstance(v, MetaVar):
                return v
        return None

    def drop_meta(self, meta: MetaVar) -> "Domain":
        """Domain with one meta-variable declaration removed.

        Only meaningful for the last-declared meta (projection); eigens
        declared after it are kept.
        """
        if meta not in self.decls:
            raise DomainError("meta-variable %s not declared" % (meta,))
        return Domain(tuple(v for v in self.decls if v != meta))

    def metas_key(self) -> tuple[tuple[str, frozenset[EigenVar]], ...]:
        """Identity of the constraint family this domain indexes.

        Appending eigenvariables does not change the family, so only the
        metas and their authorised sets matter.
        """
        return tuple((m.name, self.authorised(m)) for m in self.metas)


# ---------------------------------------------------------------------------
# Instantiations


@dataclass(frozen=True)
class Instantiation:
    """Total assignment of ground terms to a domain's meta-variables.

    Every image must be ground (no bound or meta-variables), match the
    meta's sort, and draw its eigenvariables from the authorised set.
    """

    domain: Domain
    entries: tuple[tuple[MetaVar, Term], ...] = ()

    def __post_init__(self) -> None:
        assigned = [m for m, _ in self.entries]
        if assigned != list(self.domain.metas):
            raise DomainError("instantiation does not cover the domain's metas in order")
        for m, t in self.entries:
            if term_sort(t) != m.sort:
                raise SortError("instantiation of %s has sort %s" % (m, term_sort(t)))
            vs = term_vars(t)
            if any(isinstance(v, (MetaVar, BoundVar)) for v in vs):
                raise DomainError("instantiation image %s is not ground" % (t,))
            if not term_eigens(t) <= self.domain.authorised(m):
                raise DomainError("instantiation image %s uses unauthorised eigenvariables" % (t,))

    @staticmethod
    def empty(domain: Domain) -> "Instantiation":
        if domain.metas:
            raise DomainError("empty instantiation needs a meta-free domain")
        return Instantiation(domain, ())

    def get(self, meta: MetaVar) -> Term:
        for m, t in self.entries:
            if m == meta:
                return t
        raise KeyError(meta)

    def mapping(self) -> dict[Term, Term]:
        return {m: t for m, t in self.entries}

    def extend(self, domain: Domain, meta: MetaVar, image: Term) -> "Instantiation":
        """The instantiation (self, meta -> image) over `domain` = old + meta."""
        return Instantiation(domain, self.entries + ((meta, image),))

    def apply_term(self, t: Term) -> Term:
        return subst_term(t, self.mapping())

    def apply_literal(self, lit: Literal) -> Literal:
        return subst_literal(lit, self.mapping())

    def __str__(self) -> str:
        return "{%s}" % ", ".join("%s -> %s" % (m, t) for m, t in self.entries)


def apply_instantiation(rho: Instantiation, formula: Formula) -> Formula:
    """Instantiate every meta-variable of a formula; pre: they are all in rho."""
    missing = {
        v for v in formula_vars(formula)
        if isinstance(v, MetaVar) and v not in rho.domain.metas
    }
    if missing:
        raise DomainError("formula mentions metas outside the instantiation: %s" % missing)
    if isinstance(formula, Lit):
        return Lit(rho.apply_literal(formula.lit))
    if isinstance(formula, And):
        return And(apply_instantiation(rho, formula.left), apply_instantiation(rho, formula.right))
    if isinstance(formula, Or):
        return Or(apply_instantiation(rho, formula.left), apply_instantiation(rho, formula.right))
    if isinstance(formula, (Forall, Exists)):
        cls = type(formula)
        return cls(formula.var, formula.sort, apply_instantiation(rho, formula.body))
    raise TypeError(formula)


# ---------------------------------------------------------------------------
# Bounded ground-term enumeration


def enumerate_ground_terms(
    sig: Signature,
    domain: Domain,
    meta: MetaVar,
    depth: int,
    samples: Sequence[Fraction] = DEFAULT_RATIONAL_SAMPLES,
) -> tuple[Term, ...]:
    """Ground candidate terms for one meta-variable, smallest first.

    Uninterpreted sort: authorised eigenvariables in declaration order at
    depth 0, then function applications level by level up to `depth`.
    Rational sort: the configured samples followed by authorised
    rational eigenvariables (flat; depth does not grow this set).
    Deterministic, and a prefix of any deeper enumeration.
    """
    auth = domain.authorised(meta)
    ordered_auth = [e for e in domain.eigens if e in auth]
    if meta.sort == SORT_RAT:
        out: list[Term] = [RatConst(s) for s in samples]
        out.extend(e for e in ordered_auth if e.sort == SORT_RAT)
        return tuple(out)
    base: list[Term] = [e for e in ordered_auth if e.sort == SORT_TERM]
    base.extend(FunApp(c, ()) for c in sig.consts)
    levels: list[list[Term]] = [base]
    for _ in range(depth):
        prev = [t for level in levels for t in level]
        nxt: list[Term] = []
        for fname, arity in sig.funs:
            if arity == 0:
                continue
            for args in itertools.product(prev, repeat=arity):
                cand = FunApp(fname, args)
                if term_depth(cand) == len(levels):
                    nxt.append(cand)
        levels.append(nxt)
    return tuple(t for level in levels for t in level)

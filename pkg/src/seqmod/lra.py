"""Linear rational arithmetic backend.

Constraints are disjunctions of systems of linear atoms over exact
rationals; one atom is a canonical expression `sum c_i * v_i + k OP 0`
with OP among <=, <, =.  Conjunction distributes over the disjuncts,
projection is Fourier-Motzkin elimination per disjunct (equalities are
expanded into a pair of bounds only while eliminating; they are stored
as equalities), and satisfiability eliminates every variable.

The leaf stream proposes, in context order, equality systems from
opposite-polarity predicate pairs, then single arithmetic literals, and
conjoins each with the input.  Compatibility and leaf validity evaluate
eigenvariables under a configured valuation (default: 0 everywhere),
since witness terms are rational constants, not symbolic expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .terms import (
    ArithAtom,
    Domain,
    EigenVar,
    Instantiation,
    Literal,
    MetaVar,
    PredAtom,
    RatConst,
    SORT_RAT,
    Term,
    is_var,
    lin_combine,
    lin_of,
    mk_lin,
    term_sort,
    var_key,
)
from .theory import (
    CandidateStream,
    ConstraintStream,
    PreconditionError,
    ResourceLimit,
    Theory,
    WitnessUnsupported,
    check_metas_compatible,
    dual_pred_pairs,
)

MAX_DISJUNCTS = 512
MAX_ATOMS = 1024


@dataclass(frozen=True)
class LinAtom:
    """Canonical linear atom: coeffs . vars + const OP 0.

    Coefficients are nonzero and sorted by variable; equalities are
    sign-normalised so the leading coefficient is positive.
    """

    op: str
    coeffs: tuple[tuple[Term, Fraction], ...]
    const: Fraction

    def __str__(self) -> str:
        return "%s %s 0" % (mk_lin(dict(self.coeffs), self.const), self.op)


def make_atom(op: str, coeffs: Mapping[Term, Fraction], const: Fraction) -> LinAtom:
    items = sorted(((v, Fraction(c)) for v, c in coeffs.items() if c != 0),
                   key=lambda vc: var_key(vc[0]))
    const = Fraction(const)
    if op == "=" and items and items[0][1] < 0:
        items = [(v, -c) for v, c in items]
        const = -const
    return LinAtom(op, tuple(items), const)


def atom_from_terms(op: str, lhs: Term, rhs: Term) -> LinAtom:
    """lhs OP rhs as a canonical atom (difference moved to one side)."""
    diff = lin_combine((Fraction(1), lhs), (Fraction(-1), rhs))
    coeffs, const = lin_of(diff)
    return make_atom(op, coeffs, const)


def lin_atom_of_literal(lit: Literal) -> LinAtom:
    """Asserted form of an arithmetic literal.

    Negations of inequalities flip into the complementary bound; a
    negated equality has no single-atom form and must have been split
    into a disjunction before reaching the backend.
    """
    atom = lit.atom
    if not isinstance(atom, ArithAtom):
        raise PreconditionError("expected an arithmetic literal, got %s" % (lit,))
    if lit.positive:
        return atom_from_terms(atom.op, atom.lhs, atom.rhs)
    if atom.op == "<=":
        return atom_from_terms("<", atom.rhs, atom.lhs)
    if atom.op == "<":
        return atom_from_terms("<=", atom.rhs, atom.lhs)
    raise PreconditionError("negated equality reached the backend unsplit: %s" % (lit,))


def _const_truth(atom: LinAtom) -> Optional[bool]:
    """Truth value of a variable-free atom, None when variables remain."""
    if atom.coeffs:
        return None
    if atom.op == "<=":
        return atom.const <= 0
    if atom.op == "<":
        return atom.const < 0
    return atom.const == 0


def normalize_system(atoms: Iterable[LinAtom]) -> Optional[frozenset[LinAtom]]:
    """Drop trivially true atoms; None when a trivially false atom appears."""
    out = set()
    for a in atoms:
        t = _const_truth(a)
        if t is True:
            continue
        if t is False:
            return None
        out.add(a)
    return frozenset(out)


System = frozenset[LinAtom]


@dataclass(frozen=True)
class PolyConstraint:
    """Disjunction of conjunctive systems; no disjuncts means FALSE."""

    domain: Domain
    disjuncts: tuple[System, ...] = (frozenset(),)

    @property
    def is_false(self) -> bool:
        return not self.disjuncts

    @property
    def is_true(self) -> bool:
        return any(not s for s in self.disjuncts)

    def __str__(self) -> str:
        if self.is_false:
            return "FALSE"
        rendered = []
        for s in self.disjuncts:
            if not s:
                rendered.append("TRUE")
            else:
                rendered.append(" & ".join(sorted(str(a) for a in s)))
        if len(rendered) == 1:
            return rendered[0]
        return " | ".join("(%s)" % r for r in rendered)


def make_poly(domain: Domain, systems: Iterable[Optional[Iterable[LinAtom]]]) -> PolyConstraint:
    disjuncts: list[System] = []
    seen = set()
    for s in systems:
        if s is None:
            continue
        ns = normalize_system(s)
        if ns is None:
            continue
        if len(ns) > MAX_ATOMS:
            raise ResourceLimit("system exceeds %d atoms" % MAX_ATOMS)
        if ns not in seen:
            seen.add(ns)
            disjuncts.append(ns)
        if len(disjuncts) > MAX_DISJUNCTS:
            raise ResourceLimit("constraint exceeds %d disjuncts" % MAX_DISJUNCTS)
    return PolyConstraint(domain, tuple(disjuncts))


def _coeff_of(atom: LinAtom, var: Term) -> Fraction:
    for v, c in atom.coeffs:
        if v == var:
            return c
    return Fraction(0)


def _without(atom: LinAtom, var: Term) -> tuple[dict[Term, Fraction], Fraction]:
    return {v: c for v, c in atom.coeffs if v != var}, atom.const


def eliminate_var_system(atoms: System, var: Term) -> Optional[System]:
    """Existentially eliminate one variable from a conjunctive system.

    Returns None when the elimination exposes a contradiction.
    """
    keep: list[LinAtom] = []
    lowers: list[tuple[dict[Term, Fraction], Fraction, bool]] = []  # expr <=/< X
    uppers: list[tuple[dict[Term, Fraction], Fraction, bool]] = []  # X <=/< expr
    for atom in atoms:
        c = _coeff_of(atom, var)
        if c == 0:
            keep.append(atom)
            continue
        rest, k = _without(atom, var)
        # c*X + rest + k OP 0  <=>  X OP' -(rest + k)/c, flipping on c < 0.
        bound = ({v: -cc / c for v, cc in rest.items()}, -k / c)
        if atom.op == "=":
            lowers.append((bound[0], bound[1], False))
            uppers.append((bound[0], bound[1], False))
        else:
            strict = atom.op == "<"
            if c > 0:
                uppers.append((bound[0], bound[1], strict))
            else:
                lowers.append((bound[0], bound[1], strict))
    out = set(keep)
    for lo_c, lo_k, lo_s in lowers:
        for hi_c, hi_k, hi_s in uppers:
            coeffs = dict(lo_c)
            for v, c in hi_c.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) - c
            atom = make_atom("<" if (lo_s or hi_s) else "<=", coeffs, lo_k - hi_k)
            t = _const_truth(atom)
            if t is False:
                return None
            if t is None:
                out.add(atom)
    if len(out) > MAX_ATOMS:
        raise ResourceLimit("elimination exceeds %d atoms" % MAX_ATOMS)
    return normalize_system(out)


def fm_eliminate(sigma: PolyConstraint, var: Term) -> PolyConstraint:
    """Fourier-Motzkin elimination of one variable across all disjuncts."""
    return make_poly(sigma.domain,
                     (eliminate_var_system(s, var) for s in sigma.disjuncts))


def _system_vars(s: System) -> set[Term]:
    out: set[Term] = set()
    for a in s:
        out |= {v for v, _ in a.coeffs}
    return out


def _system_sat(s: System) -> bool:
    for v in sorted(_system_vars(s), key=var_key, reverse=True):
        ns = eliminate_var_system(s, v)
        if ns is None:
            return False
        if not ns:
            return True
        s = ns
    return normalize_system(s) is not None


def lra_sat(sigma: PolyConstraint) -> bool:
    """Native satisfiability: some rational assignment to every variable
    (meta and eigen alike) satisfies some disjunct."""
    return any(_system_sat(s) for s in sigma.disjuncts)


def _conjoin(a: PolyConstraint, b: PolyConstraint) -> PolyConstraint:
    check_metas_compatible(a.domain, b.domain)
    domain = a.domain if len(a.domain.decls) >= len(b.domain.decls) else b.domain
    return make_poly(domain, (sa | sb for sa in a.disjuncts for sb in b.disjuncts))


def _eval_term(t: Term, assignment: Mapping[Term, Fraction]) -> Fraction:
    # Plain indexing so that defaulting mappings can supply eigen values.
    if isinstance(t, RatConst):
        return t.value
    if is_var(t):
        return assignment[t]
    coeffs, const = lin_of(t)
    total = const
    for v, c in coeffs.items():
        total += c * assignment[v]
    return total


def _eval_atom(atom: LinAtom, assignment: Mapping[Term, Fraction]) -> bool:
    total = atom.const
    for v, c in atom.coeffs:
        total += c * assignment[v]
    if atom.op == "<=":
        return total <= 0
    if atom.op == "<":
        return total < 0
    return total == 0


class LraTheory(Theory):
    """Fourier-Motzkin backend; see the module docstring."""

    name = "lra"

    def __init__(self, p_satisfiable: bool = True,
                 eigen_value: Optional[Fraction] = Fraction(0)) -> None:
        super().__init__(p_satisfiable)
        # Value given to every eigenvariable when constraints are
        # evaluated; None disables evaluation-based operations on
        # constraints that mention eigenvariables.
        self.eigen_value = eigen_value

    # -- constraint algebra ------------------------------------------------

    def top(self, domain: Domain) -> PolyConstraint:
        return PolyConstraint(domain, (frozenset(),))

    def project(self, sigma: PolyConstraint, meta: MetaVar) -> PolyConstraint:
        if sigma.domain.last_meta() != meta:
            raise PreconditionError("projection must target the last meta-variable")
        out = fm_eliminate(sigma, meta)
        return PolyConstraint(sigma.domain.drop_meta(meta), out.disjuncts)

    def lift(self, sigma: PolyConstraint, meta: MetaVar) -> PolyConstraint:
        return PolyConstraint(sigma.domain.add_meta(meta), sigma.disjuncts)

    def meet(self, a: PolyConstraint, b: PolyConstraint) -> Optional[PolyConstraint]:
        out = _conjoin(a, b)
        return out if lra_sat(out) else None

    def consistency(self, lits: tuple[Literal, ...], domain: Domain) -> ConstraintStream:
        lits = tuple(lits)
        candidates: list[tuple[frozenset[Literal], System]] = []
        for l, l2 in dual_pred_pairs(lits):
            eqs: list[LinAtom] = []
            ok = True
            for t, u in zip(l.atom.args, l2.atom.args):
                if term_sort(t) == SORT_RAT and term_sort(u) == SORT_RAT:
                    eqs.append(atom_from_terms("=", t, u))
                elif t != u:
                    # Uninterpreted positions must already agree; this
                    # backend only solves rational constraints.
                    ok = False
                    break
            if ok:
                candidates.append((frozenset((l, l2)), frozenset(eqs)))
        for l in lits:
            if isinstance(l.atom, ArithAtom):
                candidates.append((frozenset((l,)), frozenset((lin_atom_of_literal(l),))))

        def combine(system: System, current: PolyConstraint):
            out = _conjoin(current, PolyConstraint(current.domain, (system,)))
            if self.p_satisfiable and not lra_sat(out):
                return None
            return out

        return CandidateStream(candidates, combine)

    # -- semantics ----------------------------------------------------------

    def satisfiable(self, sigma: PolyConstraint) -> bool:
        return lra_sat(sigma)

    def _assignment(self, rho: Instantiation, vars_needed: Iterable[Term]) -> dict[Term, Fraction]:
        out: dict[Term, Fraction] = {}
        rmap = rho.mapping()
        env = self._eigen_env()
        for v in vars_needed:
            if v in rmap:
                # Images are ground rational terms, possibly mentioning
                # eigenvariables; evaluate them under the valuation.
                out[v] = _eval_term(rmap[v], env)
            elif isinstance(v, EigenVar):
                if self.eigen_value is None:
                    raise WitnessUnsupported(
                        "constraint mentions eigenvariable %s and no valuation is configured" % (v,))
                out[v] = self.eigen_value
            else:
                raise PreconditionError("variable %s not covered by the instantiation" % (v,))
        return out

    def _eigen_env(self) -> Mapping[Term, Fraction]:
        class _Env(dict):
            def __init__(self, value):
                super().__init__()
                self._value = value

            def __missing__(self, key):
                if isinstance(key, EigenVar) and self._value is not None:
                    return self._value
                raise KeyError(key)

        return _Env(self.eigen_value)

    def compatible(self, rho: Instantiation, sigma: PolyConstraint) -> bool:
        check_metas_compatible(rho.domain, sigma.domain)
        for s in sigma.disjuncts:
            assignment = self._assignment(rho, _system_vars(s))
            if all(_eval_atom(a, assignment) for a in s):
                return True
        return False

    def witness(self, sigma: PolyConstraint, rho: Instantiation) -> Term:
        meta = sigma.domain.last_meta()
        if meta is None:
            raise PreconditionError("witness needs at least one meta-variable")
        if not self.compatible(rho, self.project(sigma, meta)):
            raise PreconditionError("instantiation incompatible with the projection")
        for s in sigma.disjuncts:
            value = self._witness_in_system(s, meta, rho)
            if value is not None:
                return RatConst(value)
        raise PreconditionError("no feasible disjunct despite a compatible projection")

    def _witness_in_system(self, s: System, meta: MetaVar,
                           rho: Instantiation) -> Optional[Fraction]:
        others = _system_vars(s) - {meta}
        assignment = self._assignment(rho, others)
        lo: Optional[Fraction] = None
        hi: Optional[Fraction] = None
        lo_strict = hi_strict = False
        for atom in s:
            c = _coeff_of(atom, meta)
            if c == 0:
                if not _eval_atom(atom, assignment):
                    return None
                continue
            rest, k = _without(atom, meta)
            total = k
            for v, cc in rest.items():
                total += cc * assignment[v]
            bound = -total / c
            strict = atom.op == "<"
            if atom.op == "=":
                sides = (("lo", bound, False), ("hi", bound, False))
            elif c > 0:
                sides = (("hi", bound, strict),)
            else:
                sides = (("lo", bound, strict),)
            for side, b, st in sides:
                if side == "lo":
                    if lo is None or b > lo:
                        lo, lo_strict = b, st
                    elif b == lo:
                        lo_strict = lo_strict or st
                else:
                    if hi is None or b < hi:
                        hi, hi_strict = b, st
                    elif b == hi:
                        hi_strict = hi_strict or st
        if lo is not None and hi is not None:
            if lo > hi or (lo == hi and (lo_strict or hi_strict)):
                return None
            if lo == hi:
                return lo
            return (lo + hi) / 2
        if lo is not None:
            return lo + 1
        if hi is not None:
            return hi - 1
        return Fraction(0)

    def ground_valid(self, lits: tuple[Literal, ...]) -> bool:
        """Some arithmetic literal true under the valuation, or a
        complementary uninterpreted pair after evaluating rational
        arguments under the valuation."""
        env = self._eigen_env()
        pred: list[Literal] = []
        for l in lits:
            if isinstance(l.atom, ArithAtom):
                a = lin_atom_of_literal(l) if l.positive or l.atom.op != "=" else None
                if a is None:
                    # Negated equality: true unless both sides are equal.
                    if _eval_term(l.atom.lhs, env) != _eval_term(l.atom.rhs, env):
                        return True
                    continue
                assignment = {v: env[v] for v, _ in a.coeffs}
                if _eval_atom(a, assignment):
                    return True
            else:
                args = tuple(
                    RatConst(_eval_term(t, env)) if term_sort(t) == SORT_RAT else t
                    for t in l.atom.args
                )
                pred.append(Literal(l.positive, PredAtom(l.atom.name, args)))
        for i, l in enumerate(pred):
            for l2 in pred[i + 1:]:
                if l.atom == l2.atom and l.positive != l2.positive:
                    return True
        return False

    def render(self, sigma: PolyConstraint) -> str:
        return str(sigma)

    def shrink(self, sigma: PolyConstraint) -> Iterator[PolyConstraint]:
        for i in range(len(sigma.disjuncts)):
            rest = sigma.disjuncts[:i] + sigma.disjuncts[i + 1:]
            if rest:
                yield PolyConstraint(sigma.domain, rest)
            atoms = sorted(sigma.disjuncts[i], key=str)
            for j in range(len(atoms)):
                smaller = frozenset(atoms[:j] + atoms[j + 1:])
                yield PolyConstraint(sigma.domain,
                                     sigma.disjuncts[:i] + (smaller,) + sigma.disjuncts[i + 1:])

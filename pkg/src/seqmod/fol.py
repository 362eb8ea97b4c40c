"""Syntactic-unification backend.

Constraints are either the absurd constraint or an idempotent
substitution on the domain's meta-variables.  Every binding X -> t is
kept admissible: X does not occur in t, the eigenvariables of t are
authorised for X, and every meta-variable of t has an authorised set
included in X's (authorised sets along one domain form a chain, so
variable-variable pairs always orient).  The meet of two substitutions
is their most general unifier.

Projection erases the entry of the projected meta-variable; remaining
images may still mention it, in which case compatibility solves for the
erased variable by one-way matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

from .terms import (
    DEFAULT_RATIONAL_SAMPLES,
    BoundVar,
    Domain,
    EigenVar,
    FunApp,
    Instantiation,
    LinTerm,
    Literal,
    MetaVar,
    PredAtom,
    RatConst,
    SORT_RAT,
    SORT_TERM,
    Term,
    is_var,
    lin_combine,
    mk_lin,
    subst_term,
    term_eigens,
    term_metas,
    term_sort,
)
from .theory import (
    CandidateStream,
    ConstraintStream,
    PreconditionError,
    Theory,
    WitnessUnsupported,
    check_metas_compatible,
    complementary_pair,
    dual_pred_pairs,
)


@dataclass(frozen=True)
class SubstConstraint:
    """Idempotent substitution, or the absurd constraint when entries is None.

    Entries are sorted by the key's declaration position in the domain.
    """

    domain: Domain
    entries: Optional[tuple[tuple[MetaVar, Term], ...]] = ()

    @property
    def is_bot(self) -> bool:
        return self.entries is None

    def get(self, meta: MetaVar) -> Term:
        """Image of a meta-variable; unmapped variables stand for themselves."""
        if self.entries is None:
            raise PreconditionError("the absurd constraint maps nothing")
        for m, t in self.entries:
            if m == meta:
                return t
        return meta

    def mapping(self) -> dict[Term, Term]:
        if self.entries is None:
            raise PreconditionError("the absurd constraint maps nothing")
        return {m: t for m, t in self.entries}

    def __str__(self) -> str:
        if self.entries is None:
            return "BOT"
        if not self.entries:
            return "TOP"
        return "{%s}" % ", ".join("%s -> %s" % (m, t) for m, t in self.entries)


def _bot(domain: Domain) -> SubstConstraint:
    return SubstConstraint(domain, None)


def _sorted_entries(domain: Domain, mapping: Mapping[MetaVar, Term]):
    order = {v.name: i for i, v in enumerate(domain.decls)}
    keys = sorted(mapping, key=lambda m: order.get(m.name, len(order)))
    return tuple((m, mapping[m]) for m in keys)


def _admissible(domain: Domain, meta: MetaVar, image: Term) -> bool:
    # Occurs check plus the dependency discipline described above.
    if meta in term_metas(image):
        return False
    if not term_eigens(image) <= domain.authorised(meta):
        return False
    auth = domain.authorised(meta)
    for y in term_metas(image):
        if not domain.authorised(y) <= auth:
            return False
    return True


class _Clash(Exception):
    """Internal: unification failed."""


def _unify(domain: Domain, subst: dict[MetaVar, Term], a: Term, b: Term) -> None:
    a = subst_term(a, subst)
    b = subst_term(b, subst)
    if a == b:
        return
    if isinstance(a, BoundVar) or isinstance(b, BoundVar):
        raise PreconditionError("bound variable escaped into unification")
    if isinstance(a, MetaVar) and isinstance(b, MetaVar):
        # Bind toward the smaller authorised set; sets form a chain.
        if domain.authorised(b) <= domain.authorised(a):
            _bind(domain, subst, a, b)
        else:
            _bind(domain, subst, b, a)
        return
    if isinstance(a, MetaVar):
        _bind(domain, subst, a, b)
        return
    if isinstance(b, MetaVar):
        _bind(domain, subst, b, a)
        return
    if isinstance(a, FunApp) and isinstance(b, FunApp):
        if a.symbol != b.symbol or len(a.args) != len(b.args):
            raise _Clash
        for x, y in zip(a.args, b.args):
            _unify(domain, subst, x, y)
        return
    if term_sort(a) == SORT_RAT and term_sort(b) == SORT_RAT:
        _unify_rational(domain, subst, a, b)
        return
    raise _Clash


def _unify_rational(domain: Domain, subst: dict[MetaVar, Term], a: Term, b: Term) -> None:
    # Syntactic treatment with one linear special case: when the
    # difference a - b has exactly one meta-variable, solve for it.
    diff = lin_combine((Fraction(1), a), (Fraction(-1), b))
    if isinstance(diff, RatConst):
        if diff.value == 0:
            return
        raise _Clash
    coeffs, const = ({diff: Fraction(1)}, Fraction(0)) if is_var(diff) else (dict(diff.coeffs), diff.const)
    metas = [v for v in coeffs if isinstance(v, MetaVar)]
    if len(metas) == 1 and not any(isinstance(v, BoundVar) for v in coeffs):
        x = metas[0]
        c = coeffs.pop(x)
        rest = mk_lin({v: -k / c for v, k in coeffs.items()}, -const / c)
        _bind(domain, subst, x, rest)
        return
    raise _Clash


def _bind(domain: Domain, subst: dict[MetaVar, Term], meta: MetaVar, image: Term) -> None:
    if term_sort(image) != meta.sort:
        raise _Clash
    if not _admissible(domain, meta, image):
        raise _Clash
    one = {meta: image}
    for m in list(subst):
        subst[m] = subst_term(subst[m], one)
    subst[meta] = image


def mgu(pairs: Sequence[tuple[Term, Term]], domain: Domain) -> SubstConstraint:
    """Most general unifier of the pairs as a constraint; absurd on failure."""
    subst: dict[MetaVar, Term] = {}
    try:
        for a, b in pairs:
            _unify(domain, subst, a, b)
    except _Clash:
        return _bot(domain)
    return SubstConstraint(domain, _sorted_entries(domain, subst))


def _atom_pairs(a: PredAtom, b: PredAtom) -> list[tuple[Term, Term]]:
    return list(zip(a.args, b.args))


def subst_meet(a: SubstConstraint, b: SubstConstraint) -> SubstConstraint:
    """Most general common instance of two substitutions; absurd on clash."""
    check_metas_compatible(a.domain, b.domain)
    domain = a.domain if len(a.domain.decls) >= len(b.domain.decls) else b.domain
    if a.is_bot or b.is_bot:
        return _bot(domain)
    pairs = [(m, t) for m, t in a.entries] + [(m, t) for m, t in b.entries]
    return mgu(pairs, domain)


class _Mismatch(Exception):
    """Internal: one-way matching failed."""


def _match(pattern: Term, target: Term, bindings: dict[MetaVar, Term]) -> None:
    """Solve pattern = target for the pattern's meta-variables; target is ground."""
    pattern = subst_term(pattern, bindings)
    if pattern == target:
        return
    if isinstance(pattern, MetaVar):
        if term_sort(target) != pattern.sort:
            raise _Mismatch
        bindings[pattern] = target
        return
    if isinstance(pattern, FunApp) and isinstance(target, FunApp):
        if pattern.symbol != target.symbol or len(pattern.args) != len(target.args):
            raise _Mismatch
        for p, t in zip(pattern.args, target.args):
            _match(p, t, bindings)
        return
    if isinstance(pattern, LinTerm) and term_sort(target) == SORT_RAT:
        metas = [v for v, _ in pattern.coeffs if isinstance(v, MetaVar)]
        if len(metas) == 1:
            # Solve c*x + rest = target for the only meta-variable x.
            x = metas[0]
            coeffs = dict(pattern.coeffs)
            c = coeffs.pop(x)
            parts = [(Fraction(1) / c, target), (Fraction(1), RatConst(-pattern.const / c))]
            for v, k in coeffs.items():
                parts.append((-k / c, v))
            bindings[x] = lin_combine(*parts)
            if subst_term(pattern, bindings) == target:
                return
        raise _Mismatch
    raise _Mismatch


class SubstTheory(Theory):
    """Unification backend over the empty theory."""

    name = "fol"

    def __init__(self, p_satisfiable: bool = True,
                 samples: Sequence[Fraction] = DEFAULT_RATIONAL_SAMPLES,
                 ground_base: Sequence[Term] = ()) -> None:
        super().__init__(p_satisfiable)
        self.samples = tuple(samples)
        # Closed terms of the uninterpreted sort, used when a witness has to
        # be invented and no eigenvariable is authorised.
        self.ground_base = tuple(ground_base)

    # -- constraint algebra ------------------------------------------------

    def top(self, domain: Domain) -> SubstConstraint:
        return SubstConstraint(domain, ())

    def project(self, sigma: SubstConstraint, meta: MetaVar) -> SubstConstraint:
        if sigma.domain.last_meta() != meta:
            raise PreconditionError("projection must target the last meta-variable")
        domain = sigma.domain.drop_meta(meta)
        if sigma.is_bot:
            return _bot(domain)
        return SubstConstraint(domain, tuple((m, t) for m, t in sigma.entries if m != meta))

    def lift(self, sigma: SubstConstraint, meta: MetaVar) -> SubstConstraint:
        domain = sigma.domain.add_meta(meta)
        if sigma.is_bot:
            return _bot(domain)
        return SubstConstraint(domain, sigma.entries)

    def meet(self, a: SubstConstraint, b: SubstConstraint) -> Optional[SubstConstraint]:
        out = subst_meet(a, b)
        return None if out.is_bot else out

    def consistency(self, lits: tuple[Literal, ...], domain: Domain) -> ConstraintStream:
        candidates = []
        for l, l2 in dual_pred_pairs(lits):
            candidates.append((frozenset((l, l2)), (l.atom, l2.atom)))

        def combine(cand, current: SubstConstraint):
            if current.is_bot:
                return None
            pairs = [(m, t) for m, t in current.entries]
            pairs.extend(_atom_pairs(*cand))
            out = mgu(pairs, current.domain)
            if out.is_bot and self.p_satisfiable:
                return None
            return out

        return CandidateStream(candidates, combine)

    # -- semantics ----------------------------------------------------------

    def satisfiable(self, sigma: SubstConstraint) -> bool:
        return not sigma.is_bot

    def compatible(self, rho: Instantiation, sigma: SubstConstraint) -> bool:
        if sigma.is_bot:
            return False
        check_metas_compatible(rho.domain, sigma.domain)
        try:
            self._match_all(rho, sigma)
        except _Mismatch:
            return False
        return True

    def _match_all(self, rho: Instantiation, sigma: SubstConstraint) -> dict[MetaVar, Term]:
        """Bindings for metas erased by projection making rho an instance."""
        rmap = rho.mapping()
        bindings: dict[MetaVar, Term] = {}
        for m in rho.domain.metas:
            pattern = subst_term(sigma.get(m), rmap)
            _match(pattern, rmap[m], bindings)
        return bindings

    def witness(self, sigma: SubstConstraint, rho: Instantiation) -> Term:
        if sigma.is_bot:
            raise PreconditionError("no witness for the absurd constraint")
        meta = sigma.domain.last_meta()
        if meta is None:
            raise PreconditionError("witness needs at least one meta-variable")
        projected = self.project(sigma, meta)
        if not self.compatible(rho, projected):
            raise PreconditionError("instantiation incompatible with the projection")
        bindings = self._match_all(rho, projected)
        pattern = subst_term(subst_term(sigma.get(meta), rho.mapping()), bindings)
        fill = {
            v: self._first_ground(v.sort, sigma.domain.authorised(meta), sigma.domain)
            for v in term_metas(pattern)
        }
        return subst_term(pattern, fill)

    def _first_ground(self, sort: str, auth: frozenset[EigenVar], domain: Domain) -> Term:
        if sort == SORT_RAT:
            return RatConst(self.samples[0])
        for e in domain.eigens:
            if e in auth and e.sort == SORT_TERM:
                return e
        for t in self.ground_base:
            if term_sort(t) == SORT_TERM:
                return t
        raise WitnessUnsupported("no authorised ground term of the uninterpreted sort")

    def ground_valid(self, lits: tuple[Literal, ...]) -> bool:
        return complementary_pair(lits) is not None

    def render(self, sigma: SubstConstraint) -> str:
        return str(sigma)

    def shrink(self, sigma: SubstConstraint) -> Iterator[SubstConstraint]:
        if sigma.is_bot or not sigma.entries:
            return
        for i in range(len(sigma.entries)):
            yield SubstConstraint(sigma.domain, sigma.entries[:i] + sigma.entries[i + 1:])

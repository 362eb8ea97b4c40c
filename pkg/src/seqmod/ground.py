"""Ground-enumeration backend.

Constraints are partial maps from meta-variables to ground terms.  The
leaf stream enumerates total groundings of the meta-variables occurring
in the leaf's literals, fairly (breadth-first on total term depth, then
lexicographically on candidate indices), keeps the groundings whose
instantiated literal set passes a ground validity predicate, and merges
each survivor with the input constraint.  A depth ceiling bounds the
candidate terms; beyond it the stream is exhausted, never wrong.

Deliberately naive: this backend doubles as a cross-check oracle for
the unification backend on problems both can express.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .terms import (
    DEFAULT_RATIONAL_SAMPLES,
    BoundVar,
    Domain,
    Instantiation,
    Literal,
    MetaVar,
    Signature,
    Term,
    enumerate_ground_terms,
    literal_vars,
    subst_literal,
    term_depth,
    term_eigens,
    term_sort,
    term_vars,
)
from .theory import (
    CandidateStream,
    ConstraintStream,
    PreconditionError,
    ResourceLimit,
    Theory,
    WitnessUnsupported,
    check_metas_compatible,
    complementary_pair,
)

_MAX_ASSIGNMENTS = 500_000


class GroundValidityPredicate:
    """Decides validity of the disjunction of a ground literal set."""

    name = "abstract"

    def holds(self, lits: tuple[Literal, ...]) -> bool:
        raise NotImplementedError

    def used(self, lits: tuple[Literal, ...]) -> Optional[frozenset[Literal]]:
        """A closing subset, when one smaller than the whole set is known."""
        return None


class ComplementaryPairs(GroundValidityPredicate):
    """Default instance: a syntactically complementary literal pair."""

    name = "complementary-pairs"

    def holds(self, lits: tuple[Literal, ...]) -> bool:
        return complementary_pair(lits) is not None

    def used(self, lits: tuple[Literal, ...]) -> Optional[frozenset[Literal]]:
        pair = complementary_pair(lits)
        return None if pair is None else frozenset(pair)


@dataclass(frozen=True)
class GroundConstraint:
    """Partial map from meta-variables to ground terms, declaration order."""

    domain: Domain
    entries: tuple[tuple[MetaVar, Term], ...] = ()

    def __post_init__(self) -> None:
        metas = list(self.domain.metas)
        positions = [metas.index(m) for m, _ in self.entries]
        if positions != sorted(positions) or len(set(positions)) != len(positions):
            raise PreconditionError("entries must follow declaration order without repeats")
        for m, t in self.entries:
            if term_sort(t) != m.sort:
                raise PreconditionError("image sort mismatch for %s" % (m,))
            if any(isinstance(v, (MetaVar, BoundVar)) for v in term_vars(t)):
                raise PreconditionError("image %s is not ground" % (t,))
            if not term_eigens(t) <= self.domain.authorised(m):
                raise PreconditionError("image %s uses unauthorised eigenvariables" % (t,))

    def get(self, meta: MetaVar) -> Optional[Term]:
        for m, t in self.entries:
            if m == meta:
                return t
        return None

    def __str__(self) -> str:
        if not self.entries:
            return "TRUE"
        return "{%s}" % ", ".join("%s -> %s" % (m, t) for m, t in self.entries)


def _merge(domain: Domain, a: GroundConstraint, b_entries) -> Optional[GroundConstraint]:
    amap = dict(a.entries)
    for m, t in b_entries:
        if m in amap and amap[m] != t:
            return None
        amap[m] = t
    order = {v.name: i for i, v in enumerate(domain.decls)}
    items = sorted(amap.items(), key=lambda mt: order[mt[0].name])
    return GroundConstraint(domain, tuple(items))


def ground_meet(a: GroundConstraint, b: GroundConstraint) -> Optional[GroundConstraint]:
    """Union of two partial maps; None on disagreement."""
    check_metas_compatible(a.domain, b.domain)
    domain = a.domain if len(a.domain.decls) >= len(b.domain.decls) else b.domain
    return _merge(domain, GroundConstraint(domain, a.entries), b.entries)


def _fair_assignments(cand_lists: Sequence[Sequence[Term]]) -> Iterator[tuple[Term, ...]]:
    """Index tuples ordered by total term depth, then lexicographically."""
    total = 1
    for c in cand_lists:
        total *= max(len(c), 1)
        if total > _MAX_ASSIGNMENTS:
            raise ResourceLimit("ground assignment space exceeds %d" % _MAX_ASSIGNMENTS)
    if any(not c for c in cand_lists):
        return
    indexed = [list(enumerate(c)) for c in cand_lists]
    tuples = list(itertools.product(*indexed))
    tuples.sort(key=lambda choice: (sum(term_depth(t) for _, t in choice),
                                    tuple(i for i, _ in choice)))
    for choice in tuples:
        yield tuple(t for _, t in choice)


class GroundEnumTheory(Theory):
    """Enumeration backend; see the module docstring."""

    name = "enum"

    def __init__(
        self,
        sig: Signature = Signature(),
        ceiling: int = 3,
        gvp: Optional[GroundValidityPredicate] = None,
        prefer_present: bool = False,
        p_satisfiable: bool = True,
        samples: Sequence[Fraction] = DEFAULT_RATIONAL_SAMPLES,
    ) -> None:
        super().__init__(p_satisfiable)
        self.sig = sig
        self.ceiling = ceiling
        self.gvp = gvp or ComplementaryPairs()
        self.prefer_present = prefer_present
        self.samples = tuple(samples)

    # -- constraint algebra ------------------------------------------------

    def top(self, domain: Domain) -> GroundConstraint:
        return GroundConstraint(domain, ())

    def project(self, sigma: GroundConstraint, meta: MetaVar) -> GroundConstraint:
        if sigma.domain.last_meta() != meta:
            raise PreconditionError("projection must target the last meta-variable")
        domain = sigma.domain.drop_meta(meta)
        return GroundConstraint(domain, tuple((m, t) for m, t in sigma.entries if m != meta))

    def lift(self, sigma: GroundConstraint, meta: MetaVar) -> GroundConstraint:
        return GroundConstraint(sigma.domain.add_meta(meta), sigma.entries)

    def meet(self, a: GroundConstraint, b: GroundConstraint) -> Optional[GroundConstraint]:
        return ground_meet(a, b)

    def consistency(self, lits: tuple[Literal, ...], domain: Domain) -> ConstraintStream:
        lits = tuple(lits)
        metas = [m for m in domain.metas
                 if any(m in literal_vars(l) for l in lits)]
        cand_lists = [self._candidates(domain, m, lits) for m in metas]
        candidates = []
        for images in _fair_assignments(cand_lists) if metas else iter(((),)):
            g = tuple(zip(metas, images))
            mapping = {m: t for m, t in g}
            ground_lits = tuple(subst_literal(l, mapping) for l in lits)
            if not self.gvp.holds(ground_lits):
                continue
            closing = self.gvp.used(ground_lits)
            if closing is None:
                used = frozenset(lits)
            else:
                # Map the closing ground literals back to their sources.
                used = frozenset(
                    l for l, gl in zip(lits, ground_lits) if gl in closing
                )
            candidates.append((used, g))

        def combine(g, current: GroundConstraint):
            return _merge(current.domain, current, g)

        return CandidateStream(candidates, combine)

    def _candidates(self, domain: Domain, meta: MetaVar, lits) -> list[Term]:
        terms = list(enumerate_ground_terms(self.sig, domain, meta, self.ceiling, self.samples))
        if self.prefer_present:
            present: set[Term] = set()
            for l in lits:
                present |= self._subterms_of_literal(l)
            terms.sort(key=lambda t: (t not in present,))  # stable
        return terms

    @staticmethod
    def _subterms_of_literal(lit: Literal) -> set[Term]:
        out: set[Term] = set()

        def walk(t: Term) -> None:
            out.add(t)
            args = getattr(t, "args", ())
            for a in args:
                walk(a)

        atom = lit.atom
        for t in getattr(atom, "args", ()) or ():
            walk(t)
        for side in ("lhs", "rhs"):
            if hasattr(atom, side):
                walk(getattr(atom, side))
        return out

    # -- semantics ----------------------------------------------------------

    def satisfiable(self, sigma: GroundConstraint) -> bool:
        # Any admissible partial map extends to a total instantiation.
        return True

    def compatible(self, rho: Instantiation, sigma: GroundConstraint) -> bool:
        check_metas_compatible(rho.domain, sigma.domain)
        return all(rho.get(m) == t for m, t in sigma.entries)

    def witness(self, sigma: GroundConstraint, rho: Instantiation) -> Term:
        meta = sigma.domain.last_meta()
        if meta is None:
            raise PreconditionError("witness needs at least one meta-variable")
        if not self.compatible(rho, self.project(sigma, meta)):
            raise PreconditionError("instantiation incompatible with the projection")
        assigned = sigma.get(meta)
        if assigned is not None:
            return assigned
        terms = enumerate_ground_terms(self.sig, sigma.domain, meta, self.ceiling, self.samples)
        if not terms:
            raise WitnessUnsupported("no ground candidate for %s" % (meta,))
        return terms[0]

    def ground_valid(self, lits: tuple[Literal, ...]) -> bool:
        return self.gvp.holds(tuple(lits))

    def render(self, sigma: GroundConstraint) -> str:
        return str(sigma)

    def shrink(self, sigma: GroundConstraint) -> Iterator[GroundConstraint]:
        for i in range(len(sigma.entries)):
            yield GroundConstraint(sigma.domain, sigma.entries[:i] + sigma.entries[i + 1:])

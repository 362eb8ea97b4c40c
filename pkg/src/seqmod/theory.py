"""Backend contract: constraint families indexed by domains.

A backend supplies, for every domain d, a family of constraint values
together with the operations the search kernel composes:

    top(d)              the unconstrained element
    project(sigma, X)   existential projection of the last meta-variable
    lift(sigma, X)      re-indexing into the extended domain d + X
    meet(a, b)          greatest lower bound, or None when unsatisfiable
    consistency(lits,d) resumable stream of ways to close a leaf

plus test-facing semantics: `compatible` decides whether a ground
instantiation satisfies a constraint and `witness` extends a compatible
instantiation to the last meta-variable.  Proof search itself only calls
compatible at the root gate and witness during reconstruction.
"""

from __future__ import annotations

import dataclasses
from abc import ABC, abstractmethod
from typing import Iterator, Optional

from .terms import (
    Domain,
    Instantiation,
    Literal,
    MetaVar,
    PredAtom,
    Term,
)


class TheoryError(Exception):
    """Base class for backend errors."""


class DomainMismatch(TheoryError):
    """Operands tagged with incompatible domains."""


class PreconditionError(TheoryError):
    """An operation was called outside its stated precondition."""


class WitnessUnsupported(TheoryError):
    """No witness term is expressible for this constraint."""


class ResourceLimit(TheoryError):
    """A size cap was exceeded; the result is unknown, not refuted."""


class ConstraintStream(ABC):
    """Resumable enumeration of leaf closures.

    Each pull takes the current input constraint and either returns a
    pair (used literal subset, output constraint) or None when the
    alternatives are exhausted.  Pulling is the only effectful
    operation; a stream has a single consumer.
    """

    @abstractmethod
    def pull(self, current: object) -> Optional[tuple[frozenset[Literal], object]]:
        raise NotImplementedError


class CandidateStream(ConstraintStream):
    """Stream over a fixed candidate list with a per-pull combine step.

    combine(candidate, current) returns the output constraint or None to
    skip the candidate.  The cursor never revisits skipped candidates.
    """

    def __init__(self, candidates, combine) -> None:
        self._candidates = list(candidates)
        self._combine = combine
        self._cursor = 0

    def pull(self, current: object) -> Optional[tuple[frozenset[Literal], object]]:
        while self._cursor < len(self._candidates):
            used, cand = self._candidates[self._cursor]
            self._cursor += 1
            out = self._combine(cand, current)
            if out is not None:
                return used, out
        return None


def check_metas_compatible(a_domain: Domain, b_domain: Domain) -> None:
    """Constraints interact only within one constraint family.

    Appending eigenvariables never changes the family, so two domains
    are compatible when their meta declarations agree.
    """
    if a_domain.metas_key() != b_domain.metas_key():
        raise DomainMismatch(
            "domains disagree on meta-variables: %s vs %s"
            % (a_domain.metas, b_domain.metas)
        )


def rehouse(sigma, domain: Domain):
    """Re-index a constraint at a domain extended with eigenvariables.

    The payload is untouched; only the domain tag changes.  Used when a
    constraint crosses a universal rule, whose fresh eigenvariable must
    become visible to later domain arithmetic (lifts, authorised sets).
    """
    if sigma.domain == domain:
        return sigma
    check_metas_compatible(sigma.domain, domain)
    return dataclasses.replace(sigma, domain=domain)


def complementary_pair(lits) -> Optional[tuple[Literal, Literal]]:
    """First pair of syntactically complementary literals, context order."""
    lits = tuple(lits)
    for i, l in enumerate(lits):
        for l2 in lits[i + 1:]:
            if l.atom == l2.atom and l.positive != l2.positive:
                return (l, l2) if l.positive else (l2, l)
    return None


def dual_pred_pairs(lits) -> Iterator[tuple[Literal, Literal]]:
    """Opposite-polarity same-predicate literal pairs, context order.

    Ordered by the first literal's position, then the second's.  Both
    members are uninterpreted atoms of equal arity.
    """
    lits = tuple(lits)
    for i, l in enumerate(lits):
        if not isinstance(l.atom, PredAtom):
            continue
        for l2 in lits[i + 1:]:
            if not isinstance(l2.atom, PredAtom):
                continue
            if (
                l.atom.name == l2.atom.name
                and len(l.atom.args) == len(l2.atom.args)
                and l.positive != l2.positive
            ):
                yield (l, l2)


class Theory(ABC):
    """Abstract backend; see the module docstring for the operation set."""

    name: str = "abstract"

    def __init__(self, p_satisfiable: bool = True) -> None:
        # P-mode: when True the leaf stream only yields satisfiable
        # outputs and the kernel prunes unsatisfiable running meets.
        self.p_satisfiable = p_satisfiable

    @abstractmethod
    def top(self, domain: Domain):
        raise NotImplementedError

    @abstractmethod
    def project(self, sigma, meta: MetaVar):
        raise NotImplementedError

    @abstractmethod
    def lift(self, sigma, meta: MetaVar):
        raise NotImplementedError

    @abstractmethod
    def meet(self, a, b):
        raise NotImplementedError

    @abstractmethod
    def consistency(self, lits: tuple[Literal, ...], domain: Domain) -> ConstraintStream:
        raise NotImplementedError

    @abstractmethod
    def satisfiable(self, sigma) -> bool:
        """The pruning predicate P in its native (non-oracle) form."""
        raise NotImplementedError

    @abstractmethod
    def compatible(self, rho: Instantiation, sigma) -> bool:
        raise NotImplementedError

    @abstractmethod
    def witness(self, sigma, rho: Instantiation) -> Term:
        """Image for the last meta of sigma's domain extending rho.

        pre: rho is compatible with project(sigma, last meta).
        """
        raise NotImplementedError

    @abstractmethod
    def ground_valid(self, lits: tuple[Literal, ...]) -> bool:
        """Ground-leaf validity used by proof reconstruction."""
        raise NotImplementedError

    @abstractmethod
    def render(self, sigma) -> str:
        raise NotImplementedError

    def shrink(self, sigma) -> Iterator[object]:
        """Strictly smaller constraints for counterexample shrinking."""
        return iter(())

    def project_last(self, sigma) -> tuple[MetaVar, object]:
        meta = sigma.domain.last_meta()
        if meta is None:
            raise PreconditionError("projection needs at least one meta-variable")
        return meta, self.project(sigma, meta)

"""Shared theory contract: streams, domain compatibility, re-indexing."""

import pytest

from seqmod.fol import SubstTheory, mgu
from seqmod.terms import (
    Domain,
    EigenVar,
    FunApp,
    Literal,
    MetaVar,
    PredAtom,
    SORT_TERM,
    pos,
)
from seqmod.theory import (
    CandidateStream,
    DomainMismatch,
    PreconditionError,
    ResourceLimit,
    TheoryError,
    WitnessUnsupported,
    check_metas_compatible,
    complementary_pair,
    dual_pred_pairs,
    rehouse,
)

E = lambda n: EigenVar(n, SORT_TERM)
M = lambda n: MetaVar(n, SORT_TERM)
a = FunApp("a", ())


def dom(*decls):
    d = Domain()
    for v in decls:
        d = d.add_eigen(v) if isinstance(v, EigenVar) else d.add_meta(v)
    return d


def test_error_hierarchy():
    for exc in (DomainMismatch, PreconditionError, WitnessUnsupported, ResourceLimit):
        assert issubclass(exc, TheoryError)


# ---------------------------------------------------------------------------
# domain compatibility and re-indexing


def test_same_meta_family_tolerates_eigen_tails():
    d1 = dom(E("e"), M("X"))
    d2 = d1.add_eigen(E("tail"))
    check_metas_compatible(d1, d2)


def test_different_metas_are_incompatible():
    with pytest.raises(DomainMismatch):
        check_metas_compatible(dom(M("X")), dom(M("Y")))


def test_different_authorisations_are_incompatible():
    # X before the eigen in one domain, after it in the other
    d1 = dom(M("X"), E("e"))
    d2 = dom(E("e"), M("X"))
    with pytest.raises(DomainMismatch):
        check_metas_compatible(d1, d2)


def test_rehouse_moves_a_constraint_across_eigen_extension():
    th = SubstTheory()
    d = dom(E("e"), M("X"))
    sigma = mgu([(M("X"), E("e"))], d)
    d2 = d.add_eigen(E("fresh"))
    moved = rehouse(sigma, d2)
    assert moved.domain == d2
    assert moved.entries == sigma.entries


def test_rehouse_is_identity_on_the_same_domain():
    th = SubstTheory()
    d = dom(M("X"))
    sigma = th.top(d)
    assert rehouse(sigma, d) is sigma


def test_rehouse_refuses_changed_meta_family():
    th = SubstTheory()
    d = dom(M("X"))
    with pytest.raises(DomainMismatch):
        rehouse(th.top(d), dom(M("X"), M("Y")))


# ---------------------------------------------------------------------------
# literal pairing helpers


def lit(name, *args):
    return pos(PredAtom(name, tuple(args)))


def nlit(name, *args):
    return Literal(False, PredAtom(name, tuple(args)))


def test_complementary_pair_is_syntactic():
    assert complementary_pair((lit("p", a), nlit("p", a))) is not None
    assert complementary_pair((lit("p", a), nlit("q", a))) is None
    assert complementary_pair((lit("p", a), lit("p", a))) is None


def test_dual_pred_pairs_matches_name_arity_and_sign():
    lits = (lit("p", M("X")), nlit("p", a), nlit("p", M("Y")), lit("q", a))
    pairs = list(dual_pred_pairs(lits))
    assert len(pairs) == 2
    for l, l2 in pairs:
        assert l.positive != l2.positive
        assert l.atom.name == l2.atom.name


def test_dual_pred_pairs_is_deterministic():
    lits = (lit("p", M("X")), nlit("p", a), nlit("p", M("Y")))
    assert list(dual_pred_pairs(lits)) == list(dual_pred_pairs(lits))


# ---------------------------------------------------------------------------
# the candidate stream


def test_candidate_stream_advances_a_persistent_cursor():
    log = []

    def combine(x, current):
        log.append((x, current))
        return x + current

    s = CandidateStream([(frozenset(), 1), (frozenset(), 2), (frozenset(), 3)], combine)
    assert s.pull(10) == (frozenset(), 11)
    assert s.pull(20) == (frozenset(), 22)
    assert s.pull(30) == (frozenset(), 33)
    assert s.pull(40) is None
    assert s.pull(50) is None


def test_candidate_stream_skips_rejected_candidates():
    def combine(x, current):
        return None if x % 2 else x

    s = CandidateStream([(frozenset(), 1), (frozenset(), 2), (frozenset(), 3),
                         (frozenset(), 4)], combine)
    assert s.pull(0) == (frozenset(), 2)
    assert s.pull(0) == (frozenset(), 4)
    assert s.pull(0) is None


def test_candidate_stream_reports_used_literals():
    used = frozenset({lit("p", a)})
    s = CandidateStream([(used, 7)], lambda x, cur: x)
    got_used, got = s.pull(0)
    assert got_used == used and got == 7

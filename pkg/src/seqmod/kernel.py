"""Search kernel for one-sided sequents with constraint backends.

Two calculi share one engine.  In producing mode (di) the branches are
independent: each leaf closure produces a constraint, conjunction nodes
meet their children's outputs, and existential nodes project the
introduced meta-variable.  In refining mode (sdi) a constraint is
threaded through the tree: each node receives an input, the first
conjunct's output becomes the second conjunct's input, and leaves refine
the input they are given.  Constraints flow from the leaves back to the
root, where, over a meta-free domain, the empty instantiation must be
compatible with the final constraint for the run to count as proved.

Rule application order is fixed: disjunctions first, then universals,
then under-budget existential expansions, then conjunctions, and leaf
closure last.  Premises are prepended to the remaining context, so the
most recently produced formulas are examined first.  Existential
expansion keeps the quantified formula in context with a per-occurrence
budget, raised by iterative deepening (1, 2, 4, ... up to the cap).
Backtracking is chronological: the most recent choice point (a leaf
stream or a sibling alternative) is retried first.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional

from .terms import (
    And,
    BoundVar,
    Context,
    Domain,
    EigenVar,
    Exists,
    Forall,
    Formula,
    Instantiation,
    Literal,
    MetaVar,
    Or,
    formula_vars,
    literal_vars,
    literals_of,
    substitute,
)
from .theory import ResourceLimit, Theory, rehouse

log = logging.getLogger("seqmod.kernel")


class IllFormed(ValueError):
    """The goal context is not well formed over the starting domain."""


@dataclass(frozen=True)
class Sequent:
    domain: Domain
    context: Context
    input: Optional[object] = None  # None in producing mode


@dataclass(frozen=True)
class ProofTree:
    """One derivation node; children follow the formula order of the rule."""

    rule: str  # "or" | "and" | "exists" | "forall" | "leaf"
    sequent: Sequent
    output: object
    children: tuple["ProofTree", ...] = ()
    principal: int = -1
    meta: Optional[MetaVar] = None
    eigen: Optional[EigenVar] = None
    order_bit: int = 0
    used: frozenset[Literal] = frozenset()
    stream_index: int = -1

    def walk(self) -> Iterator["ProofTree"]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass(frozen=True)
class SearchConfig:
    calculus: str = "sdi"  # "di" | "sdi"
    order: str = "left"  # first conjunct explored: "left" | "right" | "random"
    seed: int = 0
    max_exists: int = 4
    pulls: int = 32
    nodes: int = 10000
    p_mode: str = "satisfiable"  # "satisfiable" | "always"


@dataclass
class SearchStats:
    nodes: int = 0
    pulls: int = 0
    backtracks: int = 0
    rounds: int = 0
    memo_hits: int = 0

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "pulls": self.pulls,
            "backtracks": self.backtracks,
            "rounds": self.rounds,
            "memo_hits": self.memo_hits,
        }


@dataclass(frozen=True)
class SearchOutcome:
    status: str  # "proved" | "exhausted" | "resource"
    tree: Optional[ProofTree]
    constraint: Optional[object]
    stats: SearchStats
    detail: str = ""


Entry = tuple[Formula, int]


class _LazyList:
    """Cache of a generator's items supporting repeated iteration.

    Search subproblems are keyed by (entries, domain, input); re-entry
    with an identical key replays cached alternatives before resuming
    the underlying generator.  Identical keys never nest within their
    own computation because every rule strictly transforms its premise.
    """

    def __init__(self, source: Iterator) -> None:
        self.items: list = []
        self.source = source
        self.done = False

    def iter(self) -> Iterator:
        i = 0
        while True:
            while i < len(self.items):
                yield self.items[i]
                i += 1
            if self.done:
                return
            try:
                item = next(self.source)
            except StopIteration:
                self.done = True
                return
            self.items.append(item)


def _well_formed(context: Context, domain: Domain) -> None:
    declared = set(domain.decls)
    for f in context:
        for v in formula_vars(f):
            if isinstance(v, BoundVar):
                raise IllFormed("free bound variable %s in %s" % (v.name, f))
            if v not in declared:
                raise IllFormed("undeclared variable %s in %s" % (v, f))


class _Search:
    def __init__(self, theory: Theory, cfg: SearchConfig) -> None:
        self.theory = theory
        self.cfg = cfg
        self.sdi = cfg.calculus == "sdi"
        self.stats = SearchStats()
        self.memo: dict = {}
        self.used_names: set[str] = set()
        self.counters: dict[str, int] = {}
        self.exists_blocked = False
        self.nodes_exhausted = False

    # -- fresh names ---------------------------------------------------------

    def fresh_meta(self, base: str, sort: str) -> MetaVar:
        return MetaVar(self._fresh(base.split("!")[0].upper() or "X"), sort)

    def fresh_eigen(self, base: str, sort: str) -> EigenVar:
        return EigenVar(self._fresh(base.split("!")[0] or "c"), sort)

    def _fresh(self, base: str) -> str:
        n = self.counters.get(base, 0)
        while True:
            n += 1
            name = "%s%d" % (base, n)
            if name not in self.used_names:
                self.counters[base] = n
                self.used_names.add(name)
                return name

    # -- rule selection --------------------------------------------------

    @staticmethod
    def _select(entries: tuple[Entry, ...], budget: int) -> tuple[str, int]:
        # A never-instantiated existential fires before conjunctions so
        # that every disjunct contributes its meta-variables early, but a
        # contraction copy waits until the branch has split; re-expanding
        # it first would spend the whole budget before the branch's
        # universals declare the eigenvariables the new instance needs.
        for kind, pick in (
            ("or", lambda f, k: isinstance(f, Or)),
            ("forall", lambda f, k: isinstance(f, Forall)),
            ("exists", lambda f, k: isinstance(f, Exists) and k == 0 and k < budget),
            ("and", lambda f, k: isinstance(f, And)),
            ("exists", lambda f, k: isinstance(f, Exists) and k < budget),
        ):
            for i, (f, k) in enumerate(entries):
                if pick(f, k):
                    return kind, i
        return "leaf", -1

    def _order_bit(self, path: tuple[str, ...]) -> int:
        if self.cfg.order == "left":
            return 0
        if self.cfg.order == "right":
            return 1
        digest = hashlib.blake2b(
            ("%d|%s" % (self.cfg.seed, "/".join(path))).encode(), digest_size=2
        ).digest()
        return digest[0] & 1

    def _alts(self, gen: Iterator) -> Iterator:
        first = True
        for item in gen:
            if not first:
                self.stats.backtracks += 1
            first = False
            yield item

    # -- the engine --------------------------------------------------------

    def solve(self, entries, domain, current, path, budget) -> Iterator:
        key = (entries, domain, current)
        cache = self.memo.get(key)
        if cache is None:
            cache = _LazyList(self._solve_raw(entries, domain, current, path, budget))
            self.memo[key] = cache
        else:
            self.stats.memo_hits += 1
        return cache.iter()

    def _solve_raw(self, entries, domain, current, path, budget) -> Iterator:
        if self.stats.nodes >= self.cfg.nodes:
            self.nodes_exhausted = True
            return
        self.stats.nodes += 1
        kind, idx = self._select(entries, budget)
        context = tuple(f for f, _ in entries)
        seq = Sequent(domain, context, current if self.sdi else None)
        log.debug("rule %s at %s (domain %d decls)", kind, idx, len(domain.decls))
        rest = entries[:idx] + entries[idx + 1:] if idx >= 0 else entries

        if kind == "or":
            f = entries[idx][0]
            child = ((f.left, 0), (f.right, 0)) + rest
            for t, out in self._alts(self.solve(child, domain, current, path + ("o",), budget)):
                yield ProofTree("or", seq, out, (t,), principal=idx), out
            return

        if kind == "forall":
            f = entries[idx][0]
            eigen = self.fresh_eigen(f.var, f.sort)
            child = ((substitute(f.body, f.var, eigen), 0),) + rest
            d2 = domain.add_eigen(eigen)
            # The threaded input must see the new eigenvariable, or later
            # lifts would compute authorised sets that are too small.
            child_in = rehouse(current, d2) if self.sdi else None
            for t, out in self._alts(self.solve(child, d2, child_in, path + ("f",), budget)):
                yield ProofTree("forall", seq, out, (t,), principal=idx, eigen=eigen), out
            return

        if kind == "exists":
            f, count = entries[idx]
            meta = self.fresh_meta(f.var, f.sort)
            d2 = domain.add_meta(meta)
            child = ((substitute(f.body, f.var, meta), 0), (f, count + 1)) + rest
            child_in = self.theory.lift(current, meta) if self.sdi else None
            for t, child_out in self._alts(self.solve(child, d2, child_in, path + ("e",), budget)):
                out = self.theory.project(child_out, meta)
                yield ProofTree("exists", seq, out, (t,), principal=idx, meta=meta), out
            return

        if kind == "and":
            f = entries[idx][0]
            bit = self._order_bit(path)
            parts = (f.left, f.right)
            first_ctx = ((parts[bit], 0),) + rest
            second_ctx = ((parts[1 - bit], 0),) + rest
            first_path = path + ("a%d" % bit,)
            second_path = path + ("a%d" % (1 - bit),)
            if self.sdi:
                for t1, o1 in self._alts(self.solve(first_ctx, domain, current, first_path, budget)):
                    for t2, o2 in self._alts(self.solve(second_ctx, domain, o1, second_path, budget)):
                        children = (t1, t2) if bit == 0 else (t2, t1)
                        yield ProofTree("and", seq, o2, children, principal=idx, order_bit=bit), o2
            else:
                for t1, o1 in self._alts(self.solve(first_ctx, domain, None, first_path, budget)):
                    for t2, o2 in self._alts(self.solve(second_ctx, domain, None, second_path, budget)):
                        met = self.theory.meet(o1, o2)
                        if met is None:
                            self.stats.backtracks += 1
                            continue
                        children = (t1, t2) if bit == 0 else (t2, t1)
                        yield ProofTree("and", seq, met, children, principal=idx, order_bit=bit), met
            return

        # Leaf attempt.
        if any(isinstance(f, Exists) for f, _ in entries):
            self.exists_blocked = True
        lits = literals_of(context)
        stream = self.theory.consistency(lits, domain)
        inp = current if self.sdi else self.theory.top(domain)
        for k in range(self.cfg.pulls):
            if k > 0:
                self.stats.backtracks += 1
            res = stream.pull(inp)
            self.stats.pulls += 1
            if res is None:
                return
            used, out = res
            yield ProofTree("leaf", seq, out, (), used=used, stream_index=k), out


def _deepening_budgets(cap: int) -> list[int]:
    if cap <= 0:
        return [0]
    out = []
    b = 1
    while b < cap:
        out.append(b)
        b *= 2
    out.append(cap)
    return out


def prove(context: Context, domain: Domain, theory: Theory,
          cfg: SearchConfig = SearchConfig()) -> SearchOutcome:
    """Search for a derivation of the context over the starting domain."""
    _well_formed(context, domain)
    search = _Search(theory, cfg)
    for v in domain.decls:
        search.used_names.add(v.name)
    entries = tuple((f, 0) for f in context)
    root_input = theory.top(domain) if cfg.calculus == "sdi" else None
    gate = not domain.metas  # the empty-instantiation gate applies at a meta-free root
    rho_empty = Instantiation.empty(domain) if gate else None
    try:
        for b in _deepening_budgets(cfg.max_exists):
            search.stats.rounds += 1
            search.memo.clear()
            search.exists_blocked = False
            for tree, out in search.solve(entries, domain, root_input, (), b):
                if gate and not theory.compatible(rho_empty, out):
                    search.stats.backtracks += 1
                    continue
                log.info("proved in round %d (%d nodes)", search.stats.rounds, search.stats.nodes)
                return SearchOutcome("proved", tree, out, search.stats)
            if not search.exists_blocked and not search.nodes_exhausted:
                # Deeper expansion budgets cannot change anything.
                break
    except ResourceLimit as exc:
        return SearchOutcome("resource", None, None, search.stats, str(exc))
    detail = "node budget exhausted" if search.nodes_exhausted else "alternatives exhausted"
    return SearchOutcome("exhausted", None, None, search.stats, detail)


def prove_di(context: Context, domain: Domain, theory: Theory,
             cfg: SearchConfig = SearchConfig()) -> SearchOutcome:
    return prove(context, domain, theory, replace(cfg, calculus="di"))


def prove_sdi(context: Context, domain: Domain, theory: Theory,
              cfg: SearchConfig = SearchConfig()) -> SearchOutcome:
    return prove(context, domain, theory, replace(cfg, calculus="sdi"))


# ---------------------------------------------------------------------------
# Independent audit of a finished derivation


def _expect(cond: bool, diags: list[str], msg: str) -> bool:
    if not cond:
        diags.append(msg)
    return cond


def check_proof(tree: ProofTree, theory: Theory) -> tuple[bool, list[str]]:
    """Recompute every rule application of a derivation.

    Checks context bookkeeping (as multisets), domain growth, constraint
    threading, and replays each leaf's stream to its recorded index.
    Returns (ok, diagnostics).
    """
    diags: list[str] = []
    _check_node(tree, theory, diags)
    return not diags, diags


def _check_node(node: ProofTree, theory: Theory, diags: list[str]) -> None:
    seq = node.sequent
    ctx = Counter(seq.context)
    sdi = seq.input is not None

    if node.rule == "leaf":
        _expect(not node.children, diags, "leaf with children")
        lits = literals_of(seq.context)
        stream = theory.consistency(lits, seq.domain)
        inp = seq.input if sdi else theory.top(seq.domain)
        got = None
        for k in range(node.stream_index + 1):
            got = stream.pull(inp)
            if got is None:
                _expect(False, diags, "leaf stream exhausted before index %d" % node.stream_index)
                return
        _expect(got == (node.used, node.output), diags,
                "leaf replay mismatch at index %d" % node.stream_index)
        _expect(node.used <= set(lits), diags, "leaf used literals outside the context")
        return

    if not _expect(0 <= node.principal < len(seq.context), diags, "principal index out of range"):
        return
    principal = seq.context[node.principal]
    removed = ctx - Counter([principal])

    def child_ctx_ok(child: ProofTree, added: list[Formula]) -> bool:
        return Counter(child.sequent.context) == removed + Counter(added)

    if node.rule == "or":
        if not _expect(isinstance(principal, Or), diags, "or rule on non-disjunction"):
            return
        (child,) = node.children
        _expect(child.sequent.domain == seq.domain, diags, "or child changed the domain")
        _expect(child_ctx_ok(child, [principal.left, principal.right]), diags,
                "or child context mismatch")
        if sdi:
            _expect(child.sequent.input == seq.input, diags, "or input not passed through")
        _expect(node.output == child.output, diags, "or output not passed through")

    elif node.rule == "forall":
        if not _expect(isinstance(principal, Forall), diags, "forall rule on non-universal"):
            return
        (child,) = node.children
        eigen = node.eigen
        if not _expect(eigen is not None and eigen.sort == principal.sort, diags,
                       "forall eigenvariable missing or ill-sorted"):
            return
        _expect(child.sequent.domain == seq.domain.add_eigen(eigen), diags,
                "forall child domain mismatch")
        _expect(child_ctx_ok(child, [substitute(principal.body, principal.var, eigen)]),
                diags, "forall child context mismatch")
        if sdi:
            _expect(child.sequent.input == rehouse(seq.input, child.sequent.domain),
                    diags, "forall input not passed through")
        _expect(node.output == child.output, diags, "forall output not passed through")

    elif node.rule == "exists":
        if not _expect(isinstance(principal, Exists), diags, "exists rule on non-existential"):
            return
        (child,) = node.children
        meta = node.meta
        if not _expect(meta is not None and meta.sort == principal.sort, diags,
                       "exists meta-variable missing or ill-sorted"):
            return
        _expect(child.sequent.domain == seq.domain.add_meta(meta), diags,
                "exists child domain mismatch")
        _expect(child_ctx_ok(child, [substitute(principal.body, principal.var, meta), principal]),
                diags, "exists child must keep the existential in context")
        if sdi:
            _expect(child.sequent.input == theory.lift(seq.input, meta), diags,
                    "exists input not lifted")
        _expect(node.output == theory.project(child.output, meta), diags,
                "exists output is not the projected child output")

    elif node.rule == "and":
        if not _expect(isinstance(principal, And), diags, "and rule on non-conjunction"):
            return
        if not _expect(len(node.children) == 2, diags, "and node needs two children"):
            return
        left, right = node.children
        _expect(child_ctx_ok(left, [principal.left]), diags, "left conjunct context mismatch")
        _expect(child_ctx_ok(right, [principal.right]), diags, "right conjunct context mismatch")
        for c in node.children:
            _expect(c.sequent.domain == seq.domain, diags, "and child changed the domain")
        first = node.children[node.order_bit]
        second = node.children[1 - node.order_bit]
        if sdi:
            _expect(first.sequent.input == seq.input, diags,
                    "first conjunct input mismatch")
            _expect(second.sequent.input == first.output, diags,
                    "second conjunct must consume the first conjunct's output")
            _expect(node.output == second.output, diags, "and output mismatch")
        else:
            met = theory.meet(left.output, right.output)
            _expect(met is not None and met == node.output, diags,
                    "and output is not the meet of its children")

    else:
        _expect(False, diags, "unknown rule %r" % (node.rule,))
        return

    for c in node.children:
        _check_node(c, theory, diags)


# ---------------------------------------------------------------------------
# Ground reconstruction


def check_lk1_leaf(lits, gvp: Callable[[tuple[Literal, ...]], bool]) -> bool:
    """Ground-leaf validity; errors on non-ground input."""
    lits = tuple(lits)
    for l in lits:
        if any(isinstance(v, (MetaVar, BoundVar)) for v in literal_vars(l)):
            raise IllFormed("leaf literal %s is not ground" % (l,))
    return gvp(lits)


def fold(sigma, theory: Theory) -> Instantiation:
    """Canonical instantiation of a satisfiable constraint.

    Projects the constraint level by level down to the meta-free domain,
    then extends the empty instantiation with one witness per
    meta-variable, innermost projection first.
    """
    from .theory import PreconditionError

    if not theory.satisfiable(sigma):
        raise PreconditionError("fold needs a satisfiable constraint")
    levels = []
    cur = sigma
    for decl in reversed(sigma.domain.decls):
        if isinstance(decl, MetaVar):
            levels.append((decl, cur))
            cur = theory.project(cur, decl)
    rho = Instantiation.empty(cur.domain)
    for meta, level_sigma in reversed(levels):
        t = theory.witness(level_sigma, rho)
        rho = rho.extend(level_sigma.domain, meta, t)
    return rho


def reconstruct_ground(tree: ProofTree, rho: Instantiation, theory: Theory,
                       witnesses: Optional[list] = None) -> tuple[bool, list[str]]:
    """Instantiate a derivation and audit it as a ground proof.

    Walks the tree extending rho with a witness at every existential
    node; each leaf's used literals, once instantiated, must pass the
    backend's ground validity predicate.  When a list is passed as
    `witnesses` the chosen (meta, term) pairs are appended to it.
    pre: rho is compatible with the root output.
    """
    diags: list[str] = []
    if not theory.compatible(rho, tree.output):
        return False, ["instantiation incompatible with the final constraint"]
    _reconstruct(tree, rho, theory, diags, witnesses)
    return not diags, diags


def _reconstruct(node: ProofTree, rho: Instantiation, theory: Theory,
                 diags: list[str], witnesses: Optional[list]) -> None:
    if node.rule == "leaf":
        ground = tuple(rho.apply_literal(l) for l in sorted(node.used, key=str))
        if not check_lk1_leaf(ground, theory.ground_valid):
            diags.append("leaf %s not valid under %s" % ([str(g) for g in ground], rho))
        return
    if node.rule == "exists":
        (child,) = node.children
        try:
            t = theory.witness(child.output, rho)
        except Exception as exc:  # surfaced as an audit failure, not a crash
            diags.append("witness failed at %s: %s" % (node.meta, exc))
            return
        if witnesses is not None:
            witnesses.append((node.meta, t))
        rho2 = rho.extend(child.output.domain, node.meta, t)
        if not theory.compatible(rho2, child.output):
            diags.append("extended instantiation incompatible below %s" % (node.meta,))
            return
        _reconstruct(child, rho2, theory, diags, witnesses)
        return
    for child in node.children:
        if not theory.compatible(rho, child.output):
            diags.append("instantiation incompatible with a %s child" % (node.rule,))
            continue
        _reconstruct(child, rho, theory, diags, witnesses)

"""Problem files, normal form construction, and run orchestration.

A problem is a sequence of s-expressions:

    (declare-pred p 2)              ; both arguments term-sorted
    (declare-pred bound (rat rat))  ; explicit argument sorts
    (declare-fun f 1)
    (declare-const a)
    (goal (forall (x) (exists (y) (or (not (p x y)) (p x y)))))

Formulas use and / or / not / => / forall / exists and atoms.  Binders
take a symbol, a list of symbols, or a list of (name sort) pairs; an
unannotated binder gets its sort from use (arithmetic positions force
rat, uninterpreted positions force term, conflicts are errors, the
default is term).  Terms are variables, constants, (f t ...), rational
literals (integers or p/q), and linear arithmetic built from (+ ...),
(- ...) and (* q t).  (>= a b) and (> a b) are accepted and stored
swapped.

Goals are normalised on construction: negation is pushed to the atoms,
a negated inequality flips into its complement, and a negated equality
becomes a disjunction of strict inequalities.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import kernel
from .fol import SubstTheory
from .ground import GroundEnumTheory
from .kernel import ProofTree, SearchConfig, SearchOutcome
from .lra import LraTheory
from .terms import (
    And,
    ArithAtom,
    BoundVar,
    Context,
    Domain,
    EigenVar,
    Exists,
    Forall,
    Formula,
    FunApp,
    Instantiation,
    LinTerm,
    Lit,
    Literal,
    MetaVar,
    Or,
    PredAtom,
    RatConst,
    Signature,
    SORT_RAT,
    SORT_TERM,
    Term,
    lin_combine,
    term_sort,
)
from .theory import Theory

log = logging.getLogger("seqmod.frontend")

RESERVED = {
    "and", "or", "not", "=>", "forall", "exists",
    "<=", "<", "=", ">=", ">", "+", "-", "*",
    "term", "rat",
    "declare-pred", "declare-fun", "declare-const", "goal",
}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int) -> None:
        super().__init__("%d:%d: %s" % (line, col, msg))
        self.msg = msg
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SNode:
    """One s-expression with its source position."""

    value: Union[str, tuple["SNode", ...]]
    line: int
    col: int

    @property
    def is_symbol(self) -> bool:
        return isinstance(self.value, str)

    def err(self, msg: str) -> ParseError:
        return ParseError(msg, self.line, self.col)


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            yield text[start:i], line, start_col
    yield None, line, col


def read_sexprs(text: str) -> tuple[SNode, ...]:
    tokens = _tokenize(text)
    stack: list[tuple[list[SNode], int, int]] = []
    top: list[SNode] = []
    for tok, line, col in tokens:
        if tok is None:
            if stack:
                _, l0, c0 = stack[-1]
                raise ParseError("unclosed parenthesis", l0, c0)
            return tuple(top)
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise ParseError("unmatched closing parenthesis", line, col)
            items, l0, c0 = stack.pop()
            node = SNode(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
        else:
            node = SNode(tok, line, col)
            (stack[-1][0] if stack else top).append(node)
    return tuple(top)


def _rational(text: str) -> Optional[Fraction]:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


# ---------------------------------------------------------------------------
# Problems


@dataclass(frozen=True)
class Problem:
    name: str
    signature: Signature
    goals: Context


class _GoalBuilder:
    """Two passes over one goal s-expression.

    The first pass records, per binder occurrence, which sorts its
    variable is used at.  The second pass builds the normal form with
    the resolved sorts.
    """

    def __init__(self, sig: Signature) -> None:
        self.sig = sig
        self.evidence: dict[int, set[str]] = {}
        self.counter = 0

    # -- shared shape helpers ----------------------------------------------

    def binder_specs(self, node: SNode) -> list[tuple[SNode, Optional[str]]]:
        if node.is_symbol:
            return [(node, None)]
        out: list[tuple[SNode, Optional[str]]] = []
        for item in node.value:
            if item.is_symbol:
                out.append((item, None))
            elif (len(item.value) == 2 and item.value[0].is_symbol
                  and item.value[1].is_symbol):
                name_node, sort_node = item.value
                if sort_node.value not in (SORT_TERM, SORT_RAT):
                    raise sort_node.err("unknown sort %r" % (sort_node.value,))
                out.append((name_node, sort_node.value))
            else:
                raise item.err("expected a variable or (variable sort)")
        if not out:
            raise node.err("empty binder list")
        for name_node, _ in out:
            name = name_node.value
            if not isinstance(name, str) or name in RESERVED:
                raise name_node.err("invalid variable name %r" % (name,))
            if _rational(name) is not None:
                raise name_node.err("a number cannot be a variable name")
        return out

    @staticmethod
    def _head(node: SNode) -> Optional[str]:
        if node.is_symbol or not node.value or not node.value[0].is_symbol:
            return None
        return node.value[0].value

    # -- pass one: sort evidence ---------------------------------------------

    def collect(self, node: SNode, env: dict[str, set[str]]) -> None:
        head = self._head(node)
        if head in ("and", "or", "=>"):
            for sub in node.value[1:]:
                self.collect(sub, env)
        elif head == "not":
            if len(node.value) == 2:
                self.collect(node.value[1], env)
        elif head in ("forall", "exists"):
            if len(node.value) != 3:
                return
            specs = self.binder_specs(node.value[1])
            inner = dict(env)
            for name_node, explicit in specs:
                sorts = self.evidence.setdefault(id(name_node), set())
                if explicit:
                    sorts.add(explicit)
                inner[name_node.value] = sorts
            self.collect(node.value[2], inner)
        elif head in ("<=", "<", "=", ">=", ">"):
            for sub in node.value[1:]:
                self.collect_term(sub, SORT_RAT, env)
        elif head is not None and self.sig.pred_sorts(head) is not None:
            for sub, sort in zip(node.value[1:], self.sig.pred_sorts(head)):
                self.collect_term(sub, sort, env)
        # Bare symbols and malformed shapes produce errors in pass two.

    def collect_term(self, node: SNode, expected: str, env: dict[str, set[str]]) -> None:
        if node.is_symbol:
            if node.value in env:
                env[node.value].add(expected)
            return
        head = self._head(node)
        if head in ("+", "-"):
            for sub in node.value[1:]:
                self.collect_term(sub, SORT_RAT, env)
        elif head == "*":
            for sub in node.value[1:]:
                self.collect_term(sub, SORT_RAT, env)
        elif head is not None and self.sig.fun_arity(head) is not None:
            for sub in node.value[1:]:
                self.collect_term(sub, SORT_TERM, env)

    # -- pass two: construction ----------------------------------------------

    def build(self, node: SNode, positive: bool, env: dict[str, BoundVar]) -> Formula:
        head = self._head(node)
        if head in ("and", "or"):
            subs = node.value[1:]
            if len(subs) < 2:
                raise node.err("%s needs at least two operands" % head)
            conj = (head == "and") == positive
            parts = [self.build(sub, positive, env) for sub in subs]
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = And(p, out) if conj else Or(p, out)
            return out
        if head == "not":
            if len(node.value) != 2:
                raise node.err("not takes one operand")
            return self.build(node.value[1], not positive, env)
        if head == "=>":
            if len(node.value) != 3:
                raise node.err("=> takes two operands")
            a = self.build(node.value[1], not positive, env)
            b = self.build(node.value[2], positive, env)
            return Or(a, b) if positive else And(a, b)
        if head in ("forall", "exists"):
            if len(node.value) != 3:
                raise node.err("%s takes a binder list and a body" % head)
            specs = self.binder_specs(node.value[1])
            inner = dict(env)
            resolved: list[tuple[str, str]] = []
            for name_node, explicit in specs:
                sort = explicit or self._resolve_sort(name_node)
                internal = "%s!%d" % (name_node.value, self.counter)
                self.counter += 1
                inner[name_node.value] = BoundVar(internal, sort)
                resolved.append((internal, sort))
            body = self.build(node.value[2], positive, inner)
            universal = (head == "forall") == positive
            cls = Forall if universal else Exists
            for internal, sort in reversed(resolved):
                body = cls(internal, sort, body)
            return body
        return self.atom(node, positive, env)

    def _resolve_sort(self, name_node: SNode) -> str:
        sorts = self.evidence.get(id(name_node), set())
        if sorts == {SORT_TERM, SORT_RAT}:
            raise name_node.err(
                "variable %s is used at both sorts" % (name_node.value,))
        if SORT_RAT in sorts:
            return SORT_RAT
        return SORT_TERM

    def atom(self, node: SNode, positive: bool, env: dict[str, BoundVar]) -> Formula:
        if node.is_symbol:
            sorts = self.sig.pred_sorts(node.value)
            if sorts == ():
                return Lit(Literal(positive, PredAtom(node.value, ())))
            if node.value in env:
                raise node.err("variable %s used as a formula" % (node.value,))
            raise node.err("unknown proposition %r" % (node.value,))
        head = self._head(node)
        if head is None:
            raise node.err("expected a formula")
        if head in ("<=", "<", "=", ">=", ">"):
            if len(node.value) != 3:
                raise node.err("%s takes two operands" % head)
            a = self.term(node.value[1], SORT_RAT, env)
            b = self.term(node.value[2], SORT_RAT, env)
            if head == ">=":
                head, a, b = "<=", b, a
            elif head == ">":
                head, a, b = "<", b, a
            if positive:
                return Lit(Literal(True, ArithAtom(head, a, b)))
            if head == "<=":
                return Lit(Literal(True, ArithAtom("<", b, a)))
            if head == "<":
                return Lit(Literal(True, ArithAtom("<=", b, a)))
            return Or(Lit(Literal(True, ArithAtom("<", a, b))),
                      Lit(Literal(True, ArithAtom("<", b, a))))
        sorts = self.sig.pred_sorts(head)
        if sorts is None:
            raise node.err("unknown predicate %r" % (head,))
        args = node.value[1:]
        if len(args) != len(sorts):
            raise node.err("%s takes %d arguments, got %d" % (head, len(sorts), len(args)))
        terms = tuple(self.term(a, s, env) for a, s in zip(args, sorts))
        return Lit(Literal(positive, PredAtom(head, terms)))

    def term(self, node: SNode, expected: str, env: dict[str, BoundVar]) -> Term:
        if node.is_symbol:
            name = node.value
            if name in env:
                v = env[name]
                if v.sort != expected:
                    raise node.err("variable %s has sort %s, expected %s"
                                   % (name, v.sort, expected))
                return v
            q = _rational(name)
            if q is not None:
                if expected != SORT_RAT:
                    raise node.err("number in a term-sorted position")
                return RatConst(q)
            if name in self.sig.consts:
                if expected != SORT_TERM:
                    raise node.err("constant %s is term-sorted" % (name,))
                return FunApp(name, ())
            if self.sig.fun_arity(name) == 0:
                return FunApp(name, ())
            raise node.err("unknown symbol %r" % (name,))
        head = self._head(node)
        if head == "+":
            if expected != SORT_RAT:
                raise node.err("arithmetic in a term-sorted position")
            parts = [self.term(sub, SORT_RAT, env) for sub in node.value[1:]]
            if not parts:
                raise node.err("+ needs operands")
            return lin_combine(*((Fraction(1), p) for p in parts))
        if head == "-":
            if expected != SORT_RAT:
                raise node.err("arithmetic in a term-sorted position")
            parts = [self.term(sub, SORT_RAT, env) for sub in node.value[1:]]
            if len(parts) == 1:
                return lin_combine((Fraction(-1), parts[0]))
            if len(parts) == 2:
                return lin_combine((Fraction(1), parts[0]), (Fraction(-1), parts[1]))
            raise node.err("- takes one or two operands")
        if head == "*":
            if expected != SORT_RAT:
                raise node.err("arithmetic in a term-sorted position")
            if len(node.value) != 3:
                raise node.err("* takes a rational literal and a term")
            first, second = node.value[1], node.value[2]
            q = _rational(first.value) if first.is_symbol else None
            operand = second
            if q is None:
                q = _rational(second.value) if second.is_symbol else None
                operand = first
            if q is None:
                raise node.err("* needs a rational literal operand")
            return lin_combine((q, self.term(operand, SORT_RAT, env)))
        arity = self.sig.fun_arity(head) if head else None
        if arity is not None:
            if expected != SORT_TERM:
                raise node.err("function application in a rational position")
            args = node.value[1:]
            if len(args) != arity:
                raise node.err("%s takes %d arguments, got %d" % (head, arity, len(args)))
            return FunApp(head, tuple(self.term(a, SORT_TERM, env) for a in args))
        raise node.err("cannot parse term")


def parse_problem(text: str, name: str = "<input>") -> Problem:
    preds: list[tuple[str, tuple[str, ...]]] = []
    funs: list[tuple[str, int]] = []
    consts: list[str] = []
    goal_nodes: list[SNode] = []
    declared: set[str] = set()

    def declare(node: SNode, symbol: str) -> None:
        if symbol in RESERVED or _rational(symbol) is not None:
            raise node.err("invalid name %r" % (symbol,))
        if symbol in declared:
            raise node.err("%s is already declared" % (symbol,))
        declared.add(symbol)

    for form in read_sexprs(text):
        if form.is_symbol or not form.value or not form.value[0].is_symbol:
            raise form.err("expected a declaration or a goal")
        head = form.value[0].value
        rest = form.value[1:]
        if head == "declare-pred":
            if len(rest) != 2 or not rest[0].is_symbol:
                raise form.err("usage: (declare-pred name arity-or-sorts)")
            declare(rest[0], rest[0].value)
            if rest[1].is_symbol:
                arity = _rational(rest[1].value)
                if arity is None or arity.denominator != 1 or arity < 0:
                    raise rest[1].err("arity must be a natural number")
                sorts = (SORT_TERM,) * int(arity)
            else:
                sorts = tuple(
                    s.value for s in rest[1].value
                    if s.is_symbol and s.value in (SORT_TERM, SORT_RAT)
                )
                if len(sorts) != len(rest[1].value):
                    raise rest[1].err("sorts are term and rat")
            preds.append((rest[0].value, sorts))
        elif head == "declare-fun":
            if len(rest) != 2 or not rest[0].is_symbol or not rest[1].is_symbol:
                raise form.err("usage: (declare-fun name arity)")
            declare(rest[0], rest[0].value)
            arity = _rational(rest[1].value)
            if arity is None or arity.denominator != 1 or arity < 1:
                raise rest[1].err("arity must be a positive integer")
            funs.append((rest[0].value, int(arity)))
        elif head == "declare-const":
            if len(rest) != 1 or not rest[0].is_symbol:
                raise form.err("usage: (declare-const name)")
            declare(rest[0], rest[0].value)
            consts.append(rest[0].value)
        elif head == "goal":
            if len(rest) != 1:
                raise form.err("usage: (goal formula)")
            goal_nodes.append(rest[0])
        else:
            raise form.err("unknown form %r" % (head,))
    if not goal_nodes:
        raise ParseError("no goal", 1, 1)

    sig = Signature(tuple(preds), tuple(funs), tuple(consts))
    sig = _ensure_term_base(sig, declared)
    goals = []
    for node in goal_nodes:
        builder = _GoalBuilder(sig)
        builder.collect(node, {})
        goals.append(builder.build(node, True, {}))
    return Problem(name, sig, tuple(goals))


def _ensure_term_base(sig: Signature, declared: set[str]) -> Signature:
    """Guarantee a closed term of the uninterpreted sort when one is needed."""
    needs = bool(sig.funs) or any(SORT_TERM in sorts for _, sorts in sig.preds)
    if not needs or sig.consts:
        return sig
    n = 0
    while "c%d" % n in declared:
        n += 1
    return replace(sig, consts=("c%d" % n,))


# ---------------------------------------------------------------------------
# Rendering


def render_term(t: Term) -> str:
    if isinstance(t, RatConst):
        return str(t.value)
    if isinstance(t, BoundVar):
        return t.name.split("!")[0]
    if isinstance(t, (EigenVar, MetaVar)):
        return t.name
    if isinstance(t, FunApp):
        if not t.args:
            return t.symbol
        return "(%s %s)" % (t.symbol, " ".join(render_term(a) for a in t.args))
    if isinstance(t, LinTerm):
        parts = []
        for v, c in t.coeffs:
            parts.append(render_term(v) if c == 1 else "(* %s %s)" % (c, render_term(v)))
        if t.const != 0 or not parts:
            parts.append(str(t.const))
        if len(parts) == 1:
            return parts[0]
        return "(+ %s)" % " ".join(parts)
    raise TypeError(t)


def render_formula(f: Formula) -> str:
    if isinstance(f, Lit):
        lit = f.lit
        if isinstance(lit.atom, ArithAtom):
            if not lit.positive:
                raise ValueError("negated arithmetic literal in normal form output")
            return "(%s %s %s)" % (lit.atom.op, render_term(lit.atom.lhs),
                                   render_term(lit.atom.rhs))
        body = lit.atom.name if not lit.atom.args else "(%s %s)" % (
            lit.atom.name, " ".join(render_term(a) for a in lit.atom.args))
        return body if lit.positive else "(not %s)" % body
    if isinstance(f, And):
        return "(and %s %s)" % (render_formula(f.left), render_formula(f.right))
    if isinstance(f, Or):
        return "(or %s %s)" % (render_formula(f.left), render_formula(f.right))
    if isinstance(f, (Forall, Exists)):
        head = "forall" if isinstance(f, Forall) else "exists"
        return "(%s ((%s %s)) %s)" % (head, f.var.split("!")[0], f.sort,
                                      render_formula(f.body))
    raise TypeError(f)


def print_problem(problem: Problem) -> str:
    lines = []
    for name, sorts in problem.signature.preds:
        lines.append("(declare-pred %s (%s))" % (name, " ".join(sorts)))
    for name, arity in problem.signature.funs:
        lines.append("(declare-fun %s %d)" % (name, arity))
    for name in problem.signature.consts:
        lines.append("(declare-const %s)" % name)
    for goal in problem.goals:
        lines.append("(goal %s)" % render_formula(goal))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Proof serialization


def _render_domain(domain: Domain) -> list[list[str]]:
    return [
        ["meta" if isinstance(v, MetaVar) else "eigen", v.name, v.sort]
        for v in domain.decls
    ]


def tree_to_json(tree: ProofTree, theory: Theory) -> dict:
    node: dict = {
        "rule": tree.rule,
        "domain": _render_domain(tree.sequent.domain),
        "context": [render_formula(f) for f in tree.sequent.context],
        "output": theory.render(tree.output),
    }
    if tree.sequent.input is not None:
        node["input"] = theory.render(tree.sequent.input)
    if tree.rule == "leaf":
        node["used"] = sorted(str(l) for l in tree.used)
        node["stream_index"] = tree.stream_index
    else:
        node["principal"] = tree.principal
    if tree.rule == "exists":
        node["meta"] = tree.meta.name
    if tree.rule == "forall":
        node["eigen"] = tree.eigen.name
    if tree.rule == "and":
        node["order_bit"] = tree.order_bit
    if tree.children:
        node["children"] = [tree_to_json(c, theory) for c in tree.children]
    return node


# ---------------------------------------------------------------------------
# Orchestration


def make_theory(name: str, problem: Problem, depth: int = 3) -> Theory:
    if name == "fol":
        base = tuple(FunApp(c, ()) for c in problem.signature.consts)
        return SubstTheory(ground_base=base)
    if name == "enum":
        return GroundEnumTheory(problem.signature, ceiling=depth)
    if name == "lra":
        return LraTheory()
    raise ValueError("unknown theory %r" % (name,))


@dataclass
class RunReport:
    problem: str
    config: dict
    outcome: str
    detail: str = ""
    constraint: Optional[str] = None
    proof: Optional[dict] = None
    witnesses: Optional[list[list[str]]] = None
    check: Optional[dict] = None
    stats: dict = field(default_factory=dict)
    wall_ms: float = 0.0

    def canonical(self) -> dict:
        out = {
            "problem": self.problem,
            "config": self.config,
            "outcome": self.outcome,
            "constraint": self.constraint,
            "proof": self.proof,
            "stats": self.stats,
        }
        if self.detail:
            out["detail"] = self.detail
        if self.witnesses is not None:
            out["witnesses"] = self.witnesses
        if self.check is not None:
            out["check"] = self.check
        return out

    def to_json(self) -> str:
        return json.dumps(self.canonical(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = ["%s: %s" % (self.problem, self.outcome.upper())]
        if self.detail:
            lines.append("  %s" % self.detail)
        if self.constraint is not None:
            lines.append("  constraint: %s" % self.constraint)
        if self.witnesses:
            for name, term in self.witnesses:
                lines.append("  witness %s := %s" % (name, term))
        if self.check is not None:
            lines.append("  proof check: %s" % ("ok" if self.check["proof"] else "FAILED"))
            lines.append("  reconstruction: %s"
                         % ("ok" if self.check["reconstruction"] else "FAILED"))
            for d in self.check.get("diagnostics", []):
                lines.append("    %s" % d)
        s = self.stats
        lines.append("  nodes=%s pulls=%s backtracks=%s rounds=%s"
                     % (s.get("nodes"), s.get("pulls"), s.get("backtracks"),
                        s.get("rounds")))
        lines.append("  wall: %.1f ms" % self.wall_ms)
        return "\n".join(lines)


def run(problem: Problem, theory_name: str = "fol",
        cfg: SearchConfig = SearchConfig(), depth: int = 3,
        check: bool = False) -> RunReport:
    theory = make_theory(theory_name, problem, depth)
    config = {
        "calculus": cfg.calculus,
        "theory": theory_name,
        "order": cfg.order,
        "seed": cfg.seed,
        "max_exists": cfg.max_exists,
        "pulls": cfg.pulls,
        "nodes": cfg.nodes,
        "depth": depth,
    }
    start = time.perf_counter()
    outcome = kernel.prove(problem.goals, Domain.initial(()), theory, cfg)
    report = RunReport(problem=problem.name, config=config, outcome=outcome.status,
                       detail=outcome.detail, stats=outcome.stats.as_dict())
    if outcome.status == "proved":
        report.constraint = theory.render(outcome.constraint)
        report.proof = tree_to_json(outcome.tree, theory)
        if check:
            ok_proof, diags = kernel.check_proof(outcome.tree, theory)
            rho = Instantiation.empty(Domain.initial(()))
            witnesses: list[tuple[MetaVar, Term]] = []
            ok_ground, diags2 = kernel.reconstruct_ground(
                outcome.tree, rho, theory, witnesses)
            report.witnesses = [[m.name, render_term(t)] for m, t in witnesses]
            report.check = {
                "proof": ok_proof,
                "reconstruction": ok_ground,
                "diagnostics": diags + diags2,
            }
    report.wall_ms = (time.perf_counter() - start) * 1000.0
    return report

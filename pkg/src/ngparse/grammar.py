"""Context-free grammar for a small WHILE-style language.

The grammar is fixed at import time: statements (assignment, if/else,
while), right-recursive arithmetic, comparisons/boolean combinations with
explicit delimiters, five variables and ten digit constants. Every rule's
right-hand side can be split by a single left-to-right scan with a nesting
counter, which is what makes hand-coded decomposition possible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

__all__ = [
    "Nonterminal",
    "Token",
    "ProductionRule",
    "Grammar",
    "GrammarError",
    "build_grammar",
    "validate_grammar",
    "min_subtree_depths",
    "min_yield_lengths",
]


class GrammarError(Exception):
    """Hard error for grammar-level precondition violations."""


@dataclass(frozen=True)
class Nonterminal:
    id: int
    name: str


@dataclass(frozen=True)
class Token:
    id: int
    text: str


@dataclass(frozen=True)
class ProductionRule:
    """One rewrite rule. rhs mixes Token and Nonterminal, in order."""

    id: int
    name: str
    lhs: Nonterminal
    rhs: tuple

    def rhs_nonterminals(self) -> tuple:
        return tuple(s for s in self.rhs if isinstance(s, Nonterminal))

    def rhs_terminal_count(self) -> int:
        return sum(1 for s in self.rhs if isinstance(s, Token))


# (rule name, lhs name, rhs symbols); uppercase-initial entries are
# nonterminals, everything else is a terminal string.
_NT_NAMES = ("Stmt", "SimpStmt", "AExpr", "ATerm", "AFactor", "BExpr", "Var", "Const")

_RULE_TABLE = [
    ("S1", "Stmt", ["SimpStmt", ";", "Stmt"]),
    ("S2", "Stmt", ["SimpStmt", ";"]),
    ("A1", "SimpStmt", ["Var", "=", "AExpr"]),
    ("I1", "SimpStmt", ["if", "BExpr", "then", "Stmt", "else", "Stmt", "endif"]),
    ("W1", "SimpStmt", ["while", "BExpr", "do", "Stmt", "endwhile"]),
    ("E1", "AExpr", ["ATerm", "+", "AExpr"]),
    ("E2", "AExpr", ["ATerm", "-", "AExpr"]),
    ("E3", "AExpr", ["ATerm"]),
    ("T1", "ATerm", ["AFactor", "*", "ATerm"]),
    ("T2", "ATerm", ["AFactor"]),
    ("F1", "AFactor", ["(", "AExpr", ")"]),
    ("F2", "AFactor", ["Var"]),
    ("F3", "AFactor", ["Const"]),
    ("B1", "BExpr", ["AExpr", "<", "AExpr"]),
    ("B2", "BExpr", ["AExpr", "==", "AExpr"]),
    ("B3", "BExpr", ["not", "BExpr"]),
    ("B4", "BExpr", ["(", "BExpr", "and", "BExpr", ")"]),
]
_RULE_TABLE += [(f"V{i + 1}", "Var", [f"v{i}"]) for i in range(5)]
_RULE_TABLE += [(f"C{i + 1}", "Const", [str(i)]) for i in range(10)]

# Tokens that open / close a nesting level during decomposition scans.
OPENERS = ("if", "while", "(")
CLOSERS = ("endif", "endwhile", ")")


class Grammar:
    """Immutable rule table with dense ids and lookup helpers."""

    def __init__(self, nonterminals, vocabulary, rules, start):
        self.nonterminals = tuple(nonterminals)
        self.vocabulary = tuple(vocabulary)
        self.rules = tuple(rules)
        self.start = start
        self._nt_by_name = {nt.name: nt for nt in self.nonterminals}
        self._tok_by_text = {t.text: t for t in self.vocabulary}
        self._rules_by_lhs = {nt.id: [] for nt in self.nonterminals}
        self._rule_by_name = {}
        for r in self.rules:
            self._rules_by_lhs[r.lhs.id].append(r)
            self._rule_by_name[r.name] = r

    # -- lookups -----------------------------------------------------------

    def rules_for(self, nt: Nonterminal) -> tuple:
        """All rules with the given lhs, in rule-id order."""
        if nt.id not in self._rules_by_lhs or self.nonterminals[nt.id] != nt:
            raise GrammarError(f"unknown nonterminal: {nt!r}")
        return tuple(self._rules_by_lhs[nt.id])

    def rule_by_id(self, rule_id: int) -> ProductionRule:
        if not 0 <= rule_id < len(self.rules):
            raise GrammarError(f"unknown rule id: {rule_id}")
        return self.rules[rule_id]

    def rule_by_name(self, name: str) -> ProductionRule:
        try:
            return self._rule_by_name[name]
        except KeyError:
            raise GrammarError(f"unknown rule name: {name}") from None

    def nonterminal(self, name: str) -> Nonterminal:
        try:
            return self._nt_by_name[name]
        except KeyError:
            raise GrammarError(f"unknown nonterminal name: {name}") from None

    def token(self, text: str) -> Token:
        try:
            return self._tok_by_text[text]
        except KeyError:
            raise GrammarError(f"unknown terminal: {text!r}") from None

    def encode(self, text: str) -> tuple:
        """Space-separated terminal string -> tuple of token ids."""
        return tuple(self.token(w).id for w in text.split())

    def decode(self, token_ids) -> str:
        return " ".join(self.vocabulary[i].text for i in token_ids)

    # -- fingerprints ------------------------------------------------------

    def rule_fingerprint(self) -> int:
        """64-bit digest of the canonical rule table."""
        lines = []
        for r in self.rules:
            rhs = " ".join(
                s.name if isinstance(s, Nonterminal) else s.text for s in r.rhs
            )
            lines.append(f"{r.id}\t{r.lhs.name} -> {rhs}")
        return _digest64("\n".join(lines))

    def vocab_fingerprint(self) -> int:
        return _digest64("\n".join(f"{t.id}\t{t.text}" for t in self.vocabulary))


def _digest64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def build_grammar() -> Grammar:
    """Construct the built-in WHILE grammar (32 rules, 33 terminals)."""
    nts = tuple(Nonterminal(i, name) for i, name in enumerate(_NT_NAMES))
    nt_by_name = {nt.name: nt for nt in nts}

    terminal_texts = []
    for _, _, rhs in _RULE_TABLE:
        for sym in rhs:
            if sym not in nt_by_name and sym not in terminal_texts:
                terminal_texts.append(sym)
    vocab = tuple(Token(i, text) for i, text in enumerate(terminal_texts))
    tok_by_text = {t.text: t for t in vocab}

    rules = []
    for rid, (name, lhs, rhs) in enumerate(_RULE_TABLE):
        symbols = tuple(
            nt_by_name[s] if s in nt_by_name else tok_by_text[s] for s in rhs
        )
        rules.append(ProductionRule(rid, name, nt_by_name[lhs], symbols))

    return Grammar(nts, vocab, rules, nt_by_name["Stmt"])


def validate_grammar(g: Grammar) -> list:
    """Return a list of defect strings; empty means the grammar is valid.

    Checks reachability from the start symbol, productivity (every
    nonterminal derives some terminal string), and duplicate right-hand
    sides under the same lhs. Defects are data, not exceptions.
    """
    defects = []

    by_lhs = {nt.id: [] for nt in g.nonterminals}
    for r in g.rules:
        by_lhs[r.lhs.id].append(r)

    # productivity: least fixpoint
    productive = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.lhs.id in productive:
                continue
            if all(nt.id in productive for nt in r.rhs_nonterminals()):
                productive.add(r.lhs.id)
                changed = True
    for nt in g.nonterminals:
        if nt.id not in productive:
            defects.append(f"nonproductive: {nt.name}")

    # reachability from start
    reachable = {g.start.id}
    frontier = [g.start.id]
    while frontier:
        nid = frontier.pop()
        for r in by_lhs.get(nid, ()):
            for child in r.rhs_nonterminals():
                if child.id not in reachable:
                    reachable.add(child.id)
                    frontier.append(child.id)
    for nt in g.nonterminals:
        if nt.id not in reachable:
            defects.append(f"unreachable: {nt.name}")

    # duplicate rhs under one lhs
    for nt in g.nonterminals:
        seen = {}
        for r in by_lhs[nt.id]:
            key = tuple(
                ("N", s.id) if isinstance(s, Nonterminal) else ("T", s.id)
                for s in r.rhs
            )
            if key in seen:
                defects.append(f"duplicate: {seen[key]} and {r.name} under {nt.name}")
            else:
                seen[key] = r.name
    return defects


def min_subtree_depths(g: Grammar) -> dict:
    """Minimum achievable tree depth per nonterminal id (fixpoint)."""
    INF = 10**9
    depth = {nt.id: INF for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            kids = r.rhs_nonterminals()
            d = 1 + max((depth[k.id] for k in kids), default=0)
            if d < depth[r.lhs.id]:
                depth[r.lhs.id] = d
                changed = True
    return depth


def min_yield_lengths(g: Grammar) -> dict:
    """Minimum achievable yield length per nonterminal id (fixpoint)."""
    INF = 10**9
    length = {nt.id: INF for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            total = r.rhs_terminal_count()
            ok = True
            for k in r.rhs_nonterminals():
                if length[k.id] >= INF:
                    ok = False
                    break
                total += length[k.id]
            if ok and total < length[r.lhs.id]:
                length[r.lhs.id] = total
                changed = True
    return length

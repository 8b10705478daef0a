import pytest

from ngparse.decompose import DecompositionFailure, decompose
from ngparse.grammar import Nonterminal, Token
from ngparse.sampler import SampleBucket, sample_corpus
from ngparse.tree import pretty_print


def test_if_rule_split(g):
    toks = g.encode("if v0 < 1 then v1 = 2 ; else v1 = 3 ; endif")
    comps = decompose(g, toks, g.rule_by_name("I1"))
    assert [g.decode(c) for c in comps] == ["v0 < 1", "v1 = 2 ;", "v1 = 3 ;"]


def test_nested_if_split_skips_inner_else(g):
    text = (
        "if v0 < 1 then "
        "if v1 < 2 then v2 = 3 ; else v2 = 4 ; endif ; "
        "else v2 = 5 ; endif"
    )
    comps = decompose(g, g.encode(text), g.rule_by_name("I1"))
    assert g.decode(comps[1]) == "if v1 < 2 then v2 = 3 ; else v2 = 4 ; endif ;"
    assert g.decode(comps[2]) == "v2 = 5 ;"


def test_chain_rule_identity(g):
    comps = decompose(g, g.encode("v0"), g.rule_by_name("F2"))
    assert [g.decode(c) for c in comps] == ["v0"]


def test_missing_leading_terminal_fails(g):
    with pytest.raises(DecompositionFailure):
        decompose(g, g.encode("v0 = 1 ;"), g.rule_by_name("I1"))


def test_leftover_tokens_fail(g):
    with pytest.raises(DecompositionFailure):
        decompose(g, g.encode("v0 = 1 ; v1 = 2 ;"), g.rule_by_name("S2"))


def test_right_associative_splits(g):
    comps = decompose(g, g.encode("1 + 2 + 3"), g.rule_by_name("E1"))
    assert [g.decode(c) for c in comps] == ["1", "2 + 3"]
    comps = decompose(g, g.encode("v0 = 1 ; v1 = 2 ; v2 = 3 ;"), g.rule_by_name("S1"))
    assert [g.decode(c) for c in comps] == ["v0 = 1", "v1 = 2 ; v2 = 3 ;"]


def test_paren_closer_at_top_level(g):
    comps = decompose(g, g.encode("( ( 1 ) )"), g.rule_by_name("F1"))
    assert [g.decode(c) for c in comps] == ["( 1 )"]
    comps = decompose(g, g.encode("( 1 < 2 and ( 3 < 4 and 5 < 6 ) )"),
                      g.rule_by_name("B4"))
    assert [g.decode(c) for c in comps] == ["1 < 2", "( 3 < 4 and 5 < 6 )"]


def test_empty_component_fails(g):
    with pytest.raises(DecompositionFailure):
        decompose(g, g.encode("= 1"), g.rule_by_name("A1"))


def test_empty_input_fails(g):
    with pytest.raises(DecompositionFailure):
        decompose(g, (), g.rule_by_name("E3"))


def _interleave(g, rule, comps):
    out = []
    it = iter(comps)
    for sym in rule.rhs:
        if isinstance(sym, Token):
            out.append(sym.id)
        else:
            out.extend(next(it))
    return tuple(out)


def test_oracle_agreement_on_generated_trees(g):
    corpus = sample_corpus(g, SampleBucket(4, 28, 1, 11, seed=9), 120)

    def check(node):
        rule = g.rule_by_id(node.rule_id)
        toks = pretty_print(g, node)
        comps = decompose(g, toks, rule)
        kids = rule.rhs_nonterminals()
        assert len(comps) == len(kids)
        assert _interleave(g, rule, comps) == toks
        for comp, child in zip(comps, node.children):
            assert comp == pretty_print(g, child)
        for child in node.children:
            check(child)

    for _, tree in corpus:
        check(tree)


def test_true_root_rule_always_decomposes(g):
    corpus = sample_corpus(g, SampleBucket(4, 28, 1, 11, seed=10), 120)
    for tokens, tree in corpus:
        decompose(g, tokens, g.rule_by_id(tree.rule_id))  # must not raise

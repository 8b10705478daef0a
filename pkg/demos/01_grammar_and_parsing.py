"""Walk through the grammar, the reference parser, and decomposition.

Run: python3 demos/01_grammar_and_parsing.py
"""

from ngparse import (
    build_grammar,
    decompose,
    depth,
    pretty_print,
    reference_parse,
    sample_program,
    serialize,
    SampleBucket,
)


def show(title):
    print(f"\n== {title} ==")


g = build_grammar()

show("the grammar")
print(f"{len(g.rules)} rules over {len(g.nonterminals)} nonterminals, "
      f"{len(g.vocabulary)} terminal tokens")
for r in g.rules_for(g.nonterminal("Stmt")):
    rhs = " ".join(getattr(x, "name", None) or x.text for x in r.rhs)
    print(f"  {r.name}: Stmt -> {rhs}")

show("parsing a program")
text = "while v0 < 9 do v0 = v0 + 1 ; endwhile ;"
tokens = g.encode(text)
tree = reference_parse(g, tokens)
print("input :", text)
print("tree  :", serialize(g, tree))
print("depth :", depth(tree))
print("yield round-trips:", pretty_print(g, tree) == tokens)

show("decomposing one level")
# The if rule I1 has three nonterminal components: the condition and the
# two branches. decompose recovers their token spans without a parser.
cond = "if v0 < 1 then v1 = 2 ; else v1 = 3 ; endif"
rule = g.rule_by_name("I1")
parts = decompose(g, g.encode(cond), rule)
for nt, span in zip(rule.rhs_nonterminals(), parts):
    print(f"  {nt.name:9s} <- {' '.join(g.vocabulary[i].text for i in span)}")

show("sampling from an exact (depth, length) cell")
bucket = SampleBucket(15, 15, 11, 11, seed=4)
tokens, tree = sample_program(g, bucket)
print("length-15 depth-11 program:",
      " ".join(g.vocabulary[i].text for i in tokens))

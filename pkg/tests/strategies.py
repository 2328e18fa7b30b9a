from fractions import Fraction

from hypothesis import strategies as st

from hopfck.forest_core import LEAF, Forest, Tree
from hopfck.hopf_ck import Elem

trees = st.recursive(
    st.just(LEAF),
    lambda kids: st.lists(kids, min_size=1, max_size=3).map(Tree),
    max_leaves=5,
).filter(lambda t: t.size <= 6)

small_rationals = st.builds(
    Fraction, st.integers(-5, 5), st.integers(1, 4)
)
nonzero_rationals = small_rationals.filter(bool)

forests = st.lists(trees, max_size=2).map(Forest).filter(lambda f: sum(t.size for t in f) <= 6)

elems = st.dictionaries(forests, nonzero_rationals, max_size=3).map(Elem)


def tree_parents(t: Tree) -> list[int]:
    """Preorder parent array; the root has parent -1."""
    out = []

    def walk(node, parent):
        me = len(out)
        out.append(parent)
        for c in node.children:
            walk(c, me)

    walk(t, -1)
    return out

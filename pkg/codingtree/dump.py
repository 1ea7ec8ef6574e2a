# codingtree/dump.py
from codingtree.entropy import structural_entropy


def dump_tree(g, t):
    """Indented text dump: one line per tree node, then an entropy line."""
    lines = []
    for u in t.preorder():
        d = int(t.depth[u])
        line = f"{'  ' * d}{d} {u} {int(t.vol[u])} {int(t.g_cut[u])}"
        if t.is_leaf(u):
            line += f" leaf->{int(t.leaf_of[u])}"
        lines.append(line)
    lines.append(f"entropy={structural_entropy(g, t):.6f}")
    return "\n".join(lines)

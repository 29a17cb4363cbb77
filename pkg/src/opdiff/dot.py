"""Graphviz DOT rendering. Black fill is opinion 1, white is 0, grey is unlabelled."""

from __future__ import annotations

from .netcore import SocialNetwork

SHAPES = {
    "dual": "ellipse",
    "base": "doublecircle",
    "fuse": "box",
    "intermediate": "point",
    "valve_p": "house",
    "valve_q": "invhouse",
    "alarm": "octagon",
}


def to_dot(net: SocialNetwork, labelling=None, name: str = "network") -> str:
    roles = net.annotations.role_of()
    lines = [f"digraph {name} {{", '  node [shape=circle style=filled label=""];']
    for i in range(net.n):
        if labelling is None:
            fill, font = "lightgray", "black"
        elif labelling[i]:
            fill, font = "black", "white"
        else:
            fill, font = "white", "black"
        attrs = [f'fillcolor="{fill}"', f'fontcolor="{font}"', f'tooltip="{i}"']
        role = roles.get(i)
        if role:
            attrs.append(f'shape="{SHAPES[role]}"')
            attrs.append(f'class="{role}"')
        lines.append(f"  {i} [{' '.join(attrs)}];")
    for u, v in net.edges:
        lines.append(f"  {u} -> {v};")
    lines.append("}")
    return "\n".join(lines) + "\n"

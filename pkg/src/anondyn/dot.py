"""Graphviz export for views and ground-truth history trees."""

from __future__ import annotations

from .history import ROOT, HistoryTree, NodeStore, View


def _dot(store: NodeStore, levels, title, anonymity=None, highlight=None) -> str:
    lines = [f'digraph "{title}" {{', "  rankdir=TB;", "  node [shape=circle, fontsize=10];"]
    ordered = [store.sort_level(frozenset(s)) for s in levels]
    for nodes in ordered:
        lines.append("  { rank=same; " + " ".join(f"n{v}" for v in nodes) + " }")
        for v in nodes:
            text = "r" if v == ROOT else str(store.label[v])
            if anonymity is not None and v in anonymity:
                text += f"\\n{anonymity[v]}"
            style = ", style=bold" if v == highlight else ""
            lines.append(f'  n{v} [label="{text}"{style}];')
    for nodes in ordered[1:]:
        for v in nodes:
            lines.append(f"  n{store.parent[v]} -> n{v} [arrowhead=none];")
            for u, m in store.red_in[v]:
                lines.append(f'  n{u} -> n{v} [color=red, style=dashed, arrowhead=none, label="{m}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dot(view: View, anonymity: dict | None = None, title: str = "view") -> str:
    """DOT source with one rank per level; the viewpoint is drawn bold.

    Black edges are solid, red edges dashed and labelled with their
    multiplicity. With ``anonymity`` (ground truth) each node also shows it.
    """
    return _dot(view.store, view.levels, title, anonymity, view.viewpoint)


def tree_to_dot(tree: HistoryTree, horizon: int | None = None) -> str:
    """The ground-truth tree up to ``horizon``, annotated with anonymities."""
    h = tree.horizon if horizon is None else horizon
    levels = [[ROOT]] + [tree.rep[t] for t in range(h + 1)]
    return _dot(tree.store, levels, "history tree", tree.anonymity)

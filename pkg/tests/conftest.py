import networkx as nx
import pytest

from anondyn.network import ProcessInput, Schedule


def nine_process_network():
    """Nine processes with inputs A, B and C over three rounds."""
    inputs = tuple(ProcessInput(z) for z in "AABBBBCCC")
    rounds = (
        [(1, 3), (2, 4), (3, 7), (5, 8), (6, 9), (4, 5), (7, 9)],
        [(1, 2), (2, 5), (3, 6, 2), (4, 8), (7, 8), (8, 9)],
        [(1, 9), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8)],
    )
    return Schedule(9, rounds), inputs


@pytest.fixture
def nine():
    return nine_process_network()


def view_graph(view):
    """The view as a networkx digraph, for an isomorphism oracle."""
    g = nx.DiGraph()
    store = view.store
    for v in view.nodes():
        lab = store.label[v]
        g.add_node(v, level=store.level[v], label=None if lab is None else (lab.value, lab.leader))
    for v in view.nodes():
        if store.level[v] >= 0:
            g.add_edge(store.parent[v], v, kind="black", mult=0)
            for u, m in store.red_in[v]:
                g.add_edge(u, v, kind="red", mult=m)
    return g


def isomorphic(v1, v2) -> bool:
    return nx.is_isomorphic(
        view_graph(v1), view_graph(v2),
        node_match=lambda a, b: a == b,
        edge_match=lambda a, b: a == b)

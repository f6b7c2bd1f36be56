import numpy as np

from ..codebook_io import dumps
from ..exceptions import DimensionError
from ..model import CodebookSet, SystemParams, build_factor_graph
from . import appendix

#: Operating point shared by all published codebooks.
DESIGN_POINT = {"sigma2": 0.01, "varsigma2": 5.0, "Pe": 30.0}

_TABLES = {
    "dr-j3": appendix.dr_j3,
    "ls-j3": appendix.ls_j3,
    "ls-j4": appendix.ls_j4,
    "ls-j5": appendix.ls_j5,
    "ls-j6": appendix.ls_j6,
}


def names():
    """Names of the embedded fixtures, in listing order."""
    return tuple(_TABLES)


def load(name):
    """Build the :class:`~scmavlc.model.CodebookSet` of a fixture.

    :raises KeyError: For an unknown fixture name.
    """
    tables = _TABLES[name]
    params = SystemParams(K=4, J=len(tables), M=4, N=2, **DESIGN_POINT)
    graph = build_factor_graph(params.K, params.J, params.N)
    books = []
    for j, table in enumerate(tables):
        table = np.array(table, dtype=float)
        support = list(graph.vn_neighbors[j])
        if np.any(np.delete(table, support, axis=0)):
            raise DimensionError(
                "fixture %s user %d support" % (name, j), support, table
            )
        books.append(table[support])
    return CodebookSet(params, graph, books)


def export(name):
    """Canonical codebook-file text of a fixture."""
    return dumps(load(name))

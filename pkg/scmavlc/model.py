"""SCMA structural objects: parameters, factor graph, mappings and codebooks.

Indices are 0-based throughout: user ``j`` is column ``j`` of the factor
graph, symbol ``m`` is column ``m`` of a constellation matrix.
"""
import math
from itertools import combinations
from numbers import Integral, Real

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .exceptions import CapacityError, DimensionError, DomainError
from .exceptions import unexpected_type_error
from .util import frozen, immutable, init_slots

#: Default upper bound on the number of superimposed points M^J.
MAX_POINTS = 4 ** 6

#: Default lower bound for designed constellation entries.
EPSILON_FLOOR = 0.01

#: Bit labeling scheme recorded in codebook files.
LABELING = "natural-binary"

# Column supports of the 4x6 factor graph, in user order.
_SUPPORTS_4_2 = ((1, 3), (0, 2), (0, 1), (2, 3), (0, 3), (1, 2))


def _check_int(name, value):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise unexpected_type_error(name, int, value)
    return int(value)


def _check_real(name, value):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise unexpected_type_error(name, float, value)
    return float(value)


@immutable
class SystemParams:
    """Dimensions and noise/power parameters of one SCMA-VLC block.

    :param K: Number of resource elements.
    :type K: ``int``
    :param J: Number of users.
    :type J: ``int``
    :param M: Codebook size, a power of two.
    :type M: ``int``
    :param N: Nonzero entries per codeword.
    :type N: ``int``
    :param sigma2: Thermal noise variance.
    :type sigma2: ``float``
    :param varsigma2: Shot-noise factor.
    :type varsigma2: ``float``
    :param Pe: Maximum average electrical power per user.
    :type Pe: ``float``
    :raises DimensionError: If ``K >= N >= 1`` or ``J <= C(K, N)`` fails.
    :raises DomainError: For non power-of-two ``M`` or out-of-range noise/power.
    """

    __slots__ = ("K", "J", "M", "N", "sigma2", "varsigma2", "Pe")

    def __init__(self, K=4, J=6, M=4, N=2, sigma2=0.01, varsigma2=5.0, Pe=30.0):
        K, J, M, N = (_check_int(n, v) for n, v in zip("KJMN", (K, J, M, N)))
        sigma2 = _check_real("sigma2", sigma2)
        varsigma2 = _check_real("varsigma2", varsigma2)
        Pe = _check_real("Pe", Pe)

        if not K >= N >= 1:
            raise DimensionError("N", "1 <= N <= K = %d" % K, N)
        supports = math.comb(K, N)
        if not 1 <= J <= supports:
            raise DimensionError(
                "J", "1 <= J <= C(%d,%d) = %d support patterns" % (K, N, supports), J
            )
        if M < 1 or M & (M - 1):
            raise DomainError("M", M, "a power of two")
        if not sigma2 > 0:
            raise DomainError("sigma2", sigma2, "positive")
        if not varsigma2 >= 0:
            raise DomainError("varsigma2", varsigma2, "nonnegative")
        if not Pe > 0:
            raise DomainError("Pe", Pe, "positive")

        init_slots(
            self, K=K, J=J, M=M, N=N, sigma2=sigma2, varsigma2=varsigma2, Pe=Pe
        )

    @property
    def bits_per_symbol(self):
        """b = log2(M)."""
        return self.M.bit_length() - 1

    @property
    def load_factor(self):
        """Users per resource element, J / K."""
        return self.J / self.K

    @property
    def n_points(self):
        return self.M ** self.J

    def replace(self, **changes):
        """Copy with some fields replaced.

        >>> SystemParams(J=3).replace(Pe=15.0).Pe
        15.0
        """
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        return SystemParams(**values)

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__slots__}

    def __eq__(self, other):
        if isinstance(other, SystemParams):
            return self.as_dict() == other.as_dict()
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.as_dict().values()))

    def __repr__(self):
        return "SystemParams(%s)" % ", ".join(
            "%s=%r" % item for item in self.as_dict().items()
        )


@immutable
class FactorGraph:
    """Binary K x J matrix linking resource nodes (rows) to users (columns).

    :ivar F: The read-only factor graph matrix.
    :ivar rn_neighbors: Users on each resource, ascending.
    :ivar vn_neighbors: Resources of each user, ascending.
    :ivar df_per_rn: Degree of each resource node.
    """

    __slots__ = ("F", "rn_neighbors", "vn_neighbors", "df_per_rn")

    def __init__(self, F):
        F = frozen(F, dtype=np.int64)
        if F.ndim != 2 or 0 in F.shape:
            raise DimensionError("factor graph", "a non-empty K x J matrix", F.shape)
        if not np.isin(F, (0, 1)).all():
            raise DomainError("F", F.tolist(), "binary")
        col_sums = F.sum(axis=0)
        if col_sums.min() < 1 or col_sums.min() != col_sums.max():
            raise DimensionError(
                "factor graph columns", "equal nonzero counts", col_sums.tolist()
            )
        if len({tuple(col) for col in F.T}) != F.shape[1]:
            raise DimensionError(
                "factor graph columns", "distinct supports", F.T.tolist()
            )
        init_slots(
            self,
            F=F,
            rn_neighbors=tuple(tuple(np.flatnonzero(row).tolist()) for row in F),
            vn_neighbors=tuple(tuple(np.flatnonzero(col).tolist()) for col in F.T),
            df_per_rn=frozen(F.sum(axis=1), dtype=np.int64),
        )

    K = property(lambda self: self.F.shape[0])
    J = property(lambda self: self.F.shape[1])
    N = property(lambda self: int(self.F[:, 0].sum()))

    @property
    def is_regular(self):
        """True if every resource node carries the same number of users."""
        return self.df_per_rn.min() == self.df_per_rn.max()

    def _bipartite(self):
        K, J = self.F.shape
        adjacency = np.zeros((K + J, K + J), dtype=np.int64)
        adjacency[:K, K:] = self.F
        adjacency[K:, :K] = self.F.T
        return csr_matrix(adjacency)

    @property
    def is_tree(self):
        """True if the bipartite graph has no cycles (a forest)."""
        n_components, _ = connected_components(self._bipartite(), directed=False)
        n_edges = int(self.F.sum())
        return n_edges == sum(self.F.shape) - n_components

    @property
    def diameter(self):
        """Longest shortest path, in hops, between connected nodes."""
        hops = shortest_path(self._bipartite(), directed=False, unweighted=True)
        return int(hops[np.isfinite(hops)].max())

    def __eq__(self, other):
        if isinstance(other, FactorGraph):
            return np.array_equal(self.F, other.F)
        return NotImplemented

    def __hash__(self):
        return hash(self.F.tobytes())

    def __repr__(self):
        return "FactorGraph(%r)" % (self.F.tolist(),)


@immutable
class MappingMatrix:
    """K x N binary matrix placing one user's N dimensions onto resources."""

    __slots__ = ("V",)

    def __init__(self, V):
        V = frozen(V, dtype=np.int64)
        if V.ndim != 2 or not np.isin(V, (0, 1)).all():
            raise DimensionError("mapping matrix", "a binary K x N matrix", V.shape)
        if not (V.sum(axis=0) == 1).all() or V.sum(axis=1).max() > 1:
            raise DimensionError(
                "mapping matrix", "one 1 per column on distinct rows", V.tolist()
            )
        init_slots(self, V=V)

    @property
    def support(self):
        """Resource indices in dimension order."""
        return tuple(int(np.flatnonzero(col)[0]) for col in self.V.T)

    def __eq__(self, other):
        if isinstance(other, MappingMatrix):
            return np.array_equal(self.V, other.V)
        return NotImplemented

    def __hash__(self):
        return hash(self.V.tobytes())


@immutable
class Codebook:
    """N x M constellation matrix of one user, in optical intensity units."""

    __slots__ = ("C", "user_index")

    def __init__(self, C, user_index):
        C = frozen(C)
        if C.ndim != 2:
            raise DimensionError("constellation matrix", "N x M", C.shape)
        if (C < 0).any() or not np.isfinite(C).all():
            raise DomainError("constellation entries", C.min(), "finite and >= 0")
        init_slots(self, C=C, user_index=_check_int("user_index", user_index))

    N = property(lambda self: self.C.shape[0])
    M = property(lambda self: self.C.shape[1])

    def power(self):
        return power(self)

    def scaled(self, alpha):
        return Codebook(self.C * alpha, self.user_index)

    def __eq__(self, other):
        if isinstance(other, Codebook):
            return self.user_index == other.user_index and np.array_equal(
                self.C, other.C
            )
        return NotImplemented

    def __hash__(self):
        return hash((self.user_index, self.C.tobytes()))

    def __repr__(self):
        return "Codebook(%r, user_index=%d)" % (self.C.tolist(), self.user_index)


@immutable
class CodebookSet:
    """All users' codebooks together with their factor graph and gains.

    :param params: The system parameters.
    :type params: :class:`SystemParams`
    :param graph: The factor graph; its shape must match ``params``.
    :type graph: :class:`FactorGraph`
    :param books: One constellation matrix (or :class:`Codebook`) per user.
    :param gains: Optional J x K nonnegative channel gains, default all ones.
    :raises DimensionError: On any shape mismatch.
    """

    __slots__ = ("params", "graph", "mappings", "books", "gains")

    def __init__(self, params, graph, books, gains=None):
        if not isinstance(params, SystemParams):
            raise unexpected_type_error("params", SystemParams, params)
        if not isinstance(graph, FactorGraph):
            raise unexpected_type_error("graph", FactorGraph, graph)
        if (graph.K, graph.J, graph.N) != (params.K, params.J, params.N):
            raise DimensionError(
                "factor graph (K, J, N)",
                (params.K, params.J, params.N),
                (graph.K, graph.J, graph.N),
            )

        books = tuple(
            book if isinstance(book, Codebook) else Codebook(book, j)
            for j, book in enumerate(books)
        )
        if len(books) != params.J:
            raise DimensionError("codebooks", params.J, len(books))
        for j, book in enumerate(books):
            if book.user_index != j:
                raise DimensionError(
                    "user_index of codebook %d" % j, j, book.user_index
                )
            if book.C.shape != (params.N, params.M):
                raise DimensionError(
                    "codebook %d" % j, (params.N, params.M), book.C.shape
                )

        if gains is None:
            gains = np.ones((params.J, params.K))
        gains = frozen(gains)
        if gains.shape != (params.J, params.K):
            raise DimensionError("gains", (params.J, params.K), gains.shape)
        if (gains < 0).any():
            raise DomainError("gains", gains.min(), ">= 0")

        mappings = tuple(mapping_from_graph(graph, j) for j in range(params.J))
        init_slots(
            self,
            params=params,
            graph=graph,
            mappings=mappings,
            books=books,
            gains=gains,
        )

    def codebook_matrix(self, j):
        """A_j = V_j C_j, the K x M codeword matrix of user ``j``."""
        return self.mappings[j].V @ self.books[j].C

    def powers(self):
        return np.array([power(book) for book in self.books])

    def max_power(self):
        return float(self.powers().max())

    def with_books(self, books):
        return CodebookSet(self.params, self.graph, books, self.gains)

    def with_params(self, **changes):
        return CodebookSet(
            self.params.replace(**changes), self.graph, self.books, self.gains
        )

    def scaled(self, alpha):
        return self.with_books([book.scaled(alpha) for book in self.books])

    def __eq__(self, other):
        if isinstance(other, CodebookSet):
            return (
                self.params == other.params
                and self.graph == other.graph
                and self.books == other.books
                and np.array_equal(self.gains, other.gains)
            )
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return "CodebookSet(%r, %r, ...)" % (self.params, self.graph)


@immutable
class SuperConstellation:
    """All M^J superimposed codewords with their symbol tuples and labels.

    :ivar points: (M^J, K) received-intensity points.
    :ivar index_tuples: (M^J, J) symbol index per user.
    :ivar bit_labels: (M^J, J*b) natural-binary labels, user 0 first.
    :ivar covariances: (M^J, K) diagonal IDGN variances per point.
    """

    __slots__ = ("points", "index_tuples", "bit_labels", "covariances")

    def __init__(self, points, index_tuples, bit_labels, covariances):
        init_slots(
            self,
            points=frozen(points),
            index_tuples=frozen(index_tuples, dtype=np.int64),
            bit_labels=frozen(bit_labels, dtype=np.int8),
            covariances=frozen(covariances),
        )

    def __len__(self):
        return self.points.shape[0]


def build_factor_graph(K, J, N):
    """Factor graph of J users on K resources with N nonzeros per codeword.

    For K=4, N=2 the columns follow the reference 4 x 6 graph, so smaller J
    take its first J users. Other shapes use supports in lexicographic order.

    >>> build_factor_graph(4, 3, 2).df_per_rn.tolist()
    [2, 2, 1, 1]

    :raises DimensionError: If J exceeds the C(K, N) available supports.
    """
    K, J, N = _check_int("K", K), _check_int("J", J), _check_int("N", N)
    if not K >= N >= 1:
        raise DimensionError("N", "1 <= N <= K = %d" % K, N)
    supports = math.comb(K, N)
    if not 1 <= J <= supports:
        raise DimensionError(
            "J", "1 <= J <= C(%d,%d) = %d support patterns" % (K, N, supports), J
        )
    if (K, N) == (4, 2):
        patterns = _SUPPORTS_4_2
    else:
        patterns = tuple(combinations(range(K), N))
    F = np.zeros((K, J), dtype=np.int64)
    for j, rows in enumerate(patterns[:J]):
        F[list(rows), j] = 1
    return FactorGraph(F)


def mapping_from_graph(graph, j):
    """Mapping matrix V_j: dimension n of user j lands on its n-th resource.

    :raises IndexError: For an out-of-range user.
    """
    if not 0 <= j < graph.J:
        raise IndexError("user index %r out of range [0, %d)" % (j, graph.J))
    support = graph.vn_neighbors[j]
    V = np.zeros((graph.K, len(support)), dtype=np.int64)
    V[list(support), range(len(support))] = 1
    return MappingMatrix(V)


def codeword(codebook_set, j, m):
    """Codeword x = V_j c_j^m of user ``j`` for symbol ``m``.

    :raises IndexError: For an out-of-range user or symbol.
    """
    params = codebook_set.params
    if not 0 <= j < params.J:
        raise IndexError("user index %r out of range [0, %d)" % (j, params.J))
    if not 0 <= m < params.M:
        raise IndexError("symbol index %r out of range [0, %d)" % (m, params.M))
    return codebook_set.mappings[j].V @ codebook_set.books[j].C[:, m]


def natural_binary_labels(symbols, bits):
    """Bits of each symbol index, most significant first.

    :param symbols: Integer array of any shape.
    :param bits: Bits per symbol.
    :rtype: Array of shape ``symbols.shape + (bits,)``.
    """
    shifts = np.arange(bits - 1, -1, -1)
    return (np.asarray(symbols)[..., None] >> shifts) & 1


def enumerate_superimposed(codebook_set, max_points=MAX_POINTS):
    """Every superimposed codeword, user 0 as the most significant digit.

    :raises CapacityError: If M^J exceeds ``max_points``.
    :rtype: :class:`SuperConstellation`
    """
    params = codebook_set.params
    n_points = params.n_points
    if n_points > max_points:
        raise CapacityError("superimposed points", n_points, max_points)

    tuples = np.indices((params.M,) * params.J).reshape(params.J, -1).T
    points = np.zeros((n_points, params.K))
    for j in range(params.J):
        contribution = codebook_set.codebook_matrix(j)[:, tuples[:, j]].T
        points += codebook_set.gains[j] * contribution

    labels = natural_binary_labels(tuples, params.bits_per_symbol)
    labels = labels.reshape(n_points, params.J * params.bits_per_symbol)
    covariances = params.varsigma2 * params.sigma2 * points + params.sigma2
    return SuperConstellation(points, tuples, labels, covariances)


def power(book):
    """Average electrical power Tr(C^T C) / M of one codebook."""
    C = book.C if isinstance(book, Codebook) else np.asarray(book, dtype=float)
    return float(np.sum(C * C) / C.shape[1])


def scale_codebook_set(codebook_set, target_Pe):
    """Rescale all codebooks so that the strongest user sits at ``target_Pe``.

    :raises DomainError: If ``target_Pe`` is not positive or all powers are 0.
    """
    target_Pe = _check_real("target_Pe", target_Pe)
    if not target_Pe > 0:
        raise DomainError("target_Pe", target_Pe, "positive")
    p_design = codebook_set.max_power()
    if not p_design > 0:
        raise DomainError("design power", p_design, "positive")
    alpha = math.sqrt(target_Pe / p_design)
    return CodebookSet(
        codebook_set.params.replace(Pe=target_Pe),
        codebook_set.graph,
        [book.scaled(alpha) for book in codebook_set.books],
        codebook_set.gains,
    )

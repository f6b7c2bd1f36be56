"""Distance geometry of superimposed constellations under shot noise.

All pair scans run over unordered pairs ``i < j`` in lexicographic order, in
bounded blocks, so reports and sums are reproducible for any M^J.
"""
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.special import logsumexp
from scipy.stats import chi2

from .exceptions import CapacityError, DimensionError, DomainError, UnsupportedError
from .model import MAX_POINTS, Codebook, SuperConstellation
from .util import frozen, immutable, init_slots

#: Default pair budget, every pair of the largest default constellation.
MAX_PAIRS = MAX_POINTS * (MAX_POINTS - 1) // 2

#: 95% quantile of the chi-square distribution with two degrees of freedom.
CHI2_2DOF_95 = 5.991

_PAIRS_PER_BLOCK = 1 << 20


def _nonnegative(name, values):
    values = np.asarray(values, dtype=float)
    if (values < 0).any():
        raise DomainError(name, float(values.min()), "componentwise >= 0")
    return values


def _points_of(constellation):
    if isinstance(constellation, SuperConstellation):
        return constellation.points
    return np.asarray(constellation, dtype=float)


def red(s_i, s_j, varsigma2):
    """Rotated Euclidean distance between superimposed codewords.

    Works on the last axis, so stacks of pairs can be passed at once.

    >>> red([1.0, 0.0], [0.0, 1.0], 3.0)
    1.0

    :raises DimensionError: If the shapes differ.
    :raises DomainError: On negative intensities.
    """
    s_i = _nonnegative("s_i", s_i)
    s_j = _nonnegative("s_j", s_j)
    if s_i.shape != s_j.shape:
        raise DimensionError("red operands", s_i.shape, s_j.shape)
    scale = np.sqrt((varsigma2 * s_i + 1.0) * (varsigma2 * s_j + 1.0))
    distance = np.sum((s_i - s_j) ** 2 / scale, axis=-1)
    return float(distance) if distance.ndim == 0 else distance


def pair_blocks(n, pairs_per_block=_PAIRS_PER_BLOCK):
    """Yield ``(i, j)`` index arrays covering every ``i < j < n`` in order.

    >>> [(i.tolist(), j.tolist()) for i, j in pair_blocks(3)]
    [([0, 0, 1], [1, 2, 2])]
    """
    start = 0
    while start < n - 1:
        stop, count = start, 0
        while stop < n - 1:
            if stop > start and count + n - 1 - stop > pairs_per_block:
                break
            count += n - 1 - stop
            stop += 1
        rows = np.arange(start, stop)
        lengths = n - 1 - rows
        i = np.repeat(rows, lengths)
        run_starts = np.repeat(np.cumsum(lengths) - lengths, lengths)
        j = i + 1 + np.arange(i.size) - run_starts
        yield i, j
        start = stop


def pair_distances(constellation, varsigma2):
    """REDs of all unordered pairs, lexicographic order."""
    points = _nonnegative("points", _points_of(constellation))
    blocks = [red(points[i], points[j], varsigma2) for i, j in pair_blocks(len(points))]
    return np.concatenate(blocks) if blocks else np.zeros(0)


def squared_med(constellation):
    """Minimum squared Euclidean distance over all pairs."""
    points = _points_of(constellation)
    best = math.inf
    for i, j in pair_blocks(len(points)):
        best = min(best, float(np.min(np.sum((points[i] - points[j]) ** 2, axis=-1))))
    return 0.0 if best == math.inf else best


@immutable
class DistanceReport:
    """Extremes of the RED set of one constellation.

    :ivar d_min: Smallest RED.
    :ivar d_max: Largest RED.
    :ivar pair_count: Number of unordered pairs.
    :ivar histogram: ``(counts, edges)`` or ``None``.
    """

    __slots__ = ("d_min", "d_max", "pair_count", "histogram")

    def __init__(self, d_min, d_max, pair_count, histogram=None):
        init_slots(
            self,
            d_min=float(d_min),
            d_max=float(d_max),
            pair_count=int(pair_count),
            histogram=histogram,
        )

    def as_dict(self):
        return {"d_min": self.d_min, "d_max": self.d_max, "pair_count": self.pair_count}

    def __repr__(self):
        return "DistanceReport(d_min=%r, d_max=%r, pair_count=%r)" % (
            self.d_min,
            self.d_max,
            self.pair_count,
        )


def pairwise_report(constellation, varsigma2, bins=None, max_pairs=MAX_PAIRS):
    """Minimum and maximum RED over all pairs, with an optional histogram.

    :param constellation: A :class:`~scmavlc.model.SuperConstellation` or a
        (P, K) array of points.
    :param varsigma2: Shot-noise factor used in the RED.
    :param bins: Histogram bin count, or ``None`` for no histogram.
    :raises CapacityError: If the pair count exceeds ``max_pairs``.
    :rtype: :class:`DistanceReport`
    """
    n = len(_points_of(constellation))
    pair_count = n * (n - 1) // 2
    if pair_count > max_pairs:
        raise CapacityError("point pairs", pair_count, max_pairs)
    distances = pair_distances(constellation, varsigma2)
    if distances.size == 0:
        return DistanceReport(0.0, 0.0, 0)
    d_min, d_max = distances.min(), distances.max()
    histogram = None
    if bins is not None:
        counts, edges = np.histogram(distances, bins=bins, range=(d_min, d_max))
        histogram = (frozen(counts, dtype=np.int64), frozen(edges))
    return DistanceReport(d_min, d_max, pair_count, histogram)


def coefficient_map(codebook_set, max_points=MAX_POINTS):
    """Sparse (M^J * K, N*M*J) map taking the stacked vector to all points.

    Row ``i*K + k`` holds the (index, gain) pairs summing to s_i^k.
    """
    params = codebook_set.params
    J, M, N, K = params.J, params.M, params.N, params.K
    n_points = params.n_points
    if n_points > max_points:
        raise CapacityError("superimposed points", n_points, max_points)
    tuples = np.indices((M,) * J).reshape(J, -1).T
    point_index = np.arange(n_points)
    rows, cols, values = [], [], []
    for j in range(J):
        for n, k in enumerate(codebook_set.graph.vn_neighbors[j]):
            rows.append(point_index * K + k)
            cols.append(j * M * N + tuples[:, j] * N + n)
            values.append(np.full(n_points, codebook_set.gains[j, k]))
    return coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_points * K, N * M * J),
    ).tocsr()


@immutable
class StackedVector:
    """L = vec([C_1, ..., C_J]) together with its linear map to the points.

    Entry ``(j*M + m)*N + n`` of ``L`` is ``C_j[n, m]``.
    """

    __slots__ = ("L", "coefficient_map", "shape")

    def __init__(self, L, coefficient_map, shape):
        L = frozen(L)
        J, M, N = shape
        if L.shape != (J * M * N,) or coefficient_map.shape[1] != L.size:
            raise DimensionError("stacked vector", J * M * N, L.shape)
        init_slots(self, L=L, coefficient_map=coefficient_map, shape=tuple(shape))

    @classmethod
    def from_codebook_set(cls, codebook_set, max_points=MAX_POINTS):
        params = codebook_set.params
        L = np.concatenate([book.C.T.ravel() for book in codebook_set.books])
        return cls(
            L,
            coefficient_map(codebook_set, max_points),
            (params.J, params.M, params.N),
        )

    def replace(self, L):
        """Same layout, new values."""
        return StackedVector(L, self.coefficient_map, self.shape)

    def superimposed(self):
        """All points as a (M^J, K) array."""
        J, M, _ = self.shape
        K = self.coefficient_map.shape[0] // M ** J
        return (self.coefficient_map @ self.L).reshape(M ** J, K)

    def user_blocks(self):
        """(J, M*N) view of the entries grouped by user."""
        J, M, N = self.shape
        return self.L.reshape(J, M * N)

    def books(self):
        """The N x M constellation matrices."""
        J, M, N = self.shape
        return [block.reshape(M, N).T.copy() for block in self.user_blocks()]

    def to_codebook_set(self, template):
        """``template`` with its constellations replaced by these values."""
        return template.with_books(self.books())

    def __eq__(self, other):
        if isinstance(other, StackedVector):
            return self.shape == other.shape and np.array_equal(self.L, other.L)
        return NotImplemented

    __hash__ = None


def _checked(stacked, beta):
    if not beta > 0:
        raise DomainError("beta", beta, "positive")
    _nonnegative("L", stacked.L)
    return stacked.superimposed()


def logsumexp_objective(stacked, beta, varsigma2):
    """Smoothed maxi-min surrogate (1/beta) ln sum_{i != j} exp(-beta d_ij).

    The sum runs over ordered pairs. With no pairs (M^J = 1) it is 0.

    :type stacked: :class:`StackedVector`
    :raises DomainError: For ``beta <= 0`` or negative entries.
    """
    distances = pair_distances(_checked(stacked, beta), varsigma2)
    if distances.size == 0:
        return 0.0
    return float((logsumexp(-beta * distances) + math.log(2.0)) / beta)


def objective_and_gradient(stacked, beta, varsigma2):
    """Objective value and its gradient with respect to ``stacked.L``."""
    points = _checked(stacked, beta)
    n, K = points.shape
    distances = pair_distances(points, varsigma2)
    if distances.size == 0:
        return 0.0, np.zeros_like(stacked.L)
    log_total = logsumexp(-beta * distances)
    value = float((log_total + math.log(2.0)) / beta)

    grad_points = np.zeros((n, K))
    offset = 0
    for i, j in pair_blocks(n):
        weights = np.exp(-beta * distances[offset:offset + i.size] - log_total)
        offset += i.size
        s_i, s_j = points[i], points[j]
        delta = s_i - s_j
        g_i = varsigma2 * s_i + 1.0
        g_j = varsigma2 * s_j + 1.0
        root = 1.0 / np.sqrt(g_i * g_j)
        d_si = 2.0 * delta * root - 0.5 * varsigma2 * delta ** 2 * root / g_i
        d_sj = -2.0 * delta * root - 0.5 * varsigma2 * delta ** 2 * root / g_j
        for k in range(K):
            grad_points[:, k] -= np.bincount(i, weights * d_si[:, k], minlength=n)
            grad_points[:, k] -= np.bincount(j, weights * d_sj[:, k], minlength=n)

    return value, stacked.coefficient_map.T @ grad_points.ravel()


def logsumexp_gradient(stacked, beta, varsigma2):
    """Analytic gradient of :func:`logsumexp_objective`."""
    return objective_and_gradient(stacked, beta, varsigma2)[1]


@immutable
class EpdEllipse:
    """Equal-probability-density contour around one 2-D constellation point."""

    __slots__ = ("center", "semi_axes", "axis_directions", "confidence")

    def __init__(self, center, semi_axes, confidence):
        init_slots(
            self,
            center=frozen(center),
            semi_axes=frozen(semi_axes),
            axis_directions=frozen(np.eye(2)),
            confidence=float(confidence),
        )


def epd_ellipses(book, sigma2, varsigma2, confidence=0.95):
    """One EPD ellipse per constellation point of a 2-D codebook.

    :type book: :class:`~scmavlc.model.Codebook`
    :raises UnsupportedError: Unless the codebook has N = 2.
    :rtype: ``list`` of :class:`EpdEllipse`
    """
    C = book.C if isinstance(book, Codebook) else np.asarray(book, dtype=float)
    if C.shape[0] != 2:
        raise UnsupportedError("epd_ellipses", "needs N = 2, got N = %d" % C.shape[0])
    if not 0 < confidence < 1:
        raise DomainError("confidence", confidence, "in (0, 1)")
    quantile = CHI2_2DOF_95 if confidence == 0.95 else float(chi2.ppf(confidence, 2))
    variances = varsigma2 * sigma2 * C + sigma2
    semi_axes = np.sqrt(quantile * variances)
    return [
        EpdEllipse(C[:, m], semi_axes[:, m], confidence) for m in range(C.shape[1])
    ]

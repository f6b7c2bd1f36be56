"""Multi-user detection over the SCMA factor graph.

Each resource node (RN) holds a table of all symbol combinations of its
users. A message schedule is one RN sweep followed by one variable node (VN)
sweep. Messages live on edges ``(k, j)`` with ``F[k, j] = 1``; the edge order
is resource-major.

Every decoder accepts a single received vector of length K or a (B, K)
batch and decodes the rows independently. On a tree graph messages settle
within the graph diameter, so early exit stops at a fixpoint or after
``diameter`` iterations, whichever comes first.
"""
import math

import numpy as np

from .exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    UnderflowError,
)
from .model import MAX_POINTS, enumerate_superimposed, natural_binary_labels
from .util import frozen, immutable, init_slots

VARIANTS = ("max_log", "mpa")

#: Default number of message-passing iterations.
DEFAULT_ITERS = 6

_FIELDS = ("exponential", "multiplication", "addition", "comparison")


def _unknown_variant(variant):
    return ConfigError(
        "unknown decoder variant %r, expected one of %s" % (variant, VARIANTS)
    )


def _edge_cost(variant, table_size, degree):
    """Operations charged for one RN-to-VN message over ``table_size`` combos."""
    T, d = table_size, degree
    if variant == "max_log":
        return (0, 4 * T, (3 * d + 1) * d * T, T)
    if variant == "mpa":
        return (T, (d + 3) * T, (2 * d + 2) * T, 0)
    raise _unknown_variant(variant)


@immutable
class OpCounts:
    """Operation tally of the RN updates."""

    __slots__ = _FIELDS

    def __init__(self, exponential=0, multiplication=0, addition=0, comparison=0):
        init_slots(
            self,
            exponential=int(exponential),
            multiplication=int(multiplication),
            addition=int(addition),
            comparison=int(comparison),
        )

    def as_dict(self):
        return {name: getattr(self, name) for name in _FIELDS}

    def __add__(self, other):
        if isinstance(other, OpCounts):
            return OpCounts(*(getattr(self, n) + getattr(other, n) for n in _FIELDS))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, OpCounts):
            return self.as_dict() == other.as_dict()
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.as_dict().values()))

    def __repr__(self):
        return "OpCounts(%s)" % ", ".join("%s=%d" % kv for kv in self.as_dict().items())


class OpCounter:
    """Mutable accumulator passed to the decoders to count RN-update work.

    >>> counter = OpCounter()
    >>> counter.record("max_log", table_size=64, degree=3)
    >>> counter.snapshot().comparison
    64
    """

    def __init__(self):
        self.reset()

    def reset(self):
        self._counts = [0, 0, 0, 0]

    def record(self, variant, table_size, degree, vectors=1):
        for i, cost in enumerate(_edge_cost(variant, table_size, degree)):
            self._counts[i] += cost * vectors

    def snapshot(self):
        return OpCounts(*self._counts)


def op_counts(M, d_f, K, n_iters, variant):
    """Closed-form RN-update operation counts of a regular graph.

    >>> op_counts(4, 3, 4, 6, "mpa").exponential
    4608
    >>> op_counts(4, 3, 4, 6, "max_log").addition
    138240
    """
    per_edge = _edge_cost(variant, M ** d_f, d_f)
    return OpCounts(*(cost * K * d_f * n_iters for cost in per_edge))


@immutable
class DecoderState:
    """Messages, beliefs and decisions after decoding.

    Arrays carry a leading batch axis when a batch was decoded.

    :ivar edges: ``(k, j)`` pairs, one per message table.
    :ivar rn_to_vn: (..., E, M) log-domain RN-to-VN messages.
    :ivar vn_to_rn: (..., E, M) log-domain VN-to-RN messages.
    :ivar beliefs: (..., J, M) final log beliefs per user.
    :ivar llrs: (..., J, b) bit LLRs, positive favouring 0.
    :ivar hard_bits: (..., J, b) decisions; an LLR of exactly 0 gives 1.
    :ivar iterations: Iterations actually run.
    """

    __slots__ = (
        "edges",
        "rn_to_vn",
        "vn_to_rn",
        "beliefs",
        "llrs",
        "hard_bits",
        "iterations",
    )

    def __init__(self, edges, rn_to_vn, vn_to_rn, beliefs, llrs, iterations):
        llrs = frozen(llrs)
        init_slots(
            self,
            edges=tuple(edges),
            rn_to_vn=frozen(rn_to_vn),
            vn_to_rn=frozen(vn_to_rn),
            beliefs=frozen(beliefs),
            llrs=llrs,
            hard_bits=frozen(llrs <= 0, dtype=np.int8),
            iterations=int(iterations),
        )

    def message(self, k, j):
        """RN ``k`` to VN ``j`` message, or ``KeyError`` off the graph."""
        if (k, j) not in self.edges:
            raise KeyError("no edge between resource %d and user %d" % (k, j))
        return self.rn_to_vn[..., self.edges.index((k, j)), :]

    def symbols(self):
        """Most likely symbol index per user."""
        return np.argmax(self.beliefs, axis=-1)

    def bits(self):
        """Hard bits flattened user by user, matching the point labels."""
        return self.hard_bits.reshape(self.hard_bits.shape[:-2] + (-1,))


def _unchanged(new, old):
    return all(np.array_equal(a, b) for a, b in zip(new, old))


class _ResourceTable:
    __slots__ = ("k", "M", "users", "edges", "combos", "intensity", "rho2")

    def __init__(self, k, M, users, edges, combos, intensity, rho2):
        self.k = k
        self.M = M
        self.users = users
        self.edges = edges
        self.combos = combos
        self.intensity = intensity
        self.rho2 = rho2

    @property
    def degree(self):
        return len(self.users)

    def metric(self, y_k, include_logdet):
        metric = -((y_k[:, None] - self.intensity) ** 2) / (2.0 * self.rho2)
        if include_logdet:
            metric = metric - 0.5 * np.log(2.0 * math.pi * self.rho2)
        return metric

    def marginalize(self, table, u, reduce):
        """Reduce a (B, T) table to (B, M) over every axis but user ``u``'s."""
        B, d, M = table.shape[0], self.degree, self.M
        grid = np.moveaxis(table.reshape((B,) + (M,) * d), 1 + u, 1)
        return reduce(grid.reshape(B, M, -1), axis=2)


class MessagePassingDecoder:
    """Per-resource symbol-combination tables of one codebook set.

    :type codebook_set: :class:`~scmavlc.model.CodebookSet`
    """

    def __init__(self, codebook_set):
        params = codebook_set.params
        self.codebook_set = codebook_set
        self.K, self.J, self.M = params.K, params.J, params.M
        self.bits = params.bits_per_symbol
        graph = codebook_set.graph
        self.settle_after = graph.diameter if graph.is_tree else None
        self.edges = tuple(
            (k, j) for k in range(params.K) for j in graph.rn_neighbors[k]
        )
        edge_id = {edge: e for e, edge in enumerate(self.edges)}
        self.user_edges = tuple(
            tuple(edge_id[(k, j)] for k in graph.vn_neighbors[j])
            for j in range(params.J)
        )

        self.tables = []
        for k in range(params.K):
            users = graph.rn_neighbors[k]
            if not users:
                continue
            d = len(users)
            combos = np.indices((params.M,) * d).reshape(d, -1).T
            intensity = np.zeros(len(combos))
            for u, j in enumerate(users):
                row = codebook_set.gains[j, k] * codebook_set.codebook_matrix(j)[k]
                intensity += row[combos[:, u]]
            rho2 = params.sigma2 + params.varsigma2 * params.sigma2 * intensity
            if (rho2 <= 0).any():
                raise DomainError(
                    "rho2 at resource %d" % (k + 1), rho2.min(), "positive"
                )
            edges = tuple(edge_id[(k, j)] for j in users)
            self.tables.append(
                _ResourceTable(k, params.M, users, edges, combos, intensity, rho2)
            )

        labels = natural_binary_labels(np.arange(params.M), self.bits)
        self._bit_is_zero = labels.T == 0

    def _settled(self, iterations, new, old):
        if self.settle_after is None:
            return False
        return iterations >= self.settle_after or _unchanged(new, old)

    def _received(self, y):
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        Y = np.atleast_2d(y)
        if Y.ndim != 2 or Y.shape[1] != self.K:
            raise DimensionError("received vector", "length %d" % self.K, y.shape)
        return Y, single

    def _llrs(self, beliefs, combine):
        llrs = np.empty(beliefs.shape[:-1] + (self.bits,))
        for kappa, zero in enumerate(self._bit_is_zero):
            llrs[..., kappa] = combine(beliefs[..., zero]) - combine(
                beliefs[..., ~zero]
            )
        return llrs

    def _state(self, single, rn_to_vn, vn_to_rn, beliefs, llrs, iterations):
        if single:
            rn_to_vn, vn_to_rn, beliefs, llrs = (
                a[0] for a in (rn_to_vn, vn_to_rn, beliefs, llrs)
            )
        return DecoderState(self.edges, rn_to_vn, vn_to_rn, beliefs, llrs, iterations)

    def max_log(
        self,
        y,
        n_iters=DEFAULT_ITERS,
        include_logdet=False,
        counter=None,
        early_exit=True,
    ):
        if n_iters < 1:
            raise ConfigError("max_log_mpa needs n_iters >= 1", n_iters)
        Y, single = self._received(y)
        B, E, M = Y.shape[0], len(self.edges), self.M
        prior = math.log(1.0 / M)
        metrics = [t.metric(Y[:, t.k], include_logdet) for t in self.tables]
        rn_to_vn = np.zeros((B, E, M))
        vn_to_rn = np.full((B, E, M), prior)

        iterations = 0
        for _ in range(n_iters):
            new_rn = np.empty_like(rn_to_vn)
            for table, metric in zip(self.tables, metrics):
                incoming = [
                    vn_to_rn[:, e, :][:, table.combos[:, u]]
                    for u, e in enumerate(table.edges)
                ]
                for u, e in enumerate(table.edges):
                    total = metric
                    for r, message in enumerate(incoming):
                        if r != u:
                            total = total + message
                    new_rn[:, e, :] = table.marginalize(total, u, np.max)
                    if counter is not None:
                        counter.record("max_log", len(table.combos), table.degree, B)

            new_vn = np.empty_like(vn_to_rn)
            for edges in self.user_edges:
                for e in edges:
                    total = np.full((B, M), prior)
                    for other in edges:
                        if other != e:
                            total = total + new_rn[:, other, :]
                    new_vn[:, e, :] = total

            iterations += 1
            settled = early_exit and self._settled(
                iterations, (new_rn, new_vn), (rn_to_vn, vn_to_rn)
            )
            rn_to_vn, vn_to_rn = new_rn, new_vn
            if settled:
                break

        beliefs = np.full((B, self.J, M), prior)
        for j, edges in enumerate(self.user_edges):
            for e in edges:
                beliefs[:, j, :] += rn_to_vn[:, e, :]
        llrs = self._llrs(beliefs, lambda values: values.max(axis=-1))
        return self._state(single, rn_to_vn, vn_to_rn, beliefs, llrs, iterations)

    def mpa(self, y, n_iters=DEFAULT_ITERS, counter=None, early_exit=True):
        if n_iters < 0:
            raise ConfigError("mpa_linear needs n_iters >= 0", n_iters)
        Y, single = self._received(y)
        B, E, M = Y.shape[0], len(self.edges), self.M
        likelihoods = []
        for table in self.tables:
            metric = table.metric(Y[:, table.k], include_logdet=True)
            likelihoods.append(np.exp(metric - metric.max(axis=1, keepdims=True)))
        rn_to_vn = np.full((B, E, M), 1.0 / M)
        vn_to_rn = np.full((B, E, M), 1.0 / M)

        def normalized(values):
            with np.errstate(invalid="ignore", divide="ignore"):
                return values / values.sum(axis=-1, keepdims=True)

        iterations = 0
        for _ in range(n_iters):
            new_rn = np.empty_like(rn_to_vn)
            for table, likelihood in zip(self.tables, likelihoods):
                incoming = [
                    vn_to_rn[:, e, :][:, table.combos[:, u]]
                    for u, e in enumerate(table.edges)
                ]
                for u, e in enumerate(table.edges):
                    total = likelihood
                    for r, message in enumerate(incoming):
                        if r != u:
                            total = total * message
                    new_rn[:, e, :] = normalized(table.marginalize(total, u, np.sum))
                    if counter is not None:
                        counter.record("mpa", len(table.combos), table.degree, B)

            new_vn = np.empty_like(vn_to_rn)
            for edges in self.user_edges:
                for e in edges:
                    total = np.full((B, M), 1.0 / M)
                    for other in edges:
                        if other != e:
                            total = total * new_rn[:, other, :]
                    new_vn[:, e, :] = normalized(total)

            iterations += 1
            settled = early_exit and self._settled(
                iterations, (new_rn, new_vn), (rn_to_vn, vn_to_rn)
            )
            rn_to_vn, vn_to_rn = new_rn, new_vn
            if settled:
                break

        beliefs = np.full((B, self.J, M), 1.0 / M)
        for j, edges in enumerate(self.user_edges):
            for e in edges:
                beliefs[:, j, :] *= rn_to_vn[:, e, :]
        mass = beliefs.sum(axis=-1)
        if not (np.isfinite(mass) & (mass > 0)).all():
            raise UnderflowError("mpa_linear")
        beliefs = beliefs / mass[..., None]
        with np.errstate(divide="ignore"):
            llrs = self._llrs(beliefs, lambda values: np.log(values.sum(axis=-1)))
            logs = [np.log(a) for a in (rn_to_vn, vn_to_rn, beliefs)]
        return self._state(single, logs[0], logs[1], logs[2], llrs, iterations)


def max_log_mpa(
    y,
    codebook_set,
    n_iters=DEFAULT_ITERS,
    include_logdet=False,
    counter=None,
    early_exit=True,
):
    """Max-Log message passing with per-resource input-dependent variance.

    The RN metric is ``-(y_k - x)^2 / (2 rho^2)`` with
    ``rho^2 = sigma2 + varsigma2 * sigma2 * x`` for the superimposed
    intensity ``x`` of each symbol combination. ``include_logdet`` adds the
    ``-0.5 log(2 pi rho^2)`` term of the full likelihood.

    :param y: Received vector of length K, or a (B, K) batch.
    :type codebook_set: :class:`~scmavlc.model.CodebookSet`
    :param n_iters: Iterations, at least 1.
    :param counter: Optional :class:`OpCounter` charged for every RN update.
    :param early_exit: On a tree graph, stop at a message fixpoint or after
        ``graph.diameter`` iterations.
    :raises ConfigError: For ``n_iters < 1``.
    :raises DimensionError: If ``y`` does not have K entries.
    :rtype: :class:`DecoderState`
    """
    decoder = MessagePassingDecoder(codebook_set)
    return decoder.max_log(y, n_iters, include_logdet, counter, early_exit)


def mpa_linear(y, codebook_set, n_iters=DEFAULT_ITERS, counter=None, early_exit=True):
    """Sum-product message passing in the probability domain.

    Uses the full Gaussian likelihood, shifted per resource by its largest
    log term before exponentiation. Messages and beliefs are normalized.

    :raises UnderflowError: If any final belief vanishes entirely.
    :rtype: :class:`DecoderState` (log-domain fields)
    """
    return MessagePassingDecoder(codebook_set).mpa(y, n_iters, counter, early_exit)


def decode_batch(
    Y, codebook_set, n_iters=DEFAULT_ITERS, variant="max_log", decoder=None, **options
):
    """Decode a (B, K) batch with one vectorized schedule."""
    decoder = MessagePassingDecoder(codebook_set) if decoder is None else decoder
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if variant == "max_log":
        return decoder.max_log(Y, n_iters, **options)
    if variant == "mpa":
        return decoder.mpa(Y, n_iters, **options)
    raise _unknown_variant(variant)


def joint_log_likelihood(y, constellation, sigma2, varsigma2):
    """(B, P) log f(y | s_i) under the diagonal input-dependent covariance."""
    Y = np.atleast_2d(np.asarray(y, dtype=float))
    points = constellation.points
    if Y.shape[1] != points.shape[1]:
        raise DimensionError("received vector", "length %d" % points.shape[1], Y.shape)
    variances = varsigma2 * sigma2 * points + sigma2
    log_norm = -0.5 * np.sum(np.log(2.0 * math.pi * variances), axis=1)
    residual = (Y[:, None, :] - points[None, :, :]) ** 2 / (2.0 * variances[None])
    return log_norm[None, :] - residual.sum(axis=2)


def joint_map_bruteforce(y, codebook_set, constellation=None, max_points=MAX_POINTS):
    """Joint MAP over all M^J tuples; ties go to the lowest point index.

    :param constellation: Reuse a precomputed
        :class:`~scmavlc.model.SuperConstellation`.
    :raises CapacityError: If M^J exceeds ``max_points``.
    :returns: ``(tuple, bits)`` for one vector; ``(tuples, bits)`` arrays for
        a batch.
    """
    params = codebook_set.params
    if constellation is None:
        constellation = enumerate_superimposed(codebook_set, max_points)
    y = np.asarray(y, dtype=float)
    scores = joint_log_likelihood(y, constellation, params.sigma2, params.varsigma2)
    best = np.argmax(scores, axis=1)
    if y.ndim == 1:
        index = int(best[0])
        return (
            tuple(int(m) for m in np.unravel_index(index, (params.M,) * params.J)),
            constellation.bit_labels[index].copy(),
        )
    return (
        constellation.index_tuples[best].copy(),
        constellation.bit_labels[best].copy(),
    )

"""IDGN channel sampling, Monte Carlo BER and the union-bound BER.

Frames are simulated in blocks. Block ``b`` draws all of its symbols and
noise from ``TrialStream(seed, b)``, so counters depend only on the seed and
the block size, never on how many workers ran the blocks.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import erfc

from .decoder import DEFAULT_ITERS, MessagePassingDecoder, decode_batch
from .designer import design
from .exceptions import ConfigError, DomainError
from .model import MAX_POINTS, enumerate_superimposed, scale_codebook_set
from .util import immutable, init_slots

logger = logging.getLogger(__name__)

#: Two-sided 95% normal quantile.
Z_95 = 1.96

DEFAULT_MIN_BIT_ERRORS = 200
DEFAULT_BLOCK_SIZE = 1000
MODES = ("scale", "redesign")

_ROWS_PER_CHUNK = 64


class TrialStream:
    """Reproducible source of symbols and Gaussian deviates for one block.

    Built on ``numpy.random.SeedSequence(seed, spawn_key=(stream_id,))``, so
    distinct ids give independent streams of the same seed.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id,)
        )
        self._rng = np.random.default_rng(sequence)

    @property
    def state(self):
        return self._rng.bit_generator.state

    def normal(self, size):
        return self._rng.standard_normal(size)

    def symbols(self, M, size):
        return self._rng.integers(0, M, size=size)

    def __repr__(self):
        return "TrialStream(seed=%d, stream_id=%d)" % (self.seed, self.stream_id)


def add_idgn(s, sigma2, varsigma2, stream):
    """y = s + sqrt(s) z1 + z0 with z1 ~ N(0, varsigma2 sigma2), z0 ~ N(0, sigma2).

    :param s: Intensities of any shape, componentwise >= 0.
    :type stream: :class:`TrialStream`
    :raises DomainError: On negative intensities or variances.
    """
    s = np.asarray(s, dtype=float)
    if (s < 0).any():
        raise DomainError("s", float(s.min()), "componentwise >= 0")
    if sigma2 < 0 or varsigma2 < 0:
        raise DomainError("noise variance", min(sigma2, varsigma2), ">= 0")
    z1 = math.sqrt(varsigma2 * sigma2) * stream.normal(s.shape)
    z0 = math.sqrt(sigma2) * stream.normal(s.shape)
    return s + np.sqrt(s) * z1 + z0


def q_function(x):
    """Gaussian tail probability.

    >>> float(q_function(0.0))
    0.5
    """
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def pep_idgn(s_i, s_j, sigma2, varsigma2):
    """Probability of deciding ``s_j`` when ``s_i`` was sent.

    ``Q(sqrt(sum((s_i - s_j)^2 / (4 nu))))`` with ``nu`` the per-resource
    noise variance of :func:`add_idgn` at the transmitted point. Uses the
    variances of ``s_i`` only, so the result is not symmetric in its
    arguments.
    """
    s_i = np.asarray(s_i, dtype=float)
    s_j = np.asarray(s_j, dtype=float)
    nu = varsigma2 * sigma2 * s_i + sigma2
    return q_function(np.sqrt(np.sum((s_i - s_j) ** 2 / (4.0 * nu), axis=-1)))


def pep_awgn(s_i, s_j, sigma2):
    """Signal-independent pairwise error probability Q(|d| / (2 sqrt(sigma2))).

    >>> round(float(pep_awgn([0.0], [0.4], 0.01)), 6)  # Q(2)
    0.02275
    """
    delta = np.asarray(s_i, dtype=float) - np.asarray(s_j, dtype=float)
    return q_function(np.linalg.norm(delta, axis=-1) / (2.0 * math.sqrt(sigma2)))


def analytical_ber(codebook_set, max_points=MAX_POINTS, constellation=None):
    """Union bound on the BER with uniform priors and Hamming-weighted PEPs.

    :raises CapacityError: If M^J exceeds ``max_points``.
    """
    params = codebook_set.params
    if params.M < 2:
        raise ConfigError("BER needs M >= 2", params.M)
    if constellation is None:
        constellation = enumerate_superimposed(codebook_set, max_points)
    points, labels = constellation.points, constellation.bit_labels
    n = len(points)
    total = 0.0
    for start in range(0, n, _ROWS_PER_CHUNK):
        rows = slice(start, min(start + _ROWS_PER_CHUNK, n))
        hamming = (labels[rows, None, :] != labels[None, :, :]).sum(axis=2)
        pep = pep_idgn(
            points[rows, None, :], points[None, :, :], params.sigma2, params.varsigma2
        )
        total += float(np.sum(hamming * pep))
    return total / (n * params.J * params.bits_per_symbol)


@immutable
class BerPoint:
    """One BER measurement.

    :ivar per_user_ber: Bit error rate of each user, user 1 first.
    :ivar ci95_halfwidth: Normal-approximation 95% half-width of ``ber_sim``.
    """

    __slots__ = (
        "pe",
        "frames",
        "bits_sent",
        "bit_errors",
        "ber_sim",
        "ber_analytical",
        "per_user_ber",
        "ci95_halfwidth",
    )

    def __init__(
        self,
        pe,
        frames,
        bits_sent,
        bit_errors,
        per_user_errors,
        ber_analytical=math.nan,
    ):
        frames, bits_sent, bit_errors = int(frames), int(bits_sent), int(bit_errors)
        ber = bit_errors / bits_sent if bits_sent else math.nan
        per_user_errors = [int(e) for e in per_user_errors]
        per_user_bits = bits_sent / len(per_user_errors) if per_user_errors else 0
        halfwidth = math.nan
        if bits_sent:
            halfwidth = Z_95 * math.sqrt(ber * (1.0 - ber) / bits_sent)
        init_slots(
            self,
            pe=float(pe),
            frames=frames,
            bits_sent=bits_sent,
            bit_errors=bit_errors,
            ber_sim=ber,
            ber_analytical=float(ber_analytical),
            per_user_ber=tuple(
                e / per_user_bits if per_user_bits else math.nan
                for e in per_user_errors
            ),
            ci95_halfwidth=halfwidth,
        )

    def row(self):
        """One CSV row in :func:`csv_header` order."""
        return [
            self.pe,
            self.ber_sim,
            self.ber_analytical,
            self.bits_sent,
            self.bit_errors,
            self.ci95_halfwidth,
        ] + list(self.per_user_ber)

    def as_dict(self):
        return {name: getattr(self, name) for name in self.__slots__}

    def __eq__(self, other):
        if isinstance(other, BerPoint):
            # nan fields (no analytical value, nothing sent) compare equal
            pairs = zip(self.as_dict().values(), other.as_dict().values())
            return all(_same(a, b) for a, b in pairs)
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return "BerPoint(pe=%r, ber_sim=%r, bit_errors=%d, bits_sent=%d)" % (
            self.pe,
            self.ber_sim,
            self.bit_errors,
            self.bits_sent,
        )


def _same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(map(_same, a, b))
    return a == b or (a != a and b != b)


def csv_header(J):
    return [
        "pe",
        "ber_sim",
        "ber_analytical",
        "bits_sent",
        "bit_errors",
        "ci95",
    ] + ["per_user_ber_%d" % (j + 1) for j in range(J)]


def _run_block(block_id, frames, codebook_set, constellation, seed, decode, noise):
    params = codebook_set.params
    stream = TrialStream(seed, block_id)
    tuples = stream.symbols(params.M, (frames, params.J))
    index = tuples @ (params.M ** np.arange(params.J - 1, -1, -1))
    sent = constellation.points[index]
    received = sent
    if noise:
        received = add_idgn(sent, params.sigma2, params.varsigma2, stream)
    decided = np.asarray(decode(received), dtype=np.int8)
    errors = decided != constellation.bit_labels[index]
    per_user = errors.reshape(frames, params.J, params.bits_per_symbol).sum(axis=(0, 2))
    logger.debug("block %d: %d frames, %d bit errors", block_id, frames, per_user.sum())
    return frames, per_user


def simulate_ber(
    codebook_set,
    n_iters=DEFAULT_ITERS,
    min_bit_errors=DEFAULT_MIN_BIT_ERRORS,
    max_frames=None,
    seed=0,
    block_size=DEFAULT_BLOCK_SIZE,
    decoder=None,
    noise=True,
    workers=1,
    analytical=True,
    max_points=MAX_POINTS,
):
    """Monte Carlo BER of Max-Log message passing over the IDGN channel.

    Simulation stops after the first block that reaches ``min_bit_errors`` or
    once ``max_frames`` frames were sent, whichever comes first.

    :param decoder: Optional callable mapping a (B, K) batch to (B, J*b)
        hard bits; defaults to Max-Log message passing with ``n_iters``.
    :param noise: ``False`` feeds the noiseless points to the decoder.
    :param workers: Threads decoding blocks concurrently.
    :param analytical: Also evaluate :func:`analytical_ber`.
    :raises ConfigError: Without any stopping bound, or for M < 2.
    :rtype: :class:`BerPoint`
    """
    if min_bit_errors is None and max_frames is None:
        raise ConfigError("simulate_ber needs min_bit_errors or max_frames")
    if block_size < 1:
        raise ConfigError("block_size must be >= 1", block_size)
    params = codebook_set.params
    if params.M < 2:
        raise ConfigError("BER needs M >= 2", params.M)
    constellation = enumerate_superimposed(codebook_set, max_points)

    if decoder is None:
        engine = MessagePassingDecoder(codebook_set)

        def decode(Y):
            return decode_batch(Y, codebook_set, n_iters, decoder=engine).bits()

    else:

        def decode(Y):
            return decoder(Y)

    def done(frames, errors):
        if min_bit_errors is not None and errors >= min_bit_errors:
            return True
        return max_frames is not None and frames >= max_frames

    def block_frames(block_id):
        if max_frames is None:
            return block_size
        return max(0, min(block_size, max_frames - block_id * block_size))

    frames, per_user = 0, np.zeros(params.J, dtype=np.int64)
    block_id = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while not done(frames, int(per_user.sum())):
            wave = [
                b
                for b in range(block_id, block_id + max(1, workers))
                if block_frames(b) > 0
            ]
            if not wave:
                break
            args = [
                (b, block_frames(b), codebook_set, constellation, seed, decode, noise)
                for b in wave
            ]
            if pool is None:
                results = [_run_block(*a) for a in args]
            else:
                results = list(pool.map(lambda a: _run_block(*a), args))
            for block_frames_run, block_errors in results:
                if done(frames, int(per_user.sum())):
                    break
                frames += block_frames_run
                per_user += block_errors
            block_id += len(wave)
    finally:
        if pool is not None:
            pool.shutdown()

    bits_sent = frames * params.J * params.bits_per_symbol
    ber_analytical = math.nan
    if analytical:
        ber_analytical = analytical_ber(codebook_set, max_points, constellation)
    point = BerPoint(
        params.Pe, frames, bits_sent, per_user.sum(), per_user, ber_analytical
    )
    logger.info(
        "Pe %g: ber %.3g (%d/%d bits), analytical %.3g",
        point.pe,
        point.ber_sim,
        point.bit_errors,
        point.bits_sent,
        point.ber_analytical,
    )
    return point


def _check_pe_list(pe_list):
    pe_list = [float(pe) for pe in pe_list]
    if not pe_list:
        raise ConfigError("pe_list is empty")
    if pe_list[0] <= 0 or any(b <= a for a, b in zip(pe_list, pe_list[1:])):
        raise ConfigError("pe_list must be positive and increasing", pe_list)
    return pe_list


def sweep(
    pe_list,
    codebook_set=None,
    design_params=None,
    design_config=None,
    mode="scale",
    **simulate_options
):
    """BER points over a power grid.

    In ``scale`` mode ``codebook_set`` is rescaled to each power. In
    ``redesign`` mode a fresh design runs at every power, from
    ``design_params`` (or the parameters of ``codebook_set``).

    :raises ConfigError: On an empty or unordered grid, or missing inputs.
    :rtype: ``list`` of :class:`BerPoint`
    """
    pe_list = _check_pe_list(pe_list)
    if mode not in MODES:
        raise ConfigError("mode must be one of %s" % (MODES,), mode)
    if mode == "scale" and codebook_set is None:
        raise ConfigError("scale mode needs a codebook set")
    if mode == "redesign":
        if design_params is None:
            if codebook_set is None:
                raise ConfigError("redesign mode needs design parameters")
            design_params = codebook_set.params

    points = []
    for pe in pe_list:
        if mode == "scale":
            current = scale_codebook_set(codebook_set, pe)
        else:
            current = design(design_params.replace(Pe=pe), design_config).set
        points.append(simulate_ber(current, **simulate_options))
    return points


def power_for_target_ber(points, target=1e-3, analytical=False):
    """Smallest power reaching ``target``, interpolating log10(BER) linearly.

    :param points: :class:`BerPoint` values in increasing power order.
    :returns: The power, or ``None`` if the grid never reaches the target.
    """
    curve = [(p.pe, p.ber_analytical if analytical else p.ber_sim) for p in points]
    previous = None
    for pe, ber in curve:
        if ber <= target:
            if previous is None or ber <= 0 or previous[1] <= 0:
                return pe
            pe0, ber0 = previous
            slope = (math.log10(ber) - math.log10(ber0)) / (pe - pe0)
            return pe0 + (math.log10(target) - math.log10(ber0)) / slope
        previous = (pe, ber)
    return None


def dimming_headroom(p_design, p_required):
    """Fraction of the design power left unused at the required power."""
    if p_required is None:
        return None
    return (p_design - p_required) / p_design

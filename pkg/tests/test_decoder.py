import math

import numpy as np
import pytest
from scipy.special import logsumexp

from scmavlc.decoder import (
    DecoderState,
    MessagePassingDecoder,
    _ResourceTable,
    OpCounter,
    OpCounts,
    decode_batch,
    joint_log_likelihood,
    joint_map_bruteforce,
    max_log_mpa,
    mpa_linear,
    op_counts,
)
from scmavlc.exceptions import ConfigError, DimensionError
from scmavlc.model import (
    CodebookSet,
    SystemParams,
    build_factor_graph,
    enumerate_superimposed,
)
from scmavlc.simulator import TrialStream, add_idgn


def _noisy(codebook_set, count, seed):
    constellation = enumerate_superimposed(codebook_set)
    stream = TrialStream(seed)
    index = stream.symbols(len(constellation), count)
    params = codebook_set.params
    sent = constellation.points[index]
    return add_idgn(sent, params.sigma2, params.varsigma2, stream), index


def test_op_counts_closed_form():
    assert op_counts(4, 3, 4, 6, "mpa") == OpCounts(4608, 27648, 36864, 0)
    assert op_counts(4, 3, 4, 6, "max_log") == OpCounts(0, 18432, 138240, 4608)
    with pytest.raises(ConfigError):
        op_counts(4, 3, 4, 6, "log_map")


def test_op_counts_add():
    total = OpCounts(1, 2, 3, 4) + OpCounts(exponential=1)
    assert total.as_dict() == {
        "exponential": 2,
        "multiplication": 2,
        "addition": 3,
        "comparison": 4,
    }


@pytest.mark.parametrize("variant", ["max_log", "mpa"])
def test_counter_matches_closed_form(ls_j6, variant):
    counter = OpCounter()
    y = enumerate_superimposed(ls_j6).points[1234]
    decode_batch(y, ls_j6, n_iters=6, variant=variant, counter=counter)
    assert counter.snapshot() == op_counts(4, 3, 4, 6, variant)
    counter.reset()
    assert counter.snapshot() == OpCounts()


def test_noise_free_recovery(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    state = max_log_mpa(constellation.points, ls_j3)
    assert np.array_equal(state.symbols(), constellation.index_tuples)
    assert np.array_equal(state.bits(), constellation.bit_labels)


def test_single_vector_shapes(ls_j3):
    y = enumerate_superimposed(ls_j3).points[27]
    state = max_log_mpa(y, ls_j3)
    assert state.symbols().tolist() == [1, 2, 3]
    assert state.llrs.shape == (3, 2)
    assert state.beliefs.shape == (3, 4)
    assert state.message(0, 1).shape == (4,)
    with pytest.raises(KeyError):
        state.message(3, 1)
    with pytest.raises(DimensionError):
        max_log_mpa(y[:3], ls_j3)


def test_llr_sign_convention():
    empty = np.zeros((0, 4))
    state = DecoderState((), empty, empty, np.zeros((1, 4)), [[0.0, 1.0, -1.0]], 1)
    assert state.hard_bits.tolist() == [[1, 0, 1]]


def test_iteration_bounds(ls_j3):
    y = enumerate_superimposed(ls_j3).points[5]
    with pytest.raises(ConfigError):
        max_log_mpa(y, ls_j3, n_iters=0)
    with pytest.raises(ConfigError):
        decode_batch(y, ls_j3, variant="log_map")
    state = mpa_linear(y, ls_j3, n_iters=0)
    np.testing.assert_allclose(state.beliefs, math.log(0.25), rtol=1e-12)
    assert state.iterations == 0


def test_tree_messages_settle(ls_j3):
    Y, _ = _noisy(ls_j3, 20, seed=8)
    diameter = ls_j3.graph.diameter
    settled = max_log_mpa(Y, ls_j3, n_iters=diameter, early_exit=False)
    later = max_log_mpa(Y, ls_j3, n_iters=diameter + 3, early_exit=False)
    np.testing.assert_allclose(later.rn_to_vn, settled.rn_to_vn, rtol=0, atol=1e-12)
    early = max_log_mpa(Y, ls_j3, n_iters=50)
    assert early.iterations <= diameter
    np.testing.assert_allclose(early.rn_to_vn, settled.rn_to_vn, rtol=0, atol=1e-12)
    assert np.array_equal(early.bits(), settled.bits())


def test_loopy_graphs_run_every_iteration(ls_j6):
    y = enumerate_superimposed(ls_j6).points[99]
    assert MessagePassingDecoder(ls_j6).settle_after is None
    assert max_log_mpa(y, ls_j6, n_iters=9).iterations == 9


@pytest.mark.parametrize(
    "trials", [2000, pytest.param(10_000, marks=pytest.mark.slow)]
)
def test_max_log_matches_joint_map_on_tree(ls_j3, trials):
    Y, _ = _noisy(ls_j3, trials, seed=21)
    state = max_log_mpa(Y, ls_j3, n_iters=10, include_logdet=True)
    tuples, bits = joint_map_bruteforce(Y, ls_j3)
    constellation = enumerate_superimposed(ls_j3)
    scores = np.sort(joint_log_likelihood(Y, constellation, 0.01, 5.0), axis=1)
    unique = scores[:, -1] - scores[:, -2] > 1e-9
    assert unique.mean() > 0.99
    assert np.array_equal(state.symbols()[unique], tuples[unique])
    assert np.array_equal(state.bits()[unique], bits[unique])


def test_logdet_shift_without_shot_noise(ls_j3):
    awgn = ls_j3.with_params(varsigma2=0.0)
    Y, _ = _noisy(awgn, 50, seed=2)
    plain = max_log_mpa(Y, awgn)
    shifted = max_log_mpa(Y, awgn, include_logdet=True)
    np.testing.assert_allclose(shifted.llrs, plain.llrs, rtol=0, atol=1e-9)
    for table in MessagePassingDecoder(awgn).tables:
        assert (table.rho2 == 0.01).all()


def test_mpa_marginals_are_exact_on_tree(ls_j3):
    noisy_set = ls_j3.with_params(sigma2=0.5)
    Y, _ = _noisy(noisy_set, 10, seed=4)
    state = mpa_linear(Y, noisy_set, n_iters=10, early_exit=False)
    constellation = enumerate_superimposed(noisy_set)
    joint = joint_log_likelihood(Y, constellation, 0.5, 5.0)
    for j in range(3):
        symbol = constellation.index_tuples[:, j]
        log_marginal = np.stack(
            [logsumexp(joint[:, symbol == m], axis=1) for m in range(4)], axis=1
        )
        expected = np.exp(log_marginal - logsumexp(log_marginal, axis=1, keepdims=True))
        np.testing.assert_allclose(
            np.exp(state.beliefs[:, j]), expected, rtol=1e-9, atol=1e-12
        )


def test_mpa_agrees_with_max_log_at_high_snr(ls_j3):
    quiet = ls_j3.with_params(sigma2=1e-3)
    Y, _ = _noisy(quiet, 500, seed=13)
    agreement = np.mean(mpa_linear(Y, quiet).bits() == max_log_mpa(Y, quiet).bits())
    assert agreement >= 0.99


def test_joint_map_noise_free(ls_j6):
    constellation = enumerate_superimposed(ls_j6)
    y = constellation.points[2021]
    tuple_, bits = joint_map_bruteforce(y, ls_j6, constellation)
    assert tuple_ == tuple(constellation.index_tuples[2021].tolist())
    assert np.array_equal(bits, constellation.bit_labels[2021])


def test_joint_map_is_nearest_point_without_shot_noise(ls_j3):
    awgn = ls_j3.with_params(varsigma2=0.0)
    Y, _ = _noisy(awgn, 100, seed=6)
    points = enumerate_superimposed(awgn).points
    nearest = np.argmin(((Y[:, None, :] - points[None]) ** 2).sum(axis=2), axis=1)
    tuples, _ = joint_map_bruteforce(Y, awgn)
    assert np.array_equal(tuples, enumerate_superimposed(awgn).index_tuples[nearest])


def test_joint_map_prefers_the_quieter_point():
    params = SystemParams(K=1, J=1, M=2, N=1, sigma2=0.01, varsigma2=5.0, Pe=10.0)
    graph = build_factor_graph(1, 1, 1)
    codebook_set = CodebookSet(params, graph, [np.array([[1.0, 4.0]])])
    sd_1 = math.sqrt(0.01 * (1 + 5.0 * 1.0))
    sd_4 = math.sqrt(0.01 * (1 + 5.0 * 4.0))
    # Equal Mahalanobis distance to both points.
    y = (sd_4 * 1.0 + sd_1 * 4.0) / (sd_1 + sd_4)
    tuple_, bits = joint_map_bruteforce(np.array([y]), codebook_set)
    assert tuple_ == (0,)
    assert bits.tolist() == [0]



class _ShiftedTable(_ResourceTable):
    offset = 3.7

    def metric(self, y_k, include_logdet):
        return super().metric(y_k, include_logdet) + self.offset


def _shift_first_resource(codebook_set):
    decoder = MessagePassingDecoder(codebook_set)
    t = decoder.tables[0]
    decoder.tables[0] = _ShiftedTable(
        t.k, t.M, t.users, t.edges, t.combos, t.intensity, t.rho2
    )
    return decoder, t.edges


def test_resource_offset_shifts_messages_not_llrs(ls_j3):
    Y, _ = _noisy(ls_j3, 40, seed=31)
    plain = MessagePassingDecoder(ls_j3)
    shifted, edges = _shift_first_resource(ls_j3)

    first = shifted.max_log(Y, n_iters=1)
    reference = plain.max_log(Y, n_iters=1)
    for e in range(len(plain.edges)):
        offset = _ShiftedTable.offset if e in edges else 0.0
        np.testing.assert_allclose(
            first.rn_to_vn[:, e], reference.rn_to_vn[:, e] + offset, rtol=0, atol=1e-9
        )
    np.testing.assert_allclose(first.llrs, reference.llrs, rtol=0, atol=1e-9)

    later = shifted.max_log(Y, n_iters=6, early_exit=False)
    reference = plain.max_log(Y, n_iters=6, early_exit=False)
    difference = later.rn_to_vn - reference.rn_to_vn
    assert np.ptp(difference, axis=-1).max() <= 1e-8
    np.testing.assert_allclose(later.llrs, reference.llrs, rtol=0, atol=1e-8)


def test_llr_flips_when_bit_halves_swap(ls_j3):
    Y, _ = _noisy(ls_j3, 30, seed=17)
    # New symbol m is old symbol m ^ 2: the first bit's halves trade places.
    swapped = ls_j3.with_books([book.C[:, [2, 3, 0, 1]] for book in ls_j3.books])
    plain = max_log_mpa(Y, ls_j3).llrs
    flipped = max_log_mpa(Y, swapped).llrs
    np.testing.assert_allclose(flipped[..., 0], -plain[..., 0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(flipped[..., 1], plain[..., 1], rtol=0, atol=1e-12)


def test_single_user_decision_is_metric_argmax():
    params = SystemParams(K=1, J=1, M=2, N=1, sigma2=0.01, varsigma2=5.0, Pe=10.0)
    codebook_set = CodebookSet(
        params, build_factor_graph(1, 1, 1), [np.array([[1.0, 4.0]])]
    )
    y = np.linspace(-0.5, 5.5, 121)[:, None]
    x = np.array([1.0, 4.0])
    rho2 = 0.01 * (1.0 + 5.0 * x)
    metric = -((y - x) ** 2) / (2.0 * rho2)

    state = max_log_mpa(y, codebook_set)
    np.testing.assert_allclose(
        state.beliefs[:, 0], metric + math.log(0.5), rtol=1e-12, atol=1e-12
    )
    assert np.array_equal(state.symbols()[:, 0], np.argmax(metric, axis=1))

    full = metric - 0.5 * np.log(2.0 * math.pi * rho2)
    exact = max_log_mpa(y, codebook_set, include_logdet=True)
    assert np.array_equal(exact.symbols()[:, 0], np.argmax(full, axis=1))

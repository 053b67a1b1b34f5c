import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channel_models import ChannelRealization, DeterministicSampler, LogNormalLossModel, LogNormalSampler
from coherent_fidelity import (ModulationScheme, average_fidelity, fidelity_cf_oracle, fidelity_closed_form,
                               fidelity_pipeline_oracle, mean_photon_number, sample_alpha, sample_alphas, sweep_fidelity,
                               target_amplitude)
from combining import equal_weight_tree
from gaussian_core import CoherentAmplitude
from random_streams import StreamFactory
from simulation_errors import DomainError

FADING = LogNormalSampler(LogNormalLossModel(3.0, 2.0))
MILD_FADING = LogNormalSampler(LogNormalLossModel(3.0, 1.0))
DIVERSITY = [1, 2, 3, 4]
AMPLITUDES = [10.0, 20.0, 30.0, 40.0, 50.0]
MODULATION_VARIANCES = [2.0, 4.0, 6.0, 8.0, 10.0]


def test_single_channel_example():
    F = fidelity_closed_form(1, [ChannelRealization(0.25)], None, CoherentAmplitude(1.0), 0.5)
    assert F == pytest.approx(np.exp(-2.25))


@pytest.mark.parametrize("eps", [0.0, 0.01, 0.2])
def test_vacuum_fidelity_only_sees_noise(eps):
    F = fidelity_closed_form(1, [ChannelRealization(0.4, eps)], None, CoherentAmplitude(0.0), 0.6)
    assert F == pytest.approx(2.0 / (2.0 + eps))


def test_lossless_channel_is_perfect():
    realizations = [ChannelRealization(1.0)] * 5
    assert fidelity_closed_form(5, realizations, None, CoherentAmplitude(1.3, -0.7), 1.0) == pytest.approx(1.0)
    assert fidelity_closed_form(4, realizations[:4], equal_weight_tree(4), CoherentAmplitude(2.0), 1.0) == pytest.approx(1.0)


def test_mismatched_M_rejected():
    with pytest.raises(DomainError):
        fidelity_closed_form(3, [ChannelRealization(0.5)] * 2, None, CoherentAmplitude(1.0), 0.7)


def test_target_amplitude_scalings():
    assert target_amplitude(1.0, 0.5) == pytest.approx(2.0)
    assert target_amplitude(1.0, 0.5, "compensated") == pytest.approx(0.5)
    np.testing.assert_allclose(target_amplitude(np.array([1.0, 2.0j]), 0.5), [2.0, 4.0j])
    with pytest.raises(DomainError):
        target_amplitude(1.0, 0.0)
    with pytest.raises(DomainError):
        target_amplitude(1.0, 0.5, "doubled")


channel_draws = st.lists(
    st.tuples(st.floats(min_value=0.01, max_value=0.999), st.floats(min_value=0.0, max_value=0.1)),
    min_size=1, max_size=5,
)
amplitudes = st.builds(CoherentAmplitude, st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=-2.0, max_value=2.0))


@settings(max_examples=150, deadline=None)
@given(channel_draws, amplitudes, st.floats(min_value=0.2, max_value=1.0), st.sampled_from(["printed", "compensated"]))
def test_closed_form_agrees_with_oracles(draws, alpha, mean_sqrtT, scaling):
    realizations = [ChannelRealization(T, eps) for T, eps in draws]
    M = len(realizations)
    closed = fidelity_closed_form(M, realizations, None, alpha, mean_sqrtT, scaling)
    assert 0.0 <= closed <= 1.0
    assert fidelity_cf_oracle(M, realizations, None, alpha, mean_sqrtT, scaling) == pytest.approx(closed, abs=1e-9)
    assert fidelity_pipeline_oracle(M, realizations, alpha, mean_sqrtT, scaling) == pytest.approx(closed, abs=1e-6)


def test_quadrature_oracle_on_small_amplitude():
    realizations = [ChannelRealization(0.6, 0.01), ChannelRealization(0.3, 0.02)]
    alpha = CoherentAmplitude(0.3, 0.1)
    closed = fidelity_closed_form(2, realizations, None, alpha, 0.7, "compensated")
    quadrature = fidelity_cf_oracle(2, realizations, None, alpha, 0.7, "compensated", method="quadrature")
    assert quadrature == pytest.approx(closed, abs=1e-6)


def test_unknown_oracle_method_rejected():
    with pytest.raises(DomainError):
        fidelity_cf_oracle(1, [ChannelRealization(0.5)], None, CoherentAmplitude(1.0), 0.7, method="grid")


def test_bpsk_alphabet():
    rng = np.random.default_rng(0)
    assert set(sample_alphas(ModulationScheme.bpsk(1.5, P0=1.0), rng, 100)) == {-1.5 + 0j}
    values = sample_alphas(ModulationScheme.bpsk(1.0, P0=0.25), rng, 20_000)
    assert np.mean(values.real < 0) == pytest.approx(0.25, abs=0.02)


def test_single_draw_matches_the_vectorized_alphabet():
    scheme = ModulationScheme.gaussian(2.0)
    alpha = sample_alpha(scheme, np.random.default_rng(3))
    assert alpha.as_complex() == sample_alphas(scheme, np.random.default_rng(3), 1)[0]
    assert sample_alpha(ModulationScheme.bpsk(2.0, P0=0.0), np.random.default_rng(4)) == CoherentAmplitude(2.0, 0.0)


def test_gaussian_alphabet_photon_number():
    values = sample_alphas(ModulationScheme.gaussian(4.0), np.random.default_rng(1), 100_000)
    assert np.mean(np.abs(values) ** 2) == pytest.approx(1.0, rel=0.03)
    assert mean_photon_number(CoherentAmplitude(0.6, 0.8)) == pytest.approx(1.0)


def test_modulation_scheme_validation():
    with pytest.raises(DomainError):
        ModulationScheme.bpsk(-1.0)
    with pytest.raises(DomainError):
        ModulationScheme.bpsk(1.0, P0=1.5)
    with pytest.raises(DomainError):
        ModulationScheme.gaussian(-0.1)
    assert ModulationScheme.gaussian(2.0).parameter == 2.0


def test_fixed_channel_average_is_exact():
    result = average_fidelity(2, ModulationScheme.bpsk(1.0), DeterministicSampler(0.5, eps_A=0.03), None,
                              50, 10, StreamFactory(3), target_scaling="compensated")
    assert result.f_avg == pytest.approx(2.0 / 2.015)
    assert result.stderr == pytest.approx(0.0, abs=1e-15)


def test_single_channel_draw_has_no_stderr():
    result = average_fidelity(1, ModulationScheme.bpsk(1.0), FADING, None, 1, 5, StreamFactory(0))
    assert result.stderr == 0.0


def test_average_fidelity_rejects_bad_arguments():
    with pytest.raises(DomainError):
        average_fidelity(1, ModulationScheme.bpsk(1.0), FADING, None, 0, 5, StreamFactory(0))
    with pytest.raises(DomainError):
        average_fidelity(2, ModulationScheme.bpsk(1.0), FADING, equal_weight_tree(3), 10, 5, StreamFactory(0))
    with pytest.raises(DomainError):
        average_fidelity(1, ModulationScheme.bpsk(1.0), FADING, None, 10, 5, StreamFactory(0), target_scaling="x")


def test_fidelity_grows_with_diversity():
    results = sweep_fidelity([ModulationScheme.bpsk(3.0)], [1, 2, 3, 4], FADING, n_channel=4000, n_alpha=10,
                             seed=9, target_scaling="compensated")
    values = [r.f_avg for r in results]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_fidelity_drops_with_amplitude():
    schemes = [ModulationScheme.bpsk(a) for a in (0.5, 1.0, 2.0, 3.0)]
    results = sweep_fidelity(schemes, [2], FADING, n_channel=3000, n_alpha=10, seed=2, target_scaling="compensated")
    values = [r.f_avg for r in results]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("scaling", ["printed", "compensated"])
def test_fidelity_drops_with_modulation_variance(scaling):
    schemes = [ModulationScheme.gaussian(v) for v in (0.5, 2.0, 8.0)]
    results = sweep_fidelity(schemes, [2], FADING, n_channel=3000, n_alpha=20, seed=4, target_scaling=scaling)
    values = [r.f_avg for r in results]
    assert all(b < a for a, b in zip(values, values[1:]))


def assert_separated(higher, lower):
    margin = 3.0 * np.hypot(higher.stderr, lower.stderr)
    assert higher.f_avg - lower.f_avg > margin, (higher.f_avg, lower.f_avg, margin)


def trend_table(schemes):
    results = sweep_fidelity(schemes, DIVERSITY, MILD_FADING, n_channel=3000, n_alpha=200, seed=1234,
                             target_scaling="compensated")
    return [results[i * len(schemes):(i + 1) * len(schemes)] for i in range(len(DIVERSITY))]


def test_bpsk_trends_on_the_reference_grid():
    table = trend_table([ModulationScheme.bpsk(a) for a in AMPLITUDES])
    for row in table:
        for larger, smaller in zip(row[1:], row[:-1]):
            assert_separated(smaller, larger)
    for fewer, more in zip(table[:-1], table[1:]):
        for low, high in zip(fewer, more):
            assert_separated(high, low)


def test_gaussian_trends_on_the_reference_grid():
    table = trend_table([ModulationScheme.gaussian(v) for v in MODULATION_VARIANCES])
    for row in table:
        for larger, smaller in zip(row[1:], row[:-1]):
            assert_separated(smaller, larger)
    for low, high in zip(table[0], table[-1]):
        assert_separated(high, low)
    assert all(b.f_avg > a.f_avg for a, b in zip(table[0], table[1]))


def test_vacuum_input_ignores_target_scaling():
    scheme = ModulationScheme.bpsk(0.0)
    printed = average_fidelity(3, scheme, FADING, None, 200, 2, StreamFactory(5))
    compensated = average_fidelity(3, scheme, FADING, None, 200, 2, StreamFactory(5), target_scaling="compensated")
    assert printed.f_avg == pytest.approx(compensated.f_avg)


def test_sweep_order_and_metadata():
    schemes = [ModulationScheme.bpsk(0.5), ModulationScheme.bpsk(1.0)]
    results = sweep_fidelity(schemes, [1, 3], FADING, n_channel=20, n_alpha=4, seed=1)
    assert [(r.M, r.scheme.alpha) for r in results] == [(1, 0.5), (1, 1.0), (3, 0.5), (3, 1.0)]
    assert all(r.label == "lognormal(3,2)" and r.n_alpha == 4 for r in results)
    assert results[2].stats.n_samples == 60


def test_sweep_is_reproducible_across_workers():
    schemes = [ModulationScheme.gaussian(1.0), ModulationScheme.gaussian(3.0)]
    serial = sweep_fidelity(schemes, [1, 2], FADING, n_channel=100, n_alpha=8, seed=6, threads=1)
    pooled = sweep_fidelity(schemes, [1, 2], FADING, n_channel=100, n_alpha=8, seed=6, threads=2)
    assert [r.f_avg for r in serial] == [r.f_avg for r in pooled]


@pytest.mark.parametrize("scaling", ["printed", "compensated"])
def test_fidelity_is_symmetric_in_amplitude_sign(scaling):
    realizations = [ChannelRealization(0.3, 0.01), ChannelRealization(0.7, 0.02), ChannelRealization(0.5)]
    plus = fidelity_closed_form(3, realizations, None, CoherentAmplitude(1.2, 0.4), 0.7, scaling)
    minus = fidelity_closed_form(3, realizations, None, CoherentAmplitude(-1.2, -0.4), 0.7, scaling)
    assert plus == pytest.approx(minus)


def test_empty_sweep_is_empty():
    assert sweep_fidelity([], [1, 2], FADING) == []
    assert sweep_fidelity([ModulationScheme.bpsk(1.0)], [], FADING) == []

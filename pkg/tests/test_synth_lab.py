import io
import math

import numpy as np
import pytest
import scipy.stats

from gridtopo.feeders import make_feeder, random_feeder
from gridtopo.synth_lab import (
    FeederSampler,
    InjectionSpec,
    MeasurementFormatError,
    NoiseSpec,
    SynthError,
    analytic_cov,
    apply_noise,
    attach_labels,
    corrupt_labels,
    generate_increments,
    identity_labels,
    integrate_voltages,
    labels_from_csv,
    labels_to_csv,
    panel_from_csv,
    panel_to_csv,
    to_magnitude,
)
from gridtopo.eval_harness import difference


# -- injection statistics ------------------------------------------------


def test_injection_random_is_deterministic(bus8):
    a = InjectionSpec.random(bus8, seed=3)
    b = InjectionSpec.random(bus8, seed=3)
    c = InjectionSpec.random(bus8, seed=4)
    assert np.array_equal(a.covariances, b.covariances)
    assert not np.array_equal(a.covariances, c.covariances)


def test_injection_respects_masks(bus8, bus8_spec):
    assert np.all(bus8_spec.covariances[0] == 0)
    for b in bus8.buses:
        if b.is_slack:
            continue
        assert bus8_spec.present_slots(b.id) == b.mask.indices


def test_injection_scale_clamped(bus8):
    base = 0.004
    spec = InjectionSpec.random(bus8, seed=11, base_sigma=base, bus_spread=5.0)
    for b in bus8.non_slack_ids:
        sig = np.sqrt(np.real(np.diagonal(spec.covariances[b])))
        sig = sig[sig > 0]
        # clamp 0.25x..4x times the +-30% per-phase wobble
        assert np.all(sig >= 0.25 * base * 0.7 - 1e-15)
        assert np.all(sig <= 4.0 * base * 1.3 + 1e-15)


def test_injection_blocks_are_psd(bus8_spec):
    for block in bus8_spec.covariances:
        eig = np.linalg.eigvalsh(block)
        assert eig.min() >= -1e-18


def test_injection_scaled_targets_only_named_buses(bus8, bus8_spec):
    out = bus8_spec.scaled([2, 3], 9.0)
    assert np.allclose(out.covariances[2], 9.0 * bus8_spec.covariances[2])
    assert np.allclose(out.covariances[3], 9.0 * bus8_spec.covariances[3])
    assert np.array_equal(out.covariances[1], bus8_spec.covariances[1])


def test_injection_sample_matches_covariance(bus8, bus8_spec):
    T = 200_000
    draws = bus8_spec.sample(bus8, T, seed=5)
    assert draws.shape == (T, bus8.n_buses, 3)
    assert np.all(draws[:, 0, :] == 0)
    for bus in (1, 4):
        idx = list(bus8_spec.present_slots(bus))
        x = draws[:, bus, idx]
        emp = (x.T.conj() @ x).T / T
        want = bus8_spec.covariances[bus][np.ix_(idx, idx)]
        assert np.abs(emp - want).max() < 0.05 * np.abs(want).max()


def test_reactive_ratio_produces_pseudo_covariance(bus8):
    circ = InjectionSpec.random(bus8, seed=1)
    direc = InjectionSpec.random(bus8, seed=1, reactive_ratio=0.5)
    T = 100_000
    a = circ.sample(bus8, T, seed=2)[:, 1, :]
    b = direc.sample(bus8, T, seed=2)[:, 1, :]
    pseudo_a = (a.T @ a).T / T
    pseudo_b = (b.T @ b).T / T
    scale = np.abs((a.conj().T @ a) / T).max()
    assert np.abs(pseudo_a).max() < 0.05 * scale
    assert np.abs(pseudo_b).max() > 0.25 * scale
    # the ordinary complex covariance stays what the injection covariances say
    herm_b = (b.conj().T @ b).T / T
    idx = list(circ.present_slots(1))
    want = circ.covariances[1][np.ix_(idx, idx)]
    assert np.abs(herm_b[np.ix_(idx, idx)] - want).max() < 0.05 * np.abs(want).max()


# -- panel generation ----------------------------------------------------


def test_generate_increments_shape_and_slack(bus8, bus8_spec):
    panel = generate_increments(bus8, bus8_spec, T=64, seed=9)
    assert panel.kind == "increment"
    assert panel.n_samples == 64
    assert panel.n_buses == bus8.n_buses
    assert np.all(panel.values[:, 0, :] == 0)
    assert np.array_equal(panel.masks, bus8.masks_array())
    assert np.array_equal(panel.labels, identity_labels(panel.masks))


def test_generate_increments_prefix_stable(bus8, bus8_spec):
    short = generate_increments(bus8, bus8_spec, T=100, seed=7)
    long = generate_increments(bus8, bus8_spec, T=500, seed=7)
    assert np.array_equal(short.values, long.values[:100])


def test_slack_sigma_puts_noise_on_the_slack(bus8, bus8_spec):
    panel = generate_increments(bus8, bus8_spec, T=32, seed=1, slack_sigma=0.01)
    assert np.abs(panel.values[:, 0, :]).max() > 0


def test_sampler_analytic_matches_module_helper(bus8, bus8_spec):
    a = FeederSampler(bus8, bus8_spec).analytic()
    b = analytic_cov(bus8, bus8_spec)
    assert a.coords == b.coords
    assert np.allclose(a.real, b.real, atol=1e-15)


def test_sample_covariance_approaches_analytic(bus8, bus8_spec, bus8_analytic):
    T = 200_000
    panel = generate_increments(bus8, bus8_spec, T=T, seed=3)
    D = bus8_analytic.dim
    x = np.empty((T, 2 * D))
    for j, (bus, slot) in enumerate(bus8_analytic.coords):
        x[:, j] = panel.values[:, bus, slot].real
        x[:, D + j] = panel.values[:, bus, slot].imag
    emp = np.cov(x, rowvar=False, ddof=1)
    scale = np.abs(bus8_analytic.real).max()
    assert np.abs(emp - bus8_analytic.real).max() < 0.05 * scale


def test_analytic_pseudo_cov_vanishes_for_circular(bus8_analytic):
    herm = bus8_analytic.complex_cov()
    pseudo = bus8_analytic.pseudo_cov()
    assert np.abs(pseudo).max() < 1e-12 * np.abs(herm).max()
    assert np.allclose(herm, herm.conj().T, atol=1e-15)


def test_integrate_then_difference_round_trips(bus8, bus8_spec):
    inc = generate_increments(bus8, bus8_spec, T=40, seed=2)
    volts = integrate_voltages(inc)
    assert volts.kind == "voltage"
    assert volts.n_samples == 41
    back = difference(volts)
    assert back.kind == "increment"
    assert np.allclose(back.values, inc.values, atol=1e-12)


def test_integrate_rejects_voltage_panel(bus8, bus8_spec):
    inc = generate_increments(bus8, bus8_spec, T=8, seed=2)
    volts = integrate_voltages(inc)
    with pytest.raises(SynthError):
        integrate_voltages(volts)


def test_flat_start_sits_at_nominal_angles(bus8, bus8_spec):
    inc = generate_increments(bus8, bus8_spec, T=4, seed=2)
    volts = integrate_voltages(inc)
    v0 = volts.values[0]
    for b in range(volts.n_buses):
        for s in volts.slots(b):
            assert abs(abs(v0[b, s]) - 1.0) < 1e-12


def test_to_magnitude_drops_angles(bus8, bus8_spec):
    inc = generate_increments(bus8, bus8_spec, T=16, seed=2)
    volts = integrate_voltages(inc)
    mag = to_magnitude(volts)
    assert mag.magnitude_only
    assert np.allclose(mag.values.real, np.abs(volts.values), atol=1e-15)
    assert np.all(mag.values.imag == 0)


# -- meter noise ---------------------------------------------------------


def test_noise_spec_validation():
    with pytest.raises(SynthError):
        NoiseSpec(bound=-0.01)
    with pytest.raises(SynthError):
        NoiseSpec(bound=0.5)
    with pytest.raises(SynthError):
        NoiseSpec(bound=0.01, distribution="laplace")


def _volt_panel(topo, spec, T, seed):
    return integrate_voltages(generate_increments(topo, spec, T=T, seed=seed))


def test_zero_noise_is_identity(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 16, 4)
    out = apply_noise(volts, NoiseSpec(bound=0.0), seed=1)
    assert np.array_equal(out.values, volts.values)
    out2 = apply_noise(volts, None, seed=1)
    assert np.array_equal(out2.values, volts.values)


def test_noise_is_multiplicative_and_bounded(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 200, 4)
    for dist in ("uniform", "gaussian"):
        out = apply_noise(volts, NoiseSpec(bound=0.02, distribution=dist), seed=6)
        sel = np.broadcast_to(volts.masks[None, :, :], volts.values.shape)
        ratio = np.abs(out.values[sel]) / np.abs(volts.values[sel])
        assert np.all(ratio >= 1.0 - 0.02 - 1e-12)
        assert np.all(ratio <= 1.0 + 0.02 + 1e-12)
        # angles untouched
        assert np.allclose(np.angle(out.values[sel]), np.angle(volts.values[sel]),
                           atol=1e-15)
        assert np.all(out.values[~sel] == 0)


def test_noise_distributions_pass_ks(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 100_000, 4)
    sel = np.broadcast_to(volts.masks[None, :, :], volts.values.shape)
    bound = 0.01
    uni = apply_noise(volts, NoiseSpec(bound=bound, distribution="uniform"), seed=8)
    eps = (np.abs(uni.values[sel]) / np.abs(volts.values[sel]) - 1.0)
    stat = scipy.stats.kstest(eps, scipy.stats.uniform(-bound, 2 * bound).cdf)
    assert stat.pvalue > 0.01
    gau = apply_noise(volts, NoiseSpec(bound=bound, distribution="gaussian"), seed=8)
    eps = (np.abs(gau.values[sel]) / np.abs(volts.values[sel]) - 1.0)
    sigma = bound / 3.0
    trunc = scipy.stats.truncnorm(-3.0, 3.0, loc=0.0, scale=sigma)
    stat = scipy.stats.kstest(eps, trunc.cdf)
    assert stat.pvalue > 0.01


def test_noise_deterministic_in_seed(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 32, 4)
    spec = NoiseSpec(bound=0.005)
    a = apply_noise(volts, spec, seed=3)
    b = apply_noise(volts, spec, seed=3)
    c = apply_noise(volts, spec, seed=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


# -- label corruption ----------------------------------------------------


def _multi_phase_ids(panel):
    return [b for b in range(1, panel.n_buses) if panel.masks[b].sum() >= 2]


def test_corrupt_labels_exact_count(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 8, 4)
    M = bus8.n_buses - 1
    frac = 0.25
    out = corrupt_labels(volts, frac, seed=0)
    changed = [b for b in range(volts.n_buses)
               if not np.array_equal(out.labels[b], volts.labels[b])]
    assert len(changed) == math.ceil(frac * M)
    assert 0 not in changed
    for b in changed:
        assert sorted(out.true_phases(b)) == sorted(volts.true_phases(b))
        assert out.true_phases(b) != volts.true_phases(b)


def test_corrupt_labels_moves_the_data_with_the_truth(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 64, 4)
    out = corrupt_labels(volts, 0.3, seed=1)
    for b in range(volts.n_buses):
        slots = volts.slots(b)
        for s, true in zip(slots, out.true_phases(b)):
            col = out.values[:, b, s]
            ref = volts.values[:, b, slots[list(volts.true_phases(b)).index(true)]]
            assert np.array_equal(col, ref)


def test_corrupt_labels_protect_and_zero(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 8, 4)
    out = corrupt_labels(volts, 0.0, seed=0)
    assert np.array_equal(out.labels, volts.labels)
    eligible = _multi_phase_ids(volts)
    for seed in range(12):
        out = corrupt_labels(volts, 1.0, seed=seed, protect=(eligible[0],))
        assert np.array_equal(out.labels[eligible[0]], volts.labels[eligible[0]])


def test_corrupt_labels_skips_single_phase(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 8, 4)
    out = corrupt_labels(volts, 1.0, seed=2)
    for b in range(1, volts.n_buses):
        if volts.masks[b].sum() == 1:
            assert np.array_equal(out.labels[b], volts.labels[b])


# -- CSV interchange -----------------------------------------------------


def test_panel_csv_round_trip(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 12, 4)
    buf = io.StringIO()
    panel_to_csv(volts, buf)
    buf.seek(0)
    back = panel_from_csv(buf)
    assert back.n_samples == volts.n_samples
    assert np.array_equal(back.masks, volts.masks)
    assert np.allclose(back.values, volts.values, atol=1e-12)
    assert not back.magnitude_only


def test_magnitude_panel_round_trip(bus8, bus8_spec):
    mag = to_magnitude(_volt_panel(bus8, bus8_spec, 6, 4))
    buf = io.StringIO()
    panel_to_csv(mag, buf)
    buf.seek(0)
    back = panel_from_csv(buf)
    assert back.magnitude_only
    assert np.allclose(back.values.real, mag.values.real, atol=1e-12)


def test_label_sidecar_round_trip(bus8, bus8_spec):
    volts = corrupt_labels(_volt_panel(bus8, bus8_spec, 6, 4), 0.3, seed=5)
    buf = io.StringIO()
    labels_to_csv(volts, buf)
    buf.seek(0)
    mapping = labels_from_csv(buf)
    fresh = _volt_panel(bus8, bus8_spec, 6, 4)
    restored = attach_labels(fresh, mapping)
    assert np.array_equal(restored.labels, volts.labels)


def test_panel_csv_rejects_bad_header():
    with pytest.raises(MeasurementFormatError):
        panel_from_csv(io.StringIO("t,bus,phase,mag,ang\n"))


def test_panel_csv_rejects_mixed_angles(bus8, bus8_spec):
    volts = _volt_panel(bus8, bus8_spec, 4, 4)
    buf = io.StringIO()
    panel_to_csv(volts, buf)
    lines = buf.getvalue().splitlines()
    parts = lines[1].split(",")
    parts[-1] = ""
    lines[1] = ",".join(parts)
    with pytest.raises(MeasurementFormatError):
        panel_from_csv(io.StringIO("\n".join(lines) + "\n"))


def test_label_sidecar_rejects_bad_phase():
    with pytest.raises(MeasurementFormatError):
        labels_from_csv(io.StringIO("bus_id,true_phase_order\n1,axb\n"))

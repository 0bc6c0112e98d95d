import math

import numpy as np
import pytest

from gridtopo.grid_model import Branch, Bus, GridTopology, LineModel, PhaseMask
from gridtopo.phase_id import (
    MIN_SAMPLES,
    PhaseIdError,
    assign_phases,
    assignment_accuracy,
    channel_correlation,
    check_resistive_premise,
    diagnose_labels,
    edge_correlation_margins,
)
from gridtopo.synth_lab import (
    corrupt_labels,
    generate_increments,
    integrate_voltages,
    to_magnitude,
)
from gridtopo.topo_est import EdgeSetEstimate, attach_root


def _true_tree(topo):
    return attach_root(
        EdgeSetEstimate(bus_ids=tuple(sorted(topo.non_slack_ids)),
                        edges=tuple(topo.edge_set(include_root=False))),
        declared_root=min(topo.children_of(0)),
    )


def _volts(topo, spec, T, seed):
    return integrate_voltages(generate_increments(topo, spec, T=T, seed=seed))


# -- channel correlation -------------------------------------------------


def test_identical_series_correlate_perfectly(rng):
    x = rng.standard_normal((500, 3))
    corr = channel_correlation(x, x)
    assert np.allclose(np.diag(corr), 1.0, atol=1e-12)


def test_zero_variance_channel_gives_nan(rng):
    x = rng.standard_normal((200, 2))
    y = x.copy()
    y[:, 1] = 5.0
    corr = channel_correlation(x, y)
    assert np.all(np.isnan(corr[:, 1]))
    assert np.all(np.isfinite(corr[:, 0]))


def test_correlation_shape_and_errors(rng):
    a = rng.standard_normal((100, 3))
    b = rng.standard_normal((100, 2))
    assert channel_correlation(a, b).shape == (3, 2)
    with pytest.raises(PhaseIdError):
        channel_correlation(a, rng.standard_normal((90, 2)))
    with pytest.raises(PhaseIdError):
        channel_correlation(a[: MIN_SAMPLES - 1], b[: MIN_SAMPLES - 1])


# -- label propagation ---------------------------------------------------


def test_clean_panel_resolves_identity(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    tree = _true_tree(bus8)
    out = assign_phases(tree, volts)
    assert assignment_accuracy(out, volts) == 1.0
    assert diagnose_labels(out, volts) == []
    assert out.statuses[0] == "assumed"
    for b in bus8.non_slack_ids:
        if b == 1:
            continue
        assert out.statuses[b] == "resolved"
        assert out.channels[b] == volts.true_phases(b)
    assert out.warnings == []


def test_raw_magnitude_mode_also_resolves(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    out = assign_phases(_true_tree(bus8), volts, use_increments=False)
    assert assignment_accuracy(out, volts) == 1.0


def test_magnitude_only_panel_resolves(bus8, bus8_spec):
    volts = to_magnitude(_volts(bus8, bus8_spec, 1500, 0))
    out = assign_phases(_true_tree(bus8), volts)
    assert assignment_accuracy(out, volts) == 1.0


def test_corrupted_labels_are_found_and_fixed(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    head = min(bus8.children_of(0))
    corrupted = corrupt_labels(volts, 0.3, seed=3, protect=(head,))
    changed = [b for b in range(volts.n_buses)
               if not np.array_equal(corrupted.labels[b], volts.labels[b])]
    assert changed
    out = assign_phases(_true_tree(bus8), corrupted)
    assert assignment_accuracy(out, corrupted) == 1.0
    assert diagnose_labels(out, corrupted) == sorted(changed)


def test_dead_parent_marks_subtree_unknown(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    volts.values[:, 3, :] = volts.values[0, 3, :]
    out = assign_phases(_true_tree(bus8), volts)
    assert out.statuses[3] == "unknown"
    for child in bus8.children_of(3):
        assert out.statuses[child] == "unknown"
    assert out.statuses[2] == "resolved"
    assert len(out.warnings) >= 3
    # unknown buses keep claimed labels and stay out of the diagnosis
    assert out.channels[3] == tuple(volts.slots(3))
    assert 3 not in diagnose_labels(out, volts)


def test_unrooted_tree_rejected(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 200, 0)
    tree = EdgeSetEstimate(bus_ids=tuple(sorted(bus8.non_slack_ids)),
                           edges=tuple(bus8.edge_set(include_root=False)))
    with pytest.raises(PhaseIdError):
        assign_phases(tree, volts)


def test_increment_panel_rejected(bus8, bus8_spec):
    inc = generate_increments(bus8, bus8_spec, T=200, seed=0)
    with pytest.raises(PhaseIdError):
        assign_phases(_true_tree(bus8), inc)


def test_assignment_csv(tmp_path, bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    out = assign_phases(_true_tree(bus8), volts)
    path = tmp_path / "phases.csv"
    out.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bus_id,channel,assigned_phase,margin"
    n_channels = sum(len(volts.slots(b)) for b in range(volts.n_buses))
    assert len(lines) - 1 == n_channels


# -- diagnostics ---------------------------------------------------------


def test_edge_margins_positive_on_clean_data(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    margins = edge_correlation_margins(_true_tree(bus8), volts)
    assert set(margins) == {(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)}
    assert min(margins.values()) > 0.0


def test_resistive_premise_quiet_on_catalogue(bus8):
    assert check_resistive_premise(bus8) is None


def test_resistive_premise_warns_on_reactive_line():
    mask = PhaseMask.from_string("abc")
    line = LineModel(r_per_mile=0.05)
    topo = GridTopology(
        buses=[Bus(id=0, mask=mask, is_slack=True), Bus(id=1, mask=mask)],
        branches=[Branch(parent=0, child=1, mask=mask, line=line, length_miles=1.0)],
        z_base_ohm=10.0,
    )
    msg = check_resistive_premise(topo)
    assert msg is not None and "X/R" in msg


def test_accuracy_counts_mismatches(bus8, bus8_spec):
    volts = _volts(bus8, bus8_spec, 1500, 0)
    out = assign_phases(_true_tree(bus8), volts)
    victim = next(b for b in sorted(bus8.non_slack_ids) if len(volts.slots(b)) >= 2)
    twisted = list(out.channels[victim])
    out.channels[victim] = tuple(twisted[1:] + twisted[:1])
    acc = assignment_accuracy(out, volts)
    assert acc == pytest.approx(1.0 - 1.0 / (volts.n_buses - 1), abs=1e-12)

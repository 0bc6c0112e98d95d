"""Per-bus phase label identification along a recovered tree.

On feeders where series resistance dominates reactance, same-phase
voltage magnitudes at the two ends of a branch are more correlated than
cross-phase pairs, so labels can be propagated from the trusted
substation outward: each bus's channels are matched to its parent's
already-resolved phases by the injective assignment with maximum total
correlation.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .grid_model import PHASES


class PhaseIdError(Exception):
    pass


MIN_SAMPLES = 30

# two-sided normal quantile at significance 1e-3; a sample Pearson
# correlation below _SIG_Z / sqrt(N) is consistent with independence
# and must not decide a phase map
_SIG_Z = 3.2905


def channel_correlation(parent_mags, child_mags):
    """Pearson correlation matrix between channel series.

    Inputs are (N, P) and (N, C) arrays of aligned magnitude series;
    output is (P, C). Zero-variance channels give NaN entries, which the
    matcher treats as uninformative rather than as evidence.
    """
    a = np.asarray(parent_mags, dtype=float)
    b = np.asarray(child_mags, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise PhaseIdError("series must share the sample axis")
    if a.shape[0] < MIN_SAMPLES:
        raise PhaseIdError(f"need at least {MIN_SAMPLES} samples, got {a.shape[0]}")
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    sa = np.sqrt(np.sum(a * a, axis=0))
    sb = np.sqrt(np.sum(b * b, axis=0))
    out = a.T @ b
    scale = np.outer(sa, sb)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0.0, out / np.where(scale > 0.0, scale, 1.0), np.nan)
    return out


@dataclass
class PhaseAssignment:
    """Recovered channel-to-phase maps with per-bus confidence.

    channels maps bus id to a tuple of phase indices (0=a, 1=b, 2=c),
    one per measured channel in slot order. statuses: 'resolved' when
    correlations decided the map, 'assumed' when the trusted substation
    labels were taken as-is, 'unknown' when no informative correlation
    existed and the claimed labels were kept as a best effort. margins
    are best-minus-second-best assignment scores (infinite when only
    one candidate existed).
    """

    channels: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    statuses: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def phase_letters(self, bus_id):
        return tuple(PHASES[j] for j in self.channels[bus_id])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bus_id", "channel", "assigned_phase", "margin"])
            for bus in sorted(self.channels):
                margin = self.margins.get(bus, math.inf)
                mtxt = "inf" if math.isinf(margin) else repr(float(margin))
                for ch, ph in enumerate(self.channels[bus]):
                    w.writerow([bus, ch, PHASES[ph], mtxt])


def _magnitude_increments(panel, bus_id, use_increments=True):
    x = panel.channels(bus_id)
    mags = x.real if panel.magnitude_only else np.abs(x)
    if panel.kind == "increment":
        # already differenced upstream; magnitudes of increments are not
        # the same signal, so insist on a voltage panel unless told not to
        raise PhaseIdError("phase identification expects a voltage panel")
    if use_increments:
        return np.diff(mags, axis=0)
    return mags


def assign_phases(tree, panel, use_increments=True):
    """Propagate phase labels from the substation down the tree.

    tree is a rooted EdgeSetEstimate; panel is the voltage panel the
    tree was estimated from. Matching uses increments of magnitudes by
    default; use_increments=False correlates raw magnitude series
    instead. Substation labels are trusted. Each child's channels are
    assigned injectively into the parent's resolved phases by maximum
    total correlation, exhaustively over at most six candidate maps.
    Correlations indistinguishable from zero at the 1e-3 level are
    treated as uninformative, so a pure-noise parent series falls back
    to the claimed labels instead of resolving by coin flip.
    """
    if not tree.rooted:
        raise PhaseIdError("assign_phases needs a rooted estimate")
    out = PhaseAssignment()
    mseries = {}

    def series(bus):
        if bus not in mseries:
            mseries[bus] = _magnitude_increments(panel, bus, use_increments)
        return mseries[bus]

    # substation: claimed labels trusted
    root_slots = panel.slots(0)
    out.channels[0] = tuple(root_slots)
    out.margins[0] = math.inf
    out.statuses[0] = "assumed"

    for parent, child in tree.oriented():
        child_slots = panel.slots(child)
        claimed = tuple(child_slots)
        parent_phases = out.channels.get(parent)
        if parent_phases is None:
            parent_phases = ()
        corr = None
        if len(parent_phases) > 0:
            corr = channel_correlation(series(parent), series(child))
            # keep only statistically significant entries, in either
            # direction; meter noise on an otherwise constant series
            # produces finite but meaningless correlations
            floor = _SIG_Z / math.sqrt(series(parent).shape[0])
            with np.errstate(invalid="ignore"):
                corr = np.where(np.abs(corr) >= floor, corr, np.nan)
        n_child = len(claimed)
        candidates = []
        if corr is not None and len(parent_phases) >= n_child:
            for combo in itertools.permutations(range(len(parent_phases)), n_child):
                score = 0.0
                used = 0
                for ch, pch in enumerate(combo):
                    v = corr[pch, ch]
                    if np.isfinite(v):
                        score += float(v)
                        used += 1
                if used > 0:
                    candidates.append((score, tuple(parent_phases[p] for p in combo)))
        if not candidates:
            out.channels[child] = claimed
            out.margins[child] = math.inf
            if parent == 0:
                # constant substation series: fall back to the trusted
                # labels at the feeder head rather than guessing
                out.statuses[child] = "assumed"
            else:
                out.statuses[child] = "unknown"
                out.warnings.append(
                    f"bus {child}: no informative correlation with parent {parent}; "
                    "claimed labels kept"
                )
            continue
        candidates.sort(key=lambda sc: (-sc[0], sc[1]))
        best_score, best_map = candidates[0]
        margin = math.inf
        if len(candidates) > 1:
            margin = best_score - candidates[1][0]
        out.channels[child] = best_map
        out.margins[child] = margin
        out.statuses[child] = "resolved"
    return out


def diagnose_labels(assignment, panel):
    """Buses whose recovered labels differ from their claimed slots.

    Buses with status 'unknown' carry no evidence and are excluded.
    """
    bad = []
    for bus, phases in assignment.channels.items():
        if bus == 0 or assignment.statuses.get(bus) == "unknown":
            continue
        claimed = tuple(panel.slots(bus))
        if tuple(phases) != claimed:
            bad.append(bus)
    return sorted(bad)


def assignment_accuracy(assignment, panel):
    """Fraction of non-slack buses whose recovered map matches ground truth.

    Panels generated by the synthetic laboratory carry per-channel true
    phases; buses left at best-effort labels count like any other.
    """
    total = 0
    good = 0
    for bus in range(1, panel.n_buses):
        truth = panel.true_phases(bus)
        got = tuple(assignment.channels.get(bus, ()))
        total += 1
        if got == truth:
            good += 1
    if total == 0:
        raise PhaseIdError("no non-slack buses to score")
    return good / total


def edge_correlation_margins(tree, panel, use_increments=True):
    """Per-edge gap between same-phase and best cross-phase correlation.

    For every tree edge, compares the correlation of true same-phase
    channel pairs against the largest cross-phase correlation between
    the two buses. Positive margins are what makes label propagation
    work; the minimum over edges is the robustness figure.
    """
    margins = {}
    for parent, child in tree.oriented():
        if parent == 0:
            continue
        pm = _magnitude_increments(panel, parent, use_increments)
        cm = _magnitude_increments(panel, child, use_increments)
        corr = channel_correlation(pm, cm)
        p_phase = panel.true_phases(parent)
        c_phase = panel.true_phases(child)
        same = []
        cross = []
        for i, pp in enumerate(p_phase):
            for j, cc in enumerate(c_phase):
                v = corr[i, j]
                if not np.isfinite(v):
                    continue
                (same if pp == cc else cross).append(float(v))
        if not same:
            continue
        worst_same = min(same)
        best_cross = max(cross) if cross else -1.0
        margins[(parent, child)] = worst_same - best_cross
    return margins


def check_resistive_premise(topology, threshold=1.0):
    """Warning string when reactance dominates resistance, else None.

    Label propagation rests on resistive-dominant lines; a mean X/R
    above the threshold undermines the same-phase correlation ordering.
    """
    ratio = topology.mean_xr_ratio()
    if ratio > threshold:
        return (
            f"mean X/R ratio {ratio:.2f} exceeds {threshold:.2f}; phase "
            "identification assumes resistance-dominant lines and may be unreliable"
        )
    return None

"""Scenario evaluation: error rates, Monte Carlo replicates, sweeps.

A scenario fixes a feeder, an injection model and the measurement
conditions (data length, noise, label corruption, DER scaling,
sampling stride). Replicates re-draw the time series under derived
seeds and push each panel through the full recovery pipeline; reports
aggregate edge error rates and phase identification accuracy and are
byte-reproducible from (config, base seed).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .feeders import make_feeder
from .info_core import PanelStatistics, difference, substation_mi
from .phase_id import assign_phases, assignment_accuracy
from .synth_lab import (FeederSampler, InjectionSpec, NoiseSpec, apply_noise,
                        corrupt_labels, integrate_voltages)
from .topo_est import attach_root, max_weight_spanning_tree, weak_mesh_search


class EvalError(Exception):
    pass


# deterministic offsets separating the per-replicate random streams
_NOISE_SEED_OFFSET = 1_000_000_007
_LABEL_SEED_OFFSET = 2_000_000_011
_DER_SEED_OFFSET = 4242

SWEEP_AXES = {
    "data_length": "n_samples",
    "noise": "noise_bound",
    "label_fraction": "label_fraction",
    "der_scale": "der_scale",
    "resolution": "resolution_stride",
}


def _norm_edges(edges):
    out = set()
    for e in edges:
        a, b = e
        out.add((min(a, b), max(a, b)))
    return out


def edge_errors(true_edges, estimated_edges):
    """(false, missing) counts between unordered edge sets."""
    t = _norm_edges(true_edges)
    e = _norm_edges(estimated_edges)
    return len(e - t), len(t - e)


def error_rate(true_edges, estimated_edges):
    """Percent of false plus missing edges relative to the true count.

    May exceed 100 when the estimate is both wrong and oversized.
    """
    t = _norm_edges(true_edges)
    if not t:
        raise EvalError("true edge set is empty")
    false, missing = edge_errors(t, estimated_edges)
    return 100.0 * (false + missing) / len(t)


@dataclass
class ScenarioConfig:
    """Everything that defines one evaluation scenario.

    n_samples counts voltage snapshots; the pipeline works on the T-1
    increments. declared_root None means the true feeder head is used
    to attach the substation (the generator holds it at a constant
    voltage, so there is no substation signal to use instead unless
    slack_sigma is set).
    """

    feeder: str = "bus33"
    n_samples: int = 8760
    frame: str = "phase"
    source: str = "complex"
    noise_bound: float = 0.0
    noise_distribution: str = "uniform"
    label_fraction: float = 0.0
    mesh: bool = False
    max_chords: int = 1
    gain_tol: float = 0.01
    der_scale: float = 1.0
    der_fraction: float = 0.2
    resolution_stride: int = 1
    base_sigma: float = 0.004
    injection_seed: int = 0
    reactive_ratio: float = None
    slack_sigma: float = 0.0
    declared_root: int = None
    phases: bool = True
    use_increment_correlation: bool = True
    ridge: float = 0.0
    protect_feeder_head: bool = True
    z_base_ohm: float = 10.0

    def to_dict(self):
        return dataclasses.asdict(self)

    def replaced(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass
class ScenarioContext:
    """Cached per-scenario state shared across replicates."""

    config: ScenarioConfig
    topology: object
    spec: InjectionSpec
    sampler: FeederSampler
    true_edges: frozenset
    feeder_head: int


def build_context(config, topology=None):
    topo = topology if topology is not None else make_feeder(
        config.feeder, z_base_ohm=config.z_base_ohm)
    spec = InjectionSpec.random(
        topo, seed=config.injection_seed, base_sigma=config.base_sigma,
        reactive_ratio=config.reactive_ratio,
    )
    if config.der_scale != 1.0:
        m = topo.n_buses - 1
        k = max(1, round(config.der_fraction * m))
        rng = np.random.default_rng(config.injection_seed + _DER_SEED_OFFSET)
        chosen = sorted(rng.choice(np.arange(1, topo.n_buses), size=k, replace=False).tolist())
        spec = spec.scaled(chosen, config.der_scale)
    sampler = FeederSampler(topo, spec)
    true_edges = frozenset(topo.edge_set(include_root=False, include_chords=True))
    heads = topo.children_of(0)
    return ScenarioContext(
        config=config, topology=topo, spec=spec, sampler=sampler,
        true_edges=true_edges, feeder_head=min(heads),
    )


def run_replicate(ctx, seed, replicate=None):
    """One draw-and-recover pass; returns a flat result dict."""
    cfg = ctx.config
    inc = ctx.sampler.increments(cfg.n_samples - 1, seed=seed,
                                 slack_sigma=cfg.slack_sigma)
    volts = integrate_voltages(inc)
    if cfg.resolution_stride > 1:
        volts = volts.copy()
        volts.values = volts.values[::cfg.resolution_stride]
    if cfg.noise_bound > 0.0:
        noise = NoiseSpec(bound=cfg.noise_bound, distribution=cfg.noise_distribution)
        volts = apply_noise(volts, noise, seed=seed + _NOISE_SEED_OFFSET)
    if cfg.label_fraction > 0.0:
        protect = (ctx.feeder_head,) if cfg.protect_feeder_head else ()
        volts = corrupt_labels(volts, cfg.label_fraction,
                               seed=seed + _LABEL_SEED_OFFSET, protect=protect)
    estimate, stats = estimate_topology(volts, frame=cfg.frame, source=cfg.source,
                                        mesh=cfg.mesh, max_chords=cfg.max_chords,
                                        gain_tol=cfg.gain_tol, ridge=cfg.ridge,
                                        declared_root=(cfg.declared_root
                                                       if cfg.declared_root is not None
                                                       else ctx.feeder_head))
    false, missing = edge_errors(ctx.true_edges,
                                 estimate.edge_set(include_root=False, include_chords=True))
    er = 100.0 * (false + missing) / len(ctx.true_edges)
    out = {
        "replicate": seed if replicate is None else replicate,
        "seed": seed,
        "error_rate": er,
        "false_edges": false,
        "missing_edges": missing,
        "n_samples_used": int(volts.n_samples),
        "phase_accuracy": None,
    }
    if cfg.phases and estimate.rooted:
        assignment = assign_phases(estimate, volts,
                                   use_increments=cfg.use_increment_correlation)
        out["phase_accuracy"] = assignment_accuracy(assignment, volts)
    return out


def estimate_topology(volt_panel, frame="phase", source="complex", mesh=False,
                      max_chords=1, gain_tol=0.01, ridge=0.0, declared_root=None):
    """Full recovery pipeline from a voltage panel.

    Returns (EdgeSetEstimate, PanelStatistics). The magnitude source
    works on the moduli of the complex increments; a panel that only
    ever stored magnitudes falls back to increments of those readings.
    """
    inc = difference(volt_panel)
    stats = PanelStatistics(inc, frame=frame, source=source, ridge=ridge)
    mi = stats.mi_matrix()
    if mesh:
        provider = lambda m, pair: stats.group_mi([m], list(pair))
        estimate = weak_mesh_search(mi, provider, max_chords=max_chords,
                                    gain_tol=gain_tol)
    else:
        estimate = max_weight_spanning_tree(mi)
    sub = substation_mi(inc, frame=frame, source=source)
    estimate = attach_root(estimate, substation_mi=sub, declared_root=declared_root)
    return estimate, stats


@dataclass
class EvalReport:
    """Aggregated Monte Carlo results for one scenario (or sweep point)."""

    scenario: dict
    replicates: int
    base_seed: int
    axis: str = None
    value: object = None
    seeds: list = field(default_factory=list)
    per_replicate: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    error_rate_mean: float = math.nan
    error_rate_std: float = math.nan
    false_edges_mean: float = math.nan
    missing_edges_mean: float = math.nan
    phase_accuracy_mean: float = None
    phase_accuracy_std: float = None
    wall_time_s: float = 0.0

    def error_rates(self):
        return [r["error_rate"] for r in self.per_replicate]

    def phase_accuracies(self):
        return [r["phase_accuracy"] for r in self.per_replicate
                if r["phase_accuracy"] is not None]

    def canonical_dict(self):
        """Report content without the wall-time field, for reproducibility."""
        d = dataclasses.asdict(self)
        d.pop("wall_time_s")
        return d

    def canonical_json(self):
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))

    def to_json(self, path=None):
        text = json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def summary(self):
        pa = ("n/a" if self.phase_accuracy_mean is None
              else f"{self.phase_accuracy_mean:.4f}")
        tag = f"{self.axis}={self.value} " if self.axis else ""
        return (f"{tag}ER mean {self.error_rate_mean:.3f}% std {self.error_rate_std:.3f} "
                f"phase_acc {pa} ({self.replicates} replicates, "
                f"{len(self.failures)} failures)")


def _aggregate(results, failures, config, replicates, base_seed, axis, value, wall):
    results = sorted(results, key=lambda r: r["replicate"])
    ers = np.asarray([r["error_rate"] for r in results], dtype=float)
    accs = [r["phase_accuracy"] for r in results if r["phase_accuracy"] is not None]
    report = EvalReport(
        scenario=config.to_dict(), replicates=replicates, base_seed=base_seed,
        axis=axis, value=value, seeds=[r["seed"] for r in results],
        per_replicate=results, failures=sorted(failures), wall_time_s=wall,
    )
    if ers.size:
        report.error_rate_mean = float(ers.mean())
        report.error_rate_std = float(ers.std(ddof=1)) if ers.size > 1 else 0.0
        report.false_edges_mean = float(np.mean([r["false_edges"] for r in results]))
        report.missing_edges_mean = float(np.mean([r["missing_edges"] for r in results]))
    if accs:
        arr = np.asarray(accs, dtype=float)
        report.phase_accuracy_mean = float(arr.mean())
        report.phase_accuracy_std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return report


def monte_carlo(config, replicates, base_seed=0, threads=1, context=None,
                axis=None, value=None):
    """Run independent replicates of a scenario and aggregate.

    Replicate r uses seed base_seed ^ r so a single base seed pins the
    entire experiment. Per-replicate exceptions are recorded as
    failures rather than aborting the run.
    """
    if replicates < 1:
        raise EvalError("need at least one replicate")
    t0 = time.perf_counter()
    ctx = context if context is not None else build_context(config)
    jobs = [(r, base_seed ^ r) for r in range(replicates)]
    results = []
    failures = []

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {pool.submit(run_replicate, ctx, s, r): r for r, s in jobs}
            for fut in concurrent.futures.as_completed(futs):
                r = futs[fut]
                try:
                    results.append(fut.result())
                except Exception as exc:
                    failures.append((r, f"{type(exc).__name__}: {exc}"))
    else:
        for r, s in jobs:
            try:
                results.append(run_replicate(ctx, s, r))
            except Exception as exc:
                failures.append((r, f"{type(exc).__name__}: {exc}"))
    wall = time.perf_counter() - t0
    return _aggregate(results, failures, ctx.config, replicates, base_seed,
                      axis, value, wall)


def sweep(config, axis, values, replicates, base_seed=0, threads=1):
    """One monte_carlo per axis value, with common random numbers.

    All points share the same replicate seeds, so monotone trends are
    not masked by draw-to-draw variance. The generator context is
    shared across points unless the axis changes the injection model.
    """
    if axis not in SWEEP_AXES:
        raise EvalError(f"axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    fieldname = SWEEP_AXES[axis]
    shared = None
    if axis != "der_scale":
        shared = build_context(config)
    reports = []
    for v in values:
        cfg = config.replaced(**{fieldname: type(getattr(config, fieldname))(v)})
        ctx = shared
        if ctx is None:
            ctx = build_context(cfg)
        else:
            ctx = ScenarioContext(config=cfg, topology=ctx.topology, spec=ctx.spec,
                                  sampler=ctx.sampler, true_edges=ctx.true_edges,
                                  feeder_head=ctx.feeder_head)
        reports.append(monte_carlo(cfg, replicates, base_seed=base_seed,
                                   threads=threads, context=ctx, axis=axis, value=v))
    return reports


def write_sweep_csv(reports, path):
    """Flat per-point summary CSV for plotting."""
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["axis", "value", "replicates", "error_rate_mean",
                    "error_rate_std", "false_edges_mean", "missing_edges_mean",
                    "phase_accuracy_mean", "phase_accuracy_std", "failures"])
        for r in reports:
            w.writerow([
                r.axis, r.value, r.replicates,
                repr(r.error_rate_mean), repr(r.error_rate_std),
                repr(r.false_edges_mean), repr(r.missing_edges_mean),
                "" if r.phase_accuracy_mean is None else repr(r.phase_accuracy_mean),
                "" if r.phase_accuracy_std is None else repr(r.phase_accuracy_std),
                len(r.failures),
            ])

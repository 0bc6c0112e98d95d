"""Synthetic measurement laboratory.

Draws independent complex-Gaussian current-injection increments at
every non-slack bus, pushes them through the feeder admittance to get
voltage increments, and packages the result as measurement panels with
ground truth attached. Also provides the analytic voltage covariance
(the oracle the sampled statistics must converge to), meter noise,
label corruption, and the measurement CSV interchange format.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid_model import PHASES, GridModelError, assemble_admittance

# Nominal per-phase voltage angles, positive sequence.
NOMINAL_ANGLES = (0.0, -2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0)


class SynthError(Exception):
    """Raised for invalid generation requests."""


# ---------------------------------------------------------------------
# Injection statistics
# ---------------------------------------------------------------------


@dataclass
class InjectionSpec:
    """Per-bus covariance of the complex current-injection increments.

    covariances has shape (n_buses, 3, 3); rows and columns of absent
    phases and the whole slack block are zero. Entries are Hermitian
    positive definite on the present phases. seed feeds the default
    sampling stream. reactive_ratio, when set, replaces circularly
    symmetric draws with an independent reactive stream whose amplitude
    is that fraction of the active stream's, both aligned with the
    nominal voltage direction; the complex covariance is unchanged,
    only the pseudo-covariance is not.
    """

    covariances: np.ndarray
    seed: int = 0
    reactive_ratio: float | None = None

    def __post_init__(self):
        self.covariances = np.asarray(self.covariances, dtype=complex)
        if self.covariances.ndim != 3 or self.covariances.shape[1:] != (3, 3):
            raise SynthError("covariances must have shape (n_buses, 3, 3)")
        if self.reactive_ratio is not None and not 0.05 <= self.reactive_ratio <= 1.0:
            raise SynthError("reactive_ratio must lie in [0.05, 1.0]")
        herm = np.abs(self.covariances - np.conj(np.transpose(self.covariances, (0, 2, 1))))
        if herm.max() > 1e-12:
            raise SynthError("per-bus covariance blocks must be Hermitian")

    @property
    def n_buses(self):
        return self.covariances.shape[0]

    def present_slots(self, bus_id):
        d = np.real(np.diagonal(self.covariances[bus_id]))
        return tuple(int(i) for i in np.flatnonzero(d > 0.0))

    @classmethod
    def random(cls, topology, seed, base_sigma=0.004, bus_spread=0.6,
               unbalance=0.3, phase_corr=0.2, reactive_ratio=None):
        """Heterogeneous injection statistics for a feeder.

        Per-bus scale is lognormal with sigma bus_spread, per-phase
        scale varies uniformly by +-unbalance, and present phases share
        a common correlation phase_corr. Cross-phase covariance carries
        the nominal 120 degree rotations.
        """
        rng = np.random.default_rng(seed)
        n = topology.n_buses
        cov = np.zeros((n, 3, 3), dtype=complex)
        u = np.exp(1j * np.asarray(NOMINAL_ANGLES))
        for b in topology.buses:
            if b.is_slack:
                continue
            idx = np.asarray(b.mask.indices)
            scale = base_sigma * float(np.exp(rng.normal(0.0, bus_spread)))
            scale = min(max(scale, 0.25 * base_sigma), 4.0 * base_sigma)
            sig = scale * rng.uniform(1.0 - unbalance, 1.0 + unbalance, size=len(idx))
            p = len(idx)
            R = (1.0 - phase_corr) * np.eye(p) + phase_corr * np.ones((p, p))
            block = np.outer(sig, sig) * R
            rot = np.outer(u[idx], np.conj(u[idx]))
            cov[b.id][np.ix_(idx, idx)] = block * rot
        return cls(covariances=cov, seed=int(seed), reactive_ratio=reactive_ratio)

    @classmethod
    def from_covariances(cls, covariances, seed=0, reactive_ratio=None):
        return cls(covariances=np.array(covariances, dtype=complex), seed=seed,
                   reactive_ratio=reactive_ratio)

    def scaled(self, bus_ids, factor):
        """New spec with the given buses' covariance multiplied by factor."""
        cov = self.covariances.copy()
        for b in bus_ids:
            cov[b] = cov[b] * factor
        return replace(self, covariances=cov)

    def _real_factor(self, bus_id):
        """Factor F with F F^T the real-composite covariance of one bus.

        Real composite stacks (Re, Im) of the present phases. Circular
        draws use the standard composite of the complex covariance;
        directional draws build active and reactive parts along the
        nominal angle with the requested amplitude ratio.
        """
        idx = self.present_slots(bus_id)
        if not idx:
            return None
        sub = self.covariances[bus_id][np.ix_(idx, idx)]
        p = len(idx)
        if self.reactive_ratio is None:
            creal = 0.5 * np.block([
                [sub.real, -sub.imag],
                [sub.imag, sub.real],
            ])
            return _chol_psd(creal)
        kappa = float(self.reactive_ratio)
        theta = np.asarray(NOMINAL_ANGLES)[list(idx)]
        rot = np.exp(-1j * theta)
        # Strip the nominal rotation to get the real magnitude covariance.
        mag_cov = np.real(sub * np.outer(rot, np.conj(rot)))
        L = _chol_psd(mag_cov)
        c = 1.0 / math.sqrt(1.0 + kappa * kappa)
        Ta = c * np.vstack([np.diag(np.cos(theta)), np.diag(np.sin(theta))])
        Tb = c * kappa * np.vstack([-np.diag(np.sin(theta)), np.diag(np.cos(theta))])
        return np.hstack([Ta @ L, Tb @ L])

    def sample(self, topology, T, seed=None):
        """(T, n_buses, 3) complex injection increments, zero at the slack."""
        rng = np.random.default_rng(self.seed if seed is None else seed)
        out = np.zeros((T, self.n_buses, 3), dtype=complex)
        for b in topology.buses:
            if b.is_slack:
                continue
            F = self._real_factor(b.id)
            if F is None:
                continue
            idx = self.present_slots(b.id)
            p = len(idx)
            w = rng.standard_normal((F.shape[1], T))
            xy = F @ w
            out[:, b.id, idx] = (xy[:p] + 1j * xy[p:]).T
        return out


def _chol_psd(mat):
    """Cholesky with a graceful eigen fallback for semidefinite blocks."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(mat)
        w = np.clip(w, 0.0, None)
        return V * np.sqrt(w)


# ---------------------------------------------------------------------
# Measurement panels
# ---------------------------------------------------------------------


@dataclass
class VoltagePanel:
    """Time series of per-bus per-phase voltages or voltage increments.

    values: (T, n_buses, 3) complex. Slots outside the claimed mask are
    zero. For magnitude-only panels the values are real magnitudes
    stored in the real part and the angle is undefined (exported empty).
    labels[b, s] gives the true phase index of the data sitting in
    claimed slot s, so corrupted panels keep their ground truth; -1
    marks an empty slot.
    """

    values: np.ndarray
    masks: np.ndarray
    labels: np.ndarray
    kind: str = "voltage"
    magnitude_only: bool = False
    sample_period_s: float = 3600.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.masks = np.asarray(self.masks, dtype=bool)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise SynthError("values must have shape (T, n_buses, 3)")
        if self.masks.shape != self.values.shape[1:] or self.labels.shape != self.masks.shape:
            raise SynthError("masks and labels must have shape (n_buses, 3)")
        if self.kind not in ("voltage", "increment"):
            raise SynthError(f"unknown panel kind {self.kind!r}")

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_buses(self):
        return self.values.shape[1]

    def slots(self, bus_id):
        return tuple(int(s) for s in np.flatnonzero(self.masks[bus_id]))

    def channels(self, bus_id):
        """(T, p) series of the claimed slots, ascending slot order."""
        return self.values[:, bus_id, self.masks[bus_id]]

    def copy(self):
        return VoltagePanel(
            values=self.values.copy(), masks=self.masks.copy(),
            labels=self.labels.copy(), kind=self.kind,
            magnitude_only=self.magnitude_only, sample_period_s=self.sample_period_s,
        )

    def true_phase_of(self, bus_id, slot):
        t = int(self.labels[bus_id, slot])
        return PHASES[t] if t >= 0 else None

    def true_phases(self, bus_id):
        """Phase index per claimed channel, slot order; the ground truth."""
        return tuple(int(t) for t in self.labels[bus_id, self.masks[bus_id]])


def identity_labels(masks):
    labels = np.full(masks.shape, -1, dtype=np.int8)
    labels[masks] = np.broadcast_to(np.arange(3, dtype=np.int8), masks.shape)[masks]
    return labels


def to_magnitude(panel):
    """Drop angle information, keeping |v| per channel."""
    out = panel.copy()
    out.values = np.abs(out.values).astype(complex)
    out.magnitude_only = True
    return out


# ---------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------


@dataclass
class AnalyticCovariance:
    """Exact second-order statistics of the stacked voltage increments.

    real is the (2D, 2D) covariance of [Re dV; Im dV] over the present
    non-slack coordinates listed in coords. The complex covariance
    E[x x^H] and pseudo-covariance E[x x^T] are derived views; the
    pseudo part vanishes for circular injections.
    """

    real: np.ndarray
    coords: list

    @property
    def dim(self):
        return len(self.coords)

    def complex_cov(self):
        D = self.dim
        rr = self.real[:D, :D]
        ii = self.real[D:, D:]
        ir = self.real[D:, :D]
        ri = self.real[:D, D:]
        return (rr + ii) + 1j * (ir - ri)

    def pseudo_cov(self):
        D = self.dim
        rr = self.real[:D, :D]
        ii = self.real[D:, D:]
        ir = self.real[D:, :D]
        ri = self.real[:D, D:]
        return (rr - ii) + 1j * (ir + ri)

    def coord_positions(self, bus_id):
        return [i for i, (b, _) in enumerate(self.coords) if b == bus_id]

    def real_positions(self, bus_id):
        D = self.dim
        pos = self.coord_positions(bus_id)
        return pos + [p + D for p in pos]


class FeederSampler:
    """Shared machinery for sampling one feeder + injection spec.

    Builds the admittance, its inverse, and the overall real-composite
    sampling factor once, so Monte Carlo replicates only pay for the
    random draw and one matrix product.
    """

    def __init__(self, topology, spec):
        if spec.n_buses != topology.n_buses:
            raise SynthError(
                f"injection spec covers {spec.n_buses} buses, feeder has {topology.n_buses}"
            )
        self.topology = topology
        self.spec = spec
        self.system = assemble_admittance(topology)
        D = len(self.system.coords)
        Yinv = np.linalg.inv(self.system.matrix)
        A = np.zeros((2 * D, 2 * D))
        A[:D, :D] = Yinv.real
        A[:D, D:] = -Yinv.imag
        A[D:, :D] = Yinv.imag
        A[D:, D:] = Yinv.real
        # Horizontal stack of per-bus factors scattered onto the
        # stacked (Re, Im) coordinate layout; cross-bus independence
        # makes the overall injection factor block sparse.
        parts = []
        for b in topology.buses:
            if b.is_slack:
                continue
            slots = spec.present_slots(b.id)
            if tuple(slots) != tuple(b.mask.indices):
                raise SynthError(
                    f"injection covariance of bus {b.id} covers slots {slots}, "
                    f"mask has {b.mask.indices}"
                )
            Fb = spec._real_factor(b.id)
            rows = [self.system.index[(b.id, s)] for s in slots]
            rows = np.asarray(rows + [r + D for r in rows])
            Fb_full = np.zeros((2 * D, Fb.shape[1]))
            Fb_full[rows, :] = Fb
            parts.append(Fb_full)
        F = np.hstack(parts)
        self.D = D
        self.sampling_matrix = A @ F
        self._analytic = None

    def analytic(self):
        if self._analytic is None:
            S = self.sampling_matrix
            self._analytic = AnalyticCovariance(real=S @ S.T, coords=list(self.system.coords))
        return self._analytic

    def increments(self, T, seed=None, rng=None, slack_sigma=0.0):
        """Increment panel of T samples; optional slack common-mode term."""
        if T < 1:
            raise SynthError("need at least one increment sample")
        if rng is None:
            rng = np.random.default_rng(self.spec.seed if seed is None else seed)
        D = self.D
        # time-major draw so a shorter run is a prefix of a longer one
        # at the same seed, which sweeps over data length rely on
        W = rng.standard_normal((T, 2 * D))
        X = W @ self.sampling_matrix.T
        topo = self.topology
        B = topo.n_buses
        values = np.zeros((T, B, 3), dtype=complex)
        cplx = X[:, :D] + 1j * X[:, D:]
        for j, (b, s) in enumerate(self.system.coords):
            values[:, b, s] = cplx[:, j]
        masks = topo.masks_array()
        if slack_sigma > 0.0:
            dv0 = (slack_sigma / math.sqrt(2.0)) * (
                rng.standard_normal((T, 3)) + 1j * rng.standard_normal((T, 3))
            )
            for b in topo.buses:
                idx = list(b.mask.indices)
                values[:, b.id, idx] += dv0[:, idx]
        return VoltagePanel(
            values=values, masks=masks, labels=identity_labels(masks),
            kind="increment", magnitude_only=False,
        )


def generate_increments(topology, spec, T, seed=None, slack_sigma=0.0):
    """Draw T independent voltage-increment samples for a feeder."""
    return FeederSampler(topology, spec).increments(T, seed=seed, slack_sigma=slack_sigma)


def analytic_cov(topology, spec):
    """Exact covariance of the stacked voltage increments."""
    return FeederSampler(topology, spec).analytic()


def voltage_covariance(Y, injection_cov):
    """Propagate a complex injection covariance through Y dV = dI.

    Returns Y^-1 S Y^-H for a full complex covariance matrix S over the
    same coordinates as Y. Small utility kept separate so the algebra
    is testable on hand-built systems.
    """
    Yinv = np.linalg.inv(np.asarray(Y, dtype=complex))
    return Yinv @ np.asarray(injection_cov, dtype=complex) @ Yinv.conj().T


def integrate_voltages(panel, v0=None):
    """Cumulative-sum increments into a voltage panel.

    The first output sample equals the start profile v0, which defaults
    to a balanced positive-sequence flat start (per-channel angle given
    by the channel's true phase), or to unit magnitudes for
    magnitude-only panels. Differencing the result recovers the input.
    """
    if panel.kind != "increment":
        raise SynthError("integrate_voltages expects an increment panel")
    T, B, _ = panel.values.shape
    if v0 is None:
        v0 = np.zeros((B, 3), dtype=complex)
        for b in range(B):
            for s in np.flatnonzero(panel.masks[b]):
                true = int(panel.labels[b, s])
                true = true if true >= 0 else int(s)
                v0[b, s] = 1.0 if panel.magnitude_only else np.exp(1j * NOMINAL_ANGLES[true])
    else:
        v0 = np.asarray(v0, dtype=complex)
        if v0.shape != (B, 3):
            raise SynthError("v0 must have shape (n_buses, 3)")
    out = np.zeros((T + 1, B, 3), dtype=complex)
    out[0] = v0
    out[1:] = v0[None, :, :] + np.cumsum(panel.values, axis=0)
    res = panel.copy()
    res.values = out
    res.kind = "voltage"
    return res


# ---------------------------------------------------------------------
# Meter noise
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Relative magnitude noise: |v| scaled by (1 + eps), |eps| <= bound.

    distribution is 'uniform' on [-bound, bound] or 'gaussian', a normal
    with sigma bound/3 truncated at +-bound. Angles are never touched.
    """

    bound: float
    distribution: str = "uniform"

    def __post_init__(self):
        if not 0.0 <= self.bound < 0.5:
            raise SynthError(f"noise bound must lie in [0, 0.5), got {self.bound}")
        if self.distribution not in ("uniform", "gaussian"):
            raise SynthError(f"unknown noise distribution {self.distribution!r}")


def apply_noise(panel, noise, seed=0):
    """Scale every present channel sample by an independent (1 + eps)."""
    out = panel.copy()
    if noise is None or noise.bound == 0.0:
        return out
    rng = np.random.default_rng(seed)
    T, B, _ = out.values.shape
    sel = np.broadcast_to(out.masks[None, :, :], out.values.shape)
    n = int(sel.sum())
    if noise.distribution == "uniform":
        eps = rng.uniform(-noise.bound, noise.bound, size=n)
    else:
        sigma = noise.bound / 3.0
        eps = rng.normal(0.0, sigma, size=n)
        bad = np.abs(eps) > noise.bound
        while bad.any():
            eps[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
            bad = np.abs(eps) > noise.bound
    factor = np.ones(out.values.shape)
    factor[sel] = 1.0 + eps
    out.values = out.values * factor
    return out


# ---------------------------------------------------------------------
# Label corruption
# ---------------------------------------------------------------------


def corrupt_labels(panel, fraction, seed=0, protect=()):
    """Permute the phase labels at a deterministic random set of buses.

    Exactly ceil(fraction * M) non-slack buses get a non-identity
    permutation of their present slots, M counting the non-slack buses.
    Only buses with two or more phases are eligible (a single channel
    has no non-trivial permutation over its own mask); when fewer are
    eligible than requested, all of them are permuted. protect lists
    bus ids that must stay untouched, e.g. the feeder head whose labels
    anchor phase identification.
    """
    if not 0.0 <= fraction <= 1.0:
        raise SynthError(f"fraction must lie in [0, 1], got {fraction}")
    out = panel.copy()
    if fraction == 0.0:
        return out
    rng = np.random.default_rng(seed)
    M = out.n_buses - 1
    target = math.ceil(fraction * M)
    eligible = [
        b for b in range(1, out.n_buses)
        if out.masks[b].sum() >= 2 and b not in set(protect)
    ]
    count = min(target, len(eligible))
    chosen = sorted(rng.choice(eligible, size=count, replace=False)) if count else []
    for b in chosen:
        slots = np.flatnonzero(out.masks[b])
        p = len(slots)
        perm = np.arange(p)
        while np.array_equal(perm, np.arange(p)):
            perm = rng.permutation(p)
        # Data in slot slots[j] moves to slot slots[perm[j]].
        vals = out.values[:, b, slots].copy()
        labs = out.labels[b, slots].copy()
        out.values[:, b, slots[perm]] = vals
        out.labels[b, slots[perm]] = labs
    return out


# ---------------------------------------------------------------------
# Measurement CSV interchange
# ---------------------------------------------------------------------

MEASUREMENT_COLUMNS = ["t", "bus_id", "phase", "magnitude_pu", "angle_deg"]


class MeasurementFormatError(SynthError):
    """Malformed measurement CSV. Carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def panel_to_csv(panel, path_or_buf):
    """Long-format export: one row per (t, bus, phase) present sample."""

    def write(fh):
        w = csv.writer(fh)
        w.writerow(MEASUREMENT_COLUMNS)
        mags = np.abs(panel.values)
        angs = np.degrees(np.angle(panel.values))
        for b in range(panel.n_buses):
            slots = np.flatnonzero(panel.masks[b])
            for s in slots:
                for t in range(panel.n_samples):
                    ang = "" if panel.magnitude_only else repr(float(angs[t, b, s]))
                    w.writerow([t, b, PHASES[s], repr(float(mags[t, b, s])), ang])

    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, "w", newline="") as fh:
            write(fh)
    else:
        write(path_or_buf)


def panel_from_csv(path_or_buf, kind="voltage", sample_period_s=3600.0):
    """Read a long-format measurement CSV back into a panel.

    The panel is magnitude-only when every angle field is empty; mixed
    presence is rejected. Labels are the identity: files carry claimed
    phases, ground truth travels in the separate label sidecar.
    """
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, newline="") as fh:
            text = fh.read()
    elif isinstance(path_or_buf, io.TextIOBase):
        text = path_or_buf.read()
    else:
        text = str(path_or_buf)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise MeasurementFormatError("empty measurement file", 1)
    header = [h.strip() for h in rows[0]]
    if header != MEASUREMENT_COLUMNS:
        raise MeasurementFormatError(
            f"header must be {','.join(MEASUREMENT_COLUMNS)}", 1
        )
    records = {}
    have_angle = set()
    t_max = -1
    b_max = -1
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise MeasurementFormatError(f"expected 5 fields, got {len(row)}", line_no)
        try:
            t = int(row[0])
            b = int(row[1])
        except ValueError:
            raise MeasurementFormatError("t and bus_id must be integers", line_no)
        if t < 0 or b < 0:
            raise MeasurementFormatError("t and bus_id must be non-negative", line_no)
        phase = row[2].strip().lower()
        if phase not in PHASES:
            raise MeasurementFormatError(f"bad phase {row[2]!r}", line_no)
        try:
            mag = float(row[3])
        except ValueError:
            raise MeasurementFormatError(f"cannot parse magnitude {row[3]!r}", line_no)
        ang_text = row[4].strip()
        if ang_text:
            try:
                ang = math.radians(float(ang_text))
            except ValueError:
                raise MeasurementFormatError(f"cannot parse angle {row[4]!r}", line_no)
            have_angle.add(True)
            val = mag * complex(math.cos(ang), math.sin(ang))
        else:
            have_angle.add(False)
            val = complex(mag, 0.0)
        key = (t, b, phase)
        if key in records:
            raise MeasurementFormatError(f"duplicate sample for {key}", line_no)
        records[key] = val
        t_max = max(t_max, t)
        b_max = max(b_max, b)
    if len(have_angle) > 1:
        raise MeasurementFormatError("mixed empty and present angle fields")
    magnitude_only = have_angle == {False}
    T, B = t_max + 1, b_max + 1
    values = np.zeros((T, B, 3), dtype=complex)
    masks = np.zeros((B, 3), dtype=bool)
    for (t, b, phase) in records:
        masks[b, _phase_slot(phase)] = True
    for b in range(B):
        for s in np.flatnonzero(masks[b]):
            for t in range(T):
                key = (t, b, PHASES[s])
                if key not in records:
                    raise MeasurementFormatError(
                        f"missing sample t={t} bus={b} phase={PHASES[s]}"
                    )
                values[t, b, s] = records[key]
    return VoltagePanel(
        values=values, masks=masks, labels=identity_labels(masks), kind=kind,
        magnitude_only=magnitude_only, sample_period_s=sample_period_s,
    )


def _phase_slot(phase):
    return {"a": 0, "b": 1, "c": 2}[phase]


def labels_to_csv(panel, path_or_buf):
    """Ground-truth sidecar: bus_id,true_phase_order over claimed slots."""

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["bus_id", "true_phase_order"])
        for b in range(panel.n_buses):
            slots = np.flatnonzero(panel.masks[b])
            order = "".join(PHASES[int(panel.labels[b, s])] for s in slots)
            w.writerow([b, order])

    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, "w", newline="") as fh:
            write(fh)
    else:
        write(path_or_buf)


def labels_from_csv(path_or_buf):
    """Read the sidecar into {bus_id: true phase string}."""
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, newline="") as fh:
            text = fh.read()
    elif isinstance(path_or_buf, io.TextIOBase):
        text = path_or_buf.read()
    else:
        text = str(path_or_buf)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["bus_id", "true_phase_order"]:
        raise MeasurementFormatError("label file header must be bus_id,true_phase_order", 1)
    out = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            b = int(row[0])
        except (ValueError, IndexError):
            raise MeasurementFormatError("bus_id must be an integer", line_no)
        order = row[1].strip().lower() if len(row) > 1 else ""
        if any(p not in "abc" for p in order):
            raise MeasurementFormatError(f"bad phase order {order!r}", line_no)
        out[b] = order
    return out


def attach_labels(panel, label_map):
    """Apply a sidecar mapping onto a panel's ground-truth labels."""
    out = panel.copy()
    for b, order in label_map.items():
        slots = np.flatnonzero(out.masks[b])
        if len(order) != len(slots):
            raise MeasurementFormatError(
                f"bus {b}: label order {order!r} does not match {len(slots)} channels"
            )
        for s, ph in zip(slots, order):
            out.labels[b, s] = _phase_slot(ph)
    return out

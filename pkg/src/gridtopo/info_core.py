"""Gaussian information measures over measurement panels.

Everything the topology estimator needs reduces to log-determinants of
sample covariance matrices: differential entropies, pairwise and group
mutual information, and the all-pairs mutual information matrix in one
of two frames (phase or symmetrical-component) from one of two sources
(complex phasors or magnitudes).

Complex observations are treated as real vectors of stacked (Re, Im)
parts. The magnitude source takes the moduli of the complex increments
per channel (increments of the stored readings when a panel never had
angles). Magnitude observations in the sequence frame are the one
exception to real stacking: the transformed vectors are complex images
of real data, so their real stacking is rank deficient by construction
and the Hermitian covariance determinant is used instead; the resulting
score equals the phase-frame magnitude value because the transform
determinants cancel. All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import csv
import io

import numpy as np
import scipy.stats

FRAMES = ("phase", "sequence")
SOURCES = ("complex", "magnitude")

_LOG_2PIE = math.log(2.0 * math.pi * math.e)

# Phase-to-sequence transform: columns of SEQ_H are the positive,
# negative and zero sequence basis vectors; SEQ_H_INV maps phase
# quantities to (p, n, z).
_H1 = np.exp(2j * np.pi / 3.0)
SEQ_H = np.array([
    [1.0, 1.0, 1.0],
    [_H1 ** 2, _H1, 1.0],
    [_H1, _H1 ** 2, 1.0],
], dtype=complex)
SEQ_H_INV = SEQ_H.conj().T / 3.0


class InfoCoreError(Exception):
    """Invalid request to the information core."""


class SingularCovarianceError(InfoCoreError):
    """A sample covariance has no usable determinant."""


class MIComputationError(InfoCoreError):
    """Aggregate of per-pair failures in a matrix computation."""

    def __init__(self, failures):
        self.failures = list(failures)
        pairs = ", ".join(str(p) for p in self.failures[:8])
        more = "" if len(self.failures) <= 8 else f" and {len(self.failures) - 8} more"
        super().__init__(f"mutual information failed for pairs: {pairs}{more}")


# ---------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------


def difference(panel):
    """First differences along time; output has T-1 samples.

    For magnitude-only panels this is the increment of the magnitude
    series, which is what magnitude-only meters can deliver.
    """
    if panel.kind != "voltage":
        raise InfoCoreError("difference expects a voltage panel")
    if panel.n_samples < 2:
        raise InfoCoreError("need at least two samples to difference")
    out = panel.copy()
    out.values = np.diff(panel.values, axis=0)
    out.kind = "increment"
    return out


def to_sequence(values):
    """Map phase-frame 3-vectors to (positive, negative, zero) components.

    Accepts shape (..., 3); a balanced positive-sequence triple maps to
    (v, 0, 0).
    """
    arr = np.asarray(values)
    if arr.shape[-1] != 3:
        raise InfoCoreError("sequence transform expects trailing dimension 3")
    return arr @ SEQ_H_INV.T


def from_sequence(values):
    arr = np.asarray(values)
    if arr.shape[-1] != 3:
        raise InfoCoreError("phase transform expects trailing dimension 3")
    return arr @ SEQ_H.T


def _stack_complex(x):
    return np.hstack([x.real, x.imag])


def _sample_cov(x, ddof=1):
    """Covariance of rows of x; complex input gives the Hermitian form."""
    xc = x - x.mean(axis=0, keepdims=True)
    n = x.shape[0]
    if np.iscomplexobj(xc):
        return xc.conj().T @ xc / (n - ddof)
    return xc.T @ xc / (n - ddof)


def _checked_logdet(cov, context):
    """log|det cov| with an explicit singularity check.

    Relative eigenvalue cutoff 1e-12 catches exact linear dependence
    (duplicated coordinates) without regularizing anything silently.
    """
    cov = np.asarray(cov)
    if cov.shape[0] == 0:
        return 0.0
    evals = np.linalg.eigvalsh(cov)
    top = float(evals[-1])
    if top <= 0.0 or evals[0] <= 1e-12 * top:
        raise SingularCovarianceError(
            f"singular covariance for {context}: eigenvalue range "
            f"[{evals[0]:.3e}, {top:.3e}]"
        )
    return float(np.sum(np.log(evals)))


def gaussian_entropy(samples):
    """Differential entropy of jointly Gaussian rows, nats.

    samples is (N, r) real (a 1-D input is treated as one coordinate).
    Uses the unbiased sample covariance after mean removal. Raises
    SingularCovarianceError when the covariance has no usable
    determinant, e.g. a duplicated coordinate.
    """
    x = np.asarray(samples)
    if np.iscomplexobj(x):
        x = _stack_complex(np.atleast_2d(x.T).T if x.ndim == 1 else x)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InfoCoreError("samples must be a (N, r) matrix")
    n, r = x.shape
    if n < r + 1:
        raise InfoCoreError(f"need at least r+1={r + 1} samples for {r} dims, got {n}")
    ld = _checked_logdet(_sample_cov(x), f"{r} coordinates over {n} samples")
    return 0.5 * r * _LOG_2PIE + 0.5 * ld


def mutual_information(samples_i, samples_k):
    """I(X;Y) in nats between two blocks of jointly Gaussian rows.

    Complex blocks are stacked into (Re, Im) real coordinates first.
    """
    xi = np.asarray(samples_i)
    xk = np.asarray(samples_k)
    if xi.ndim == 1:
        xi = xi[:, None]
    if xk.ndim == 1:
        xk = xk[:, None]
    if np.iscomplexobj(xi):
        xi = _stack_complex(xi)
    if np.iscomplexobj(xk):
        xk = _stack_complex(xk)
    if xi.shape[0] != xk.shape[0]:
        raise InfoCoreError("blocks must share the sample axis")
    joint = np.hstack([xi, xk])
    n, r = joint.shape
    if n < r + 1:
        raise InfoCoreError(f"need at least r+1={r + 1} samples for {r} dims, got {n}")
    sd = joint.std(axis=0, ddof=1)
    if np.any(sd <= 0.0):
        raise SingularCovarianceError("zero-variance coordinate in mutual information input")
    joint = (joint - joint.mean(axis=0)) / sd
    C = _sample_cov(joint)
    di = xi.shape[1]
    ld_i = _checked_logdet(C[:di, :di], "left block")
    ld_k = _checked_logdet(C[di:, di:], "right block")
    ld_j = _checked_logdet(C, "joint block")
    return 0.5 * (ld_i + ld_k - ld_j)


# ---------------------------------------------------------------------
# Panel feature extraction
# ---------------------------------------------------------------------


def _bus_features(panel, bus_id, frame, source):
    """Feature matrix for one bus; (array, hermitian_flag)."""
    x = panel.channels(bus_id)
    slots = panel.slots(bus_id)
    p = len(slots)
    if source == "magnitude":
        m = x.real if panel.magnitude_only else np.abs(x)
        if frame == "phase":
            return m, False
        A = SEQ_H_INV[:p][:, slots]
        return m @ A.T, True
    if panel.magnitude_only:
        raise InfoCoreError("complex source unavailable from a magnitude-only panel")
    if frame == "sequence":
        A = SEQ_H_INV[:p][:, slots]
        x = x @ A.T
    return _stack_complex(x), False


def _validate_frame_source(frame, source):
    if frame not in FRAMES:
        raise InfoCoreError(f"frame must be one of {FRAMES}, got {frame!r}")
    if source not in SOURCES:
        raise InfoCoreError(f"source must be one of {SOURCES}, got {source!r}")


class PanelStatistics:
    """One standardized covariance over all bus features of a panel.

    Every mutual-information query then reduces to gathering a
    submatrix and taking its log-determinant, which keeps the all-pairs
    matrix cheap: the covariance is a single rank-N update and the
    determinants are batched per joint dimension.
    """

    def __init__(self, panel, frame="phase", source="complex",
                 include_slack=False, ridge=0.0):
        _validate_frame_source(frame, source)
        if panel.kind != "increment":
            raise InfoCoreError("statistics expect an increment panel; difference first")
        self.frame = frame
        self.source = source
        self.panel = panel
        bus_ids = list(range(0 if include_slack else 1, panel.n_buses))
        feats = []
        self.slices = {}
        hermitian = None
        start = 0
        for b in bus_ids:
            f, herm = _bus_features(panel, b, frame, source)
            hermitian = herm if hermitian is None else hermitian
            feats.append(f)
            self.slices[b] = list(range(start, start + f.shape[1]))
            start += f.shape[1]
        self.hermitian = bool(hermitian)
        X = np.hstack(feats)
        self.n_samples = X.shape[0]
        self.dim = X.shape[1]
        sd = np.sqrt(np.mean(np.abs(X - X.mean(axis=0)) ** 2, axis=0))
        dead = np.flatnonzero(sd <= 0.0)
        if dead.size:
            owners = sorted({b for b in bus_ids if set(self.slices[b]) & set(dead.tolist())})
            raise SingularCovarianceError(
                f"zero-variance channels at buses {owners}"
            )
        X = (X - X.mean(axis=0)) / sd
        self.cov = _sample_cov(X)
        if ridge > 0.0:
            self.cov = self.cov + ridge * np.eye(self.dim, dtype=self.cov.dtype)
        self.bus_ids = bus_ids
        self._marginal = {}

    def require_samples(self, dims):
        if self.n_samples < dims + 1:
            raise InfoCoreError(
                f"need at least {dims + 1} increment samples for a {dims}-dim joint "
                f"covariance, got {self.n_samples}"
            )

    def _logdet(self, idx, context):
        sub = self.cov[np.ix_(idx, idx)]
        sign, ld = np.linalg.slogdet(sub)
        if (np.real(sign) if np.iscomplexobj(np.asarray(sign)) else sign) <= 0 or not np.isfinite(ld):
            raise SingularCovarianceError(f"singular covariance for {context}")
        return float(np.real(ld))

    def marginal_logdet(self, bus_id):
        if bus_id not in self._marginal:
            self._marginal[bus_id] = self._logdet(self.slices[bus_id], f"bus {bus_id}")
        return self._marginal[bus_id]

    def group_mi(self, buses_a, buses_b):
        """I(block A; block B) between unions of bus features, nats."""
        ia = [j for b in buses_a for j in self.slices[b]]
        ib = [j for b in buses_b for j in self.slices[b]]
        if set(ia) & set(ib):
            raise InfoCoreError("blocks must be disjoint")
        self.require_samples(len(ia) + len(ib))
        ld_a = self._logdet(ia, f"buses {list(buses_a)}")
        ld_b = self._logdet(ib, f"buses {list(buses_b)}")
        ld_j = self._logdet(ia + ib, f"buses {list(buses_a) + list(buses_b)}")
        return 0.5 * (ld_a + ld_b - ld_j)

    def pair_mi(self, bus_i, bus_k):
        return self.group_mi([bus_i], [bus_k])

    def mi_matrix(self):
        """All-pairs matrix over the panel's non-slack buses."""
        buses = [b for b in self.bus_ids if b != 0]
        M = len(buses)
        dmax = 0
        if M >= 2:
            dims_sorted = sorted((len(self.slices[b]) for b in buses), reverse=True)
            dmax = dims_sorted[0] + dims_sorted[1]
        self.require_samples(dmax)
        values = np.zeros((M, M))
        pos = {b: i for i, b in enumerate(buses)}
        marg = {b: self.marginal_logdet(b) for b in buses}
        groups = {}
        for ii in range(M):
            for kk in range(ii + 1, M):
                bi, bk = buses[ii], buses[kk]
                idx = self.slices[bi] + self.slices[bk]
                groups.setdefault(len(idx), []).append((bi, bk, idx))
        failures = []
        for d, entries in groups.items():
            idx_arr = np.asarray([e[2] for e in entries], dtype=np.intp)
            sub = self.cov[idx_arr[:, :, None], idx_arr[:, None, :]]
            sign, ld = np.linalg.slogdet(sub)
            sign = np.real(sign) if np.iscomplexobj(sign) else sign
            ok = (sign > 0) & np.isfinite(ld)
            for (bi, bk, _), good, ld_j in zip(entries, ok, np.real(ld)):
                if not good:
                    failures.append((bi, bk))
                    continue
                mi = 0.5 * (marg[bi] + marg[bk] - float(ld_j))
                values[pos[bi], pos[bk]] = mi
                values[pos[bk], pos[bi]] = mi
        if failures:
            raise MIComputationError(sorted(failures))
        return MIMatrix(bus_ids=tuple(buses), values=values,
                        frame=self.frame, source=self.source)


@dataclass
class MIMatrix:
    """Symmetric pairwise mutual information over non-slack buses, nats."""

    bus_ids: tuple
    values: np.ndarray
    frame: str = "phase"
    source: str = "complex"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = len(self.bus_ids)
        if self.values.shape != (m, m):
            raise InfoCoreError("values must be square over bus_ids")

    @property
    def n(self):
        return len(self.bus_ids)

    def value(self, bus_i, bus_k):
        pos = {b: i for i, b in enumerate(self.bus_ids)}
        return float(self.values[pos[bus_i], pos[bus_k]])

    def pairs(self):
        """Yield (bus_i, bus_k, mi) with bus_i < bus_k."""
        for i in range(self.n):
            for k in range(i + 1, self.n):
                yield self.bus_ids[i], self.bus_ids[k], float(self.values[i, k])

    def to_csv(self, path_or_buf):
        def write(fh):
            w = csv.writer(fh)
            w.writerow(["bus_i", "bus_j", "mi_nats"])
            for i, k, v in self.pairs():
                w.writerow([i, k, repr(v)])

        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", newline="") as fh:
                write(fh)
        else:
            write(path_or_buf)

    @classmethod
    def from_csv(cls, path_or_buf, frame="phase", source="complex"):
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, newline="") as fh:
                text = fh.read()
        else:
            text = path_or_buf.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip() for h in rows[0]] != ["bus_i", "bus_j", "mi_nats"]:
            raise InfoCoreError("mutual information CSV header must be bus_i,bus_j,mi_nats")
        entries = {}
        buses = set()
        for row in rows[1:]:
            if not row or all(not c.strip() for c in row):
                continue
            i, k, v = int(row[0]), int(row[1]), float(row[2])
            entries[(i, k)] = v
            buses.update((i, k))
        bus_ids = tuple(sorted(buses))
        pos = {b: i for i, b in enumerate(bus_ids)}
        values = np.zeros((len(bus_ids), len(bus_ids)))
        for (i, k), v in entries.items():
            values[pos[i], pos[k]] = v
            values[pos[k], pos[i]] = v
        return cls(bus_ids=bus_ids, values=values, frame=frame, source=source)


def mi_matrix(panel, frame="phase", source="complex", ridge=0.0):
    """All-pairs Gaussian mutual information between non-slack buses.

    panel must hold increments. ridge > 0 adds a diagonal loading to the
    standardized covariance as a last-resort retry for singular sample
    covariances; it is off by default and never applied silently.
    """
    return PanelStatistics(panel, frame=frame, source=source, ridge=ridge).mi_matrix()


# below this eigenvalue ratio the substation block is treated as
# numerically rank-deficient rather than merely ill-conditioned
_SUBSTATION_RANK_RTOL = 1e-6


def substation_mi(panel, frame="phase", source="complex", significance=1e-3):
    """MI between the substation and every non-slack bus, or None.

    Returns None when the substation series carries no usable signal.
    That covers three situations: a constant series, which is the
    fixed-voltage convention of the generator; meter noise riding a
    constant, which keeps the voltage angle locked so the stacked block
    loses rank; and a full-rank series whose dependence on every other
    bus is indistinguishable from the chi-square independence null at
    the given significance level, Bonferroni-corrected over buses.
    """
    feats, herm = _bus_features(panel, 0, frame, source)
    sd = np.sqrt(np.mean(np.abs(feats - feats.mean(axis=0)) ** 2, axis=0))
    if np.any(sd <= 1e-300):
        return None
    corr = _corr_normalize(_sample_cov(feats))
    eigs = np.linalg.eigvalsh(corr)
    if eigs[0] <= _SUBSTATION_RANK_RTOL * eigs[-1]:
        return None
    stats = PanelStatistics(panel, frame=frame, source=source, include_slack=True)
    out = {}
    for b in stats.bus_ids:
        if b == 0:
            continue
        out[b] = stats.pair_mi(0, b)
    if not out:
        return None
    # each cross-covariance entry carries two real parameters on the
    # hermitian (complex) path, one on the stacked real path
    per_entry = 2 if herm else 1
    d0 = len(stats.slices[0])
    alpha = significance / len(out)
    for b, v in out.items():
        dof = per_entry * d0 * len(stats.slices[b])
        if v > scipy.stats.chi2.ppf(1.0 - alpha, dof) / (2.0 * stats.n_samples):
            return out
    return None


# ---------------------------------------------------------------------
# Magnitude / angle decomposition
# ---------------------------------------------------------------------


def mi_breakdown(panel, bus_i, bus_k):
    """Split I(dV_i; dV_k) into magnitude and angle contributions.

    Works on a voltage panel in polar coordinates: per-channel moduli of
    the complex increments m = |dv| (signed magnitude increments when
    the panel is magnitude-only) and unwrapped angle increments t. The
    chain rule gives

        term_a = I(m_i; m_k)
        term_b = I(t_i; m_k | m_i)
        term_c = I(m_i, t_i; t_k | m_k)

    and the three terms sum exactly to the full polar-frame mutual
    information computed from the same joint covariance. Constant-angle
    channels (magnitude-only panels) drop out, leaving term_b = term_c = 0.
    """
    if panel.kind != "voltage":
        raise InfoCoreError("mi_breakdown expects a voltage panel")
    blocks = {}
    for tag, b in (("i", bus_i), ("k", bus_k)):
        x = panel.channels(b)
        if panel.magnitude_only:
            m = np.diff(x.real, axis=0)
            t = np.zeros_like(m)
        else:
            m = np.abs(np.diff(x, axis=0))
            t = np.diff(np.unwrap(np.angle(x), axis=0), axis=0)
        blocks["m" + tag] = m
        blocks["t" + tag] = t

    def live(arr):
        sd = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(arr.shape[1])
        return arr[:, sd > 0.0]

    mi_b, ti_b = live(blocks["mi"]), live(blocks["ti"])
    mk_b, tk_b = live(blocks["mk"]), live(blocks["tk"])
    X = np.hstack([mi_b, ti_b, mk_b, tk_b])
    if X.shape[1] == 0:
        raise SingularCovarianceError(f"no varying channels between buses {bus_i} and {bus_k}")
    c0 = mi_b.shape[1]
    c1 = c0 + ti_b.shape[1]
    c2 = c1 + mk_b.shape[1]
    idx_mi = list(range(0, c0))
    idx_ti = list(range(c0, c1))
    idx_mk = list(range(c1, c2))
    idx_tk = list(range(c2, X.shape[1]))
    n = X.shape[0]
    if n < X.shape[1] + 1:
        raise InfoCoreError("not enough samples for the polar joint covariance")
    sd = X.std(axis=0, ddof=1)
    X = (X - X.mean(axis=0)) / sd
    C = _sample_cov(X)

    def ld(idx):
        if not idx:
            return 0.0
        return _checked_logdet(C[np.ix_(idx, idx)], f"polar block of buses {bus_i},{bus_k}")

    term_a = 0.5 * (ld(idx_mi) + ld(idx_mk) - ld(idx_mi + idx_mk))
    term_b = 0.5 * (
        ld(idx_ti + idx_mi) + ld(idx_mk + idx_mi) - ld(idx_mi) - ld(idx_ti + idx_mi + idx_mk)
    ) if idx_ti else 0.0
    term_c = 0.5 * (
        ld(idx_mi + idx_ti + idx_mk) + ld(idx_tk + idx_mk) - ld(idx_mk) - ld(list(range(X.shape[1])))
    ) if idx_tk else 0.0
    return float(term_a), float(term_b), float(term_c)


# ---------------------------------------------------------------------
# Covariance-based oracles
# ---------------------------------------------------------------------


def _corr_normalize(C):
    d = np.sqrt(np.real(np.diag(C)))
    if np.any(d <= 0.0):
        raise SingularCovarianceError("non-positive variance on the covariance diagonal")
    return C / np.outer(d, d)


def entropy_from_cov(C, idx=None):
    """Gaussian differential entropy of selected real coordinates."""
    C = np.asarray(C)
    if idx is not None:
        C = C[np.ix_(idx, idx)]
    r = C.shape[0]
    ld = _checked_logdet(C, f"{r} coordinates")
    return 0.5 * r * _LOG_2PIE + 0.5 * ld


def mi_from_cov(C, idx_a, idx_b):
    """I(A;B) from an exact real covariance; coordinate index lists."""
    Cn = _corr_normalize(np.asarray(C))
    ia, ib = list(idx_a), list(idx_b)
    ld_a = _checked_logdet(Cn[np.ix_(ia, ia)], "block A")
    ld_b = _checked_logdet(Cn[np.ix_(ib, ib)], "block B")
    ld_j = _checked_logdet(Cn[np.ix_(ia + ib, ia + ib)], "joint block")
    return 0.5 * (ld_a + ld_b - ld_j)


def conditional_mi_from_cov(C, idx_a, idx_b, idx_cond):
    """I(A;B | Z) from an exact real covariance via Schur determinants."""
    ia, ib, iz = list(idx_a), list(idx_b), list(idx_cond)
    if not iz:
        return mi_from_cov(C, ia, ib)
    Cn = _corr_normalize(np.asarray(C))

    def ld(idx, what):
        return _checked_logdet(Cn[np.ix_(idx, idx)], what)

    return 0.5 * (
        ld(ia + iz, "A,Z") + ld(ib + iz, "B,Z") - ld(iz, "Z") - ld(ia + ib + iz, "A,B,Z")
    )


def sequence_real_cov(acov, panel_masks):
    """Rotate an analytic covariance into the sequence frame.

    acov is an AnalyticCovariance over (bus, slot) coordinates; the
    output covers per-bus retained sequence components (as many as the
    bus has phases) in the same coordinate layout, so the same position
    helpers apply.
    """
    D = acov.dim
    B = np.zeros((2 * D, 2 * D))
    by_bus = {}
    for j, (b, s) in enumerate(acov.coords):
        by_bus.setdefault(b, []).append((j, s))
    for b, entries in by_bus.items():
        pos = [j for j, _ in entries]
        slots = [s for _, s in entries]
        p = len(slots)
        A = SEQ_H_INV[:p][:, slots]
        re_idx = np.asarray(pos)
        im_idx = re_idx + D
        B[np.ix_(re_idx, re_idx)] = A.real
        B[np.ix_(re_idx, im_idx)] = -A.imag
        B[np.ix_(im_idx, re_idx)] = A.imag
        B[np.ix_(im_idx, im_idx)] = A.real
    return B @ acov.real @ B.T


def analytic_mi_matrix(acov, frame="phase"):
    """Exact pairwise MI from the analytic increment covariance."""
    if frame not in FRAMES:
        raise InfoCoreError(f"frame must be one of {FRAMES}, got {frame!r}")
    C = acov.real
    if frame == "sequence":
        # masks are implicit in the coordinate list
        C = sequence_real_cov(acov, None)
    buses = sorted({b for b, _ in acov.coords})
    pos = {}
    for b in buses:
        pos[b] = acov.real_positions(b)
    M = len(buses)
    values = np.zeros((M, M))
    Cn = _corr_normalize(C)
    where = {b: i for i, b in enumerate(buses)}
    ld_cache = {b: _checked_logdet(Cn[np.ix_(pos[b], pos[b])], f"bus {b}") for b in buses}
    for i in range(M):
        for k in range(i + 1, M):
            bi, bk = buses[i], buses[k]
            idx = pos[bi] + pos[bk]
            ld_j = _checked_logdet(Cn[np.ix_(idx, idx)], f"buses {bi},{bk}")
            mi = 0.5 * (ld_cache[bi] + ld_cache[bk] - ld_j)
            values[where[bi], where[bk]] = mi
            values[where[bk], where[bi]] = mi
    return MIMatrix(bus_ids=tuple(buses), values=values, frame=frame, source="complex")


def analytic_conditional_mi(acov, bus_i, bus_k, given):
    """Exact I(dV_i; dV_k | dV_given) from the analytic covariance."""
    ia = acov.real_positions(bus_i)
    ib = acov.real_positions(bus_k)
    iz = [j for b in given for j in acov.real_positions(b)]
    return conditional_mi_from_cov(acov.real, ia, ib, iz)


def analytic_group_mi(acov, buses_a, buses_b):
    """Exact I(block A; block B) for unions of buses."""
    ia = [j for b in buses_a for j in acov.real_positions(b)]
    ib = [j for b in buses_b for j in acov.real_positions(b)]
    return mi_from_cov(acov.real, ia, ib)

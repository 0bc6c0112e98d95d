"""Multi-phase distribution feeder model.

Represents a feeder as buses carrying one to three phases, connected by
branches whose series impedance follows the modified Carson equations.
Provides the per-phase admittance blocks and the assembled nodal
admittance matrix over all non-slack (bus, phase) coordinates, which is
what the linearized voltage-increment model and the synthetic data
generator consume.

Conventions
-----------
* Bus ids are consecutive integers, the substation (slack) is bus 0.
* Phases are labelled 'a', 'b', 'c' and map to slots 0, 1, 2.
* Impedances are built in ohms on a per-mile basis and converted to
  per-unit with the topology's impedance base at assembly time.
* Absent phases are structural: their rows and columns are exactly zero
  in every 3x3 block, never small numbers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

PHASES = ("a", "b", "c")
_PHASE_INDEX = {"a": 0, "b": 1, "c": 2}
# Carson constant resistive and reactive terms, ohm per mile.
CARSON_R = 0.095
CARSON_X = 0.121
# Geometry factors default to a resistance-dominant overhead line.
DEFAULT_H_SELF = 8.0
DEFAULT_H_MUT = 5.0
# Mutual pair ordering used by LineModel and the CSV schema.
MUTUAL_PAIRS = ((0, 1), (1, 2), (0, 2))


class GridModelError(Exception):
    """Base error for feeder model construction problems."""


class InvalidLineError(GridModelError):
    """Line parameters outside their physical domain."""


class SingularLineError(GridModelError):
    """Phase impedance submatrix is numerically singular."""


class TopologyFormatError(GridModelError):
    """Malformed topology CSV. Carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PhaseMask:
    """Subset of {a, b, c} present at a bus or carried by a branch."""

    present: frozenset

    def __post_init__(self):
        if not isinstance(self.present, frozenset):
            object.__setattr__(self, "present", frozenset(self.present))
        bad = self.present - set(PHASES)
        if bad:
            raise GridModelError(f"unknown phase labels {sorted(bad)}")
        if not self.present:
            raise GridModelError("phase mask must contain at least one phase")

    @classmethod
    def from_string(cls, text):
        return cls(frozenset(text.strip().lower()))

    def to_string(self):
        return "".join(p for p in PHASES if p in self.present)

    @property
    def indices(self):
        """Slot indices of the present phases, ascending."""
        return tuple(i for i, p in enumerate(PHASES) if p in self.present)

    @property
    def count(self):
        return len(self.present)

    def __contains__(self, phase):
        return phase in self.present

    def issubset(self, other):
        return self.present <= other.present

    def __iter__(self):
        return (p for p in PHASES if p in self.present)


@dataclass(frozen=True)
class Bus:
    id: int
    mask: PhaseMask
    is_slack: bool = False


@dataclass(frozen=True)
class LineModel:
    """Per-mile series parameters of one line section.

    r_per_mile applies to every present phase conductor; h_self and
    h_mut are the Carson geometry factors per phase and per unordered
    phase pair (ab, bc, ac ordering).
    """

    r_per_mile: float
    h_self: tuple = (DEFAULT_H_SELF,) * 3
    h_mut: tuple = (DEFAULT_H_MUT,) * 3

    def __post_init__(self):
        if not self.r_per_mile > 0.0:
            raise InvalidLineError(f"r_per_mile must be positive, got {self.r_per_mile}")
        object.__setattr__(self, "h_self", tuple(float(h) for h in self.h_self))
        object.__setattr__(self, "h_mut", tuple(float(h) for h in self.h_mut))
        if len(self.h_self) != 3 or len(self.h_mut) != 3:
            raise InvalidLineError("h_self and h_mut need one entry per phase / pair")


def carson_impedance(line, length_miles, mask):
    """3x3 phase impedance of a line section, ohms.

    Modified Carson equations on a per-mile basis:
        z_self = (r + 0.095 + j 0.121 h_self) * length
        z_mut  = (    0.095 + j 0.121 h_mut ) * length
    Rows and columns of absent phases are exactly zero.
    """
    if not length_miles > 0.0:
        raise InvalidLineError(f"length_miles must be positive, got {length_miles}")
    z = np.zeros((3, 3), dtype=complex)
    idx = mask.indices
    for i in idx:
        z[i, i] = (line.r_per_mile + CARSON_R + 1j * CARSON_X * line.h_self[i]) * length_miles
    for k, (i, j) in enumerate(MUTUAL_PAIRS):
        if i in idx and j in idx:
            zm = (CARSON_R + 1j * CARSON_X * line.h_mut[k]) * length_miles
            z[i, j] = zm
            z[j, i] = zm
    return z


def branch_admittance(z, mask):
    """Invert the present-phase submatrix of z, padded back to 3x3.

    Absent phases stay structurally zero. Raises SingularLineError with
    a condition estimate when the submatrix cannot be inverted.
    """
    idx = np.asarray(mask.indices)
    sub = np.asarray(z, dtype=complex)[np.ix_(idx, idx)]
    cond = np.linalg.cond(sub)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularLineError(
            f"phase impedance submatrix on phases {mask.to_string()} is singular "
            f"(condition estimate {cond:.3e})"
        )
    y = np.zeros((3, 3), dtype=complex)
    y[np.ix_(idx, idx)] = np.linalg.inv(sub)
    return y


@dataclass
class Branch:
    """One series element between parent and child buses.

    y_block is the 3x3 per-unit admittance block, filled in by
    GridTopology from the Carson impedance and the impedance base.
    Shunt terms are zero by construction in this model.
    """

    parent: int
    child: int
    mask: PhaseMask
    line: LineModel
    length_miles: float
    is_chord: bool = False
    y_block: np.ndarray | None = None

    def impedance(self):
        return carson_impedance(self.line, self.length_miles, self.mask)

    def key(self):
        a, b = sorted((self.parent, self.child))
        return (a, b)


@dataclass
class GridTopology:
    """Feeder graph: buses plus tree branches and optional chords.

    Immutable after construction by convention; mutating buses or
    branches afterwards invalidates the cached assembly.
    """

    buses: list
    branches: list
    z_base_ohm: float = 10.0
    name: str = ""
    _children: dict = field(default_factory=dict, repr=False)
    _parent: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if sorted(ids) != list(range(len(ids))):
            raise GridModelError("bus ids must be consecutive integers starting at 0")
        self.buses = sorted(self.buses, key=lambda b: b.id)
        slack = [b for b in self.buses if b.is_slack]
        if len(slack) != 1 or slack[0].id != 0:
            raise GridModelError("exactly one slack bus required, with id 0")
        if not self.z_base_ohm > 0.0:
            raise GridModelError("z_base_ohm must be positive")
        self._validate_graph()
        for br in self.branches:
            if br.y_block is None:
                z_pu = br.impedance() / self.z_base_ohm
                br.y_block = branch_admittance(z_pu, br.mask)

    def _validate_graph(self):
        n = len(self.buses)
        mask_of = {b.id: b.mask for b in self.buses}
        seen = set()
        self._children = {b.id: [] for b in self.buses}
        self._parent = {}
        tree_edges = 0
        for br in self.branches:
            for end in (br.parent, br.child):
                if end not in mask_of:
                    raise GridModelError(f"branch references unknown bus {end}")
            if br.parent == br.child:
                raise GridModelError(f"self-loop at bus {br.parent}")
            if not br.mask.issubset(mask_of[br.parent]) or not br.mask.issubset(mask_of[br.child]):
                raise GridModelError(
                    f"branch {br.parent}-{br.child} carries phases "
                    f"{br.mask.to_string()} not present at both ends"
                )
            if br.key() in seen:
                raise GridModelError(f"duplicate branch {br.key()}")
            seen.add(br.key())
            if not br.is_chord:
                tree_edges += 1
                self._children[br.parent].append(br.child)
                if br.child in self._parent:
                    raise GridModelError(f"bus {br.child} has two tree parents")
                self._parent[br.child] = br.parent
        if tree_edges != n - 1:
            raise GridModelError(f"need {n - 1} tree branches for {n} buses, got {tree_edges}")
        # Reachability from the slack over tree branches.
        reached = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for v in self._children[u]:
                if v not in reached:
                    reached.add(v)
                    frontier.append(v)
        if len(reached) != n:
            missing = sorted(set(b.id for b in self.buses) - reached)
            raise GridModelError(f"buses {missing} unreachable from the slack")
        # Every non-slack bus must see all its phases through its parent branch,
        # otherwise some (bus, phase) coordinate floats with no connection.
        by_child = {br.child: br for br in self.branches if not br.is_chord}
        for b in self.buses:
            if b.is_slack:
                continue
            if not b.mask.issubset(by_child[b.id].mask):
                raise GridModelError(
                    f"bus {b.id} carries phases {b.mask.to_string()} but its parent "
                    f"branch only carries {by_child[b.id].mask.to_string()}"
                )

    # -- graph accessors ------------------------------------------------

    @property
    def n_buses(self):
        return len(self.buses)

    @property
    def non_slack_ids(self):
        return [b.id for b in self.buses if not b.is_slack]

    def bus(self, bus_id):
        return self.buses[bus_id]

    def parent_of(self, bus_id):
        return self._parent.get(bus_id)

    def children_of(self, bus_id):
        return list(self._children.get(bus_id, ()))

    def depth_of(self, bus_id):
        d = 0
        u = bus_id
        while u != 0:
            u = self._parent[u]
            d += 1
        return d

    def siblings_of(self, bus_id):
        p = self.parent_of(bus_id)
        if p is None:
            return []
        return [c for c in self.children_of(p) if c != bus_id]

    def descendants_of(self, bus_id):
        out = []
        frontier = list(self.children_of(bus_id))
        while frontier:
            u = frontier.pop()
            out.append(u)
            frontier.extend(self.children_of(u))
        return out

    def edge_set(self, include_root=True, include_chords=True):
        """Undirected edges as a set of sorted tuples."""
        edges = set()
        for br in self.branches:
            if br.is_chord and not include_chords:
                continue
            if not include_root and 0 in (br.parent, br.child):
                continue
            edges.add(br.key())
        return edges

    @property
    def chords(self):
        return [br for br in self.branches if br.is_chord]

    def masks_array(self):
        """(n_buses, 3) boolean slot presence."""
        out = np.zeros((self.n_buses, 3), dtype=bool)
        for b in self.buses:
            out[b.id, list(b.mask.indices)] = True
        return out

    def mean_xr_ratio(self):
        """Average reactance-to-resistance ratio of the self impedances."""
        ratios = []
        for br in self.branches:
            for i in br.mask.indices:
                x = CARSON_X * br.line.h_self[i]
                r = br.line.r_per_mile + CARSON_R
                ratios.append(x / r)
        return float(np.mean(ratios))


@dataclass
class AdmittanceSystem:
    """Assembled nodal admittance over non-slack present coordinates.

    matrix follows the increment model  Y dV = dI  with off-diagonal
    blocks equal to the branch admittance blocks and diagonal blocks
    equal to minus the sum over all neighbours, the slack included.
    coords lists (bus_id, slot) per matrix row.
    """

    matrix: np.ndarray
    coords: list
    index: dict

    @property
    def dim(self):
        return len(self.coords)

    def coords_of_bus(self, bus_id):
        return [i for i, (b, _) in enumerate(self.coords) if b == bus_id]


def assemble_admittance(topology):
    """Build the per-unit nodal admittance matrix of the increment model."""
    coords = []
    for b in topology.buses:
        if b.is_slack:
            continue
        for s in b.mask.indices:
            coords.append((b.id, s))
    index = {c: i for i, c in enumerate(coords)}
    n = len(coords)
    Y = np.zeros((n, n), dtype=complex)

    def scatter(bus_i, bus_k, block, sign):
        for si in topology.bus(bus_i).mask.indices:
            row = index.get((bus_i, si))
            if row is None:
                continue
            for sk in topology.bus(bus_k).mask.indices:
                col = index.get((bus_k, sk))
                if col is None:
                    continue
                Y[row, col] += sign * block[si, sk]

    for br in topology.branches:
        blk = br.y_block
        u, v = br.parent, br.child
        if u != 0:
            scatter(u, u, blk, -1.0)
            if v != 0:
                scatter(u, v, blk, +1.0)
        if v != 0:
            scatter(v, v, blk, -1.0)
            if u != 0:
                scatter(v, u, blk, +1.0)
    return AdmittanceSystem(matrix=Y, coords=coords, index=index)


# -- CSV interchange ----------------------------------------------------

TOPOLOGY_COLUMNS = [
    "parent_id",
    "child_id",
    "phases",
    "length_miles",
    "r_per_mile",
    "h_self_a",
    "h_self_b",
    "h_self_c",
    "h_mut_ab",
    "h_mut_bc",
    "h_mut_ac",
]


def topology_to_csv(topology, path_or_buf):
    """Write branch rows. A chord column appears when chords exist."""
    has_chords = any(br.is_chord for br in topology.branches)
    cols = TOPOLOGY_COLUMNS + (["chord"] if has_chords else [])

    def write(fh):
        w = csv.writer(fh)
        w.writerow(cols)
        for br in topology.branches:
            row = [
                br.parent,
                br.child,
                br.mask.to_string(),
                repr(float(br.length_miles)),
                repr(float(br.line.r_per_mile)),
            ]
            row += [repr(h) for h in br.line.h_self]
            row += [repr(h) for h in br.line.h_mut]
            if has_chords:
                row.append(1 if br.is_chord else 0)
            w.writerow(row)

    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, "w", newline="") as fh:
            write(fh)
    else:
        write(path_or_buf)


def _parse_float(text, col, line_no):
    try:
        return float(text)
    except ValueError:
        raise TopologyFormatError(f"column {col!r}: cannot parse {text!r} as a number", line_no)


def topology_from_csv(path_or_buf, z_base_ohm=10.0, name=""):
    """Read a topology CSV. Bus masks are the union of incident branch phases."""
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, newline="") as fh:
            text = fh.read()
    elif isinstance(path_or_buf, io.TextIOBase):
        text = path_or_buf.read()
    else:
        text = str(path_or_buf)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise TopologyFormatError("empty topology file", 1)
    header = [h.strip() for h in rows[0]]
    for col in TOPOLOGY_COLUMNS:
        if col not in header:
            raise TopologyFormatError(f"missing required column {col!r}", 1)
    pos = {h: i for i, h in enumerate(header)}
    has_chord = "chord" in pos

    branches = []
    phase_union = {0: set()}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise TopologyFormatError(
                f"expected {len(header)} fields, got {len(row)}", line_no
            )
        try:
            parent = int(row[pos["parent_id"]])
            child = int(row[pos["child_id"]])
        except ValueError:
            raise TopologyFormatError("bus ids must be integers", line_no)
        phases = row[pos["phases"]].strip().lower()
        if not phases or any(p not in "abc" for p in phases):
            raise TopologyFormatError(f"bad phases field {phases!r}", line_no)
        mask = PhaseMask.from_string(phases)
        length = _parse_float(row[pos["length_miles"]], "length_miles", line_no)
        r = _parse_float(row[pos["r_per_mile"]], "r_per_mile", line_no)
        h_self = tuple(
            _parse_float(row[pos[f"h_self_{p}"]], f"h_self_{p}", line_no) if p in phases else
            (DEFAULT_H_SELF if not row[pos[f"h_self_{p}"]].strip() else
             _parse_float(row[pos[f"h_self_{p}"]], f"h_self_{p}", line_no))
            for p in PHASES
        )
        h_mut = tuple(
            DEFAULT_H_MUT if not row[pos[f"h_mut_{pair}"]].strip() else
            _parse_float(row[pos[f"h_mut_{pair}"]], f"h_mut_{pair}", line_no)
            for pair in ("ab", "bc", "ac")
        )
        is_chord = False
        if has_chord and row[pos["chord"]].strip():
            is_chord = row[pos["chord"]].strip() == "1"
        try:
            line = LineModel(r_per_mile=r, h_self=h_self, h_mut=h_mut)
            br = Branch(parent=parent, child=child, mask=mask, line=line,
                        length_miles=length, is_chord=is_chord)
        except GridModelError as exc:
            raise TopologyFormatError(str(exc), line_no)
        branches.append(br)
        for end in (parent, child):
            phase_union.setdefault(end, set()).update(mask.present)

    n = max(phase_union) + 1
    if sorted(phase_union) != list(range(n)):
        missing = sorted(set(range(n)) - set(phase_union))
        raise TopologyFormatError(f"bus ids must be consecutive, missing {missing}")
    buses = [
        Bus(id=i, mask=PhaseMask(frozenset(phase_union[i])), is_slack=(i == 0))
        for i in range(n)
    ]
    return GridTopology(buses=buses, branches=branches, z_base_ohm=z_base_ohm, name=name)

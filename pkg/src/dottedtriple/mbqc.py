"""Desk-scale measurement-based quantum computation.

Angles are integers ``k`` in ``0..7`` standing for ``k*pi/4``.  A measurement
at angle ``k`` projects onto ``|+_k>`` (outcome 0) or ``|-_k>`` (outcome 1)
with ``|±_k> = (|0> ± e^{ik pi/4}|1>)/sqrt(2)``.

Two register backends share one interface: :class:`DenseRegister` keeps a
single state vector, :class:`ComponentRegister` resolves computational-basis
qubits classically and simulates every remaining connected component on its
own.  Both give identical outcome distributions.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError, ResourceLimitError
from .graph_core import Graph, Location, dot

__all__ = [
    "DEFAULT_CAP",
    "PAULI",
    "plus_state",
    "basis_state",
    "phase_gate",
    "QuantumState",
    "prepare_graph_state",
    "measure",
    "fidelity",
    "MeasurementPattern",
    "parse_pattern",
    "load_pattern",
    "bridge_pattern",
    "RunResult",
    "reference_run",
    "DenseRegister",
    "ComponentRegister",
    "make_register",
    "ComponentSimulation",
    "simulate_components",
]

DEFAULT_CAP = 22
NORM_TOL = 1e-10
PROB_TOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_PHASES = np.exp(1j * np.pi / 4 * np.arange(8))


def plus_state(k: int) -> np.ndarray:
    return np.array([1.0, _PHASES[k % 8]], dtype=complex) / np.sqrt(2)


def basis_state(d: int) -> np.ndarray:
    out = np.zeros(2, dtype=complex)
    out[d] = 1.0
    return out


def phase_gate(k: int) -> np.ndarray:
    """``Z(k pi/4) = diag(1, e^{ik pi/4})``."""
    return np.diag([1.0, _PHASES[k % 8]]).astype(complex)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


class QuantumState:
    """Dense state over labelled qubits, stored as an ``n``-axis tensor."""

    def __init__(self, labels: Sequence[Hashable], tensor: np.ndarray, cap: int = DEFAULT_CAP):
        labels = list(labels)
        if len(labels) > cap:
            raise ResourceLimitError(f"{len(labels)} qubits exceeds the cap of {cap}")
        if len(set(labels)) != len(labels):
            raise InputError("duplicate qubit labels")
        self.labels = labels
        self.cap = cap
        self.tensor = np.asarray(tensor, dtype=complex).reshape((2,) * len(labels))

    @classmethod
    def product(cls, labels: Sequence[Hashable], vectors: Sequence[np.ndarray], cap: int = DEFAULT_CAP) -> QuantumState:
        labels = list(labels)
        if len(labels) > cap:
            raise ResourceLimitError(f"{len(labels)} qubits exceeds the cap of {cap}")
        t = np.ones((), dtype=complex)
        for vec in vectors:
            t = np.multiply.outer(t, np.asarray(vec, dtype=complex))
        return cls(labels, t, cap)

    @property
    def n(self) -> int:
        return len(self.labels)

    def copy(self) -> QuantumState:
        return QuantumState(list(self.labels), self.tensor.copy(), self.cap)

    def _axis(self, q: Hashable) -> int:
        try:
            return self.labels.index(q)
        except ValueError:
            raise InputError(f"qubit {q!r} is not in this state") from None

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def apply(self, q: Hashable, matrix: np.ndarray) -> None:
        ax = self._axis(q)
        self.tensor = np.moveaxis(np.tensordot(matrix, self.tensor, axes=([1], [ax])), 0, ax)

    def apply_pauli(self, q: Hashable, p: str) -> None:
        if p != "I":
            self.apply(q, PAULI[str(p)])

    def phase(self, q: Hashable, k: int) -> None:
        if k % 8:
            idx = [slice(None)] * self.n
            idx[self._axis(q)] = 1
            self.tensor[tuple(idx)] *= _PHASES[k % 8]

    def cz(self, a: Hashable, b: Hashable) -> None:
        idx = [slice(None)] * self.n
        idx[self._axis(a)] = 1
        idx[self._axis(b)] = 1
        self.tensor[tuple(idx)] *= -1

    def tensor_with(self, other: QuantumState) -> QuantumState:
        labels = self.labels + other.labels
        if len(labels) > self.cap:
            raise ResourceLimitError(f"{len(labels)} qubits exceeds the cap of {self.cap}")
        return QuantumState(labels, np.multiply.outer(self.tensor, other.tensor), self.cap)

    def _branches(self, q: Hashable, k: int) -> tuple[np.ndarray, np.ndarray]:
        ax = self._axis(q)
        psi0 = np.take(self.tensor, 0, axis=ax)
        psi1 = np.take(self.tensor, 1, axis=ax) * np.conj(_PHASES[k % 8])
        return (psi0 + psi1) / np.sqrt(2), (psi0 - psi1) / np.sqrt(2)

    def probability(self, q: Hashable, k: int) -> float:
        """Probability of outcome 0 when measuring ``q`` at angle ``k``."""
        b0, b1 = self._branches(q, k)
        p0 = float(np.vdot(b0, b0).real)
        total = p0 + float(np.vdot(b1, b1).real)
        return _clamp(p0 / total)

    def measure(self, q: Hashable, k: int, rng=None, outcome: int | None = None) -> tuple[int, float]:
        """Measure and remove ``q``; returns ``(outcome, probability of that outcome)``."""
        b0, b1 = self._branches(q, k)
        p0 = float(np.vdot(b0, b0).real)
        total = p0 + float(np.vdot(b1, b1).real)
        p0 = _clamp(p0 / total)
        if outcome is None:
            outcome = 0 if _rng(rng).random() < p0 else 1
        p = p0 if outcome == 0 else 1.0 - p0
        if p < 1e-14:
            raise InputError(f"outcome {outcome} on qubit {q!r} has probability 0")
        branch = b0 if outcome == 0 else b1
        self.labels.remove(q)
        self.tensor = branch / np.linalg.norm(branch)
        return outcome, p

    def vector(self, order: Sequence[Hashable] | None = None) -> np.ndarray:
        """Flat amplitude vector, first label most significant."""
        if order is None:
            return self.tensor.reshape(-1).copy()
        axes = [self._axis(q) for q in order]
        if sorted(axes) != list(range(self.n)):
            raise InputError("order must list every qubit exactly once")
        return np.transpose(self.tensor, axes).reshape(-1).copy()


def _clamp(p: float) -> float:
    if p < -PROB_TOL or p > 1 + PROB_TOL:
        raise ArithmeticError(f"probability {p} outside [0, 1]")
    return min(1.0, max(0.0, p))


def fidelity(a: QuantumState | np.ndarray, b: QuantumState | np.ndarray, order: Sequence | None = None) -> float:
    """``|<a|b>|^2`` for pure states (qubit order taken from ``a`` unless given)."""
    if isinstance(a, QuantumState):
        order = list(order or a.labels)
        va = a.vector(order)
    else:
        va = np.asarray(a)
    vb = b.vector(order) if isinstance(b, QuantumState) else np.asarray(b)
    return float(abs(np.vdot(va, vb)) ** 2 / (np.vdot(va, va).real * np.vdot(vb, vb).real))


def prepare_graph_state(
    graph: Graph, preparations: Mapping[Hashable, np.ndarray] | None = None, cap: int = DEFAULT_CAP
) -> QuantumState:
    """Tensor the single-qubit preparations (default ``|+>``) and apply CZ on every edge."""
    preparations = preparations or {}
    vecs = [preparations.get(v, plus_state(0)) for v in graph.vertices]
    state = QuantumState.product(graph.vertices, vecs, cap)
    for u, v in graph.edges:
        state.cz(u, v)
    return state


def measure(state: QuantumState, vertex: Hashable, angle: int, rng=None) -> tuple[int, QuantumState]:
    """Non-destructive wrapper: returns the outcome and a new post-measurement state."""
    post = state.copy()
    outcome, _ = post.measure(vertex, angle, rng)
    return outcome, post


# ---------------------------------------------------------------------------
# measurement patterns


def _parity(s: Mapping, deps: Iterable) -> int:
    out = 0
    for j in deps:
        out ^= s[j]
    return out


@dataclass(frozen=True, eq=False)
class MeasurementPattern:
    """Angles, correction dependencies, order and outputs on a host graph.

    A measured vertex ``v`` is measured at ``(-1)^{sX} angles[v] + pi sZ``
    where ``sX``/``sZ`` are parities of earlier outcomes in ``xdeps[v]`` /
    ``zdeps[v]``.  Output ``o`` is decoded by ``Z(output_phase[o])`` followed
    by ``X^{sX} Z^{sZ}``.  ``classical_outputs`` names measured vertices whose
    outcomes form a classical result.
    """

    graph: Graph
    angles: Mapping
    xdeps: Mapping
    zdeps: Mapping
    order: tuple
    outputs: tuple = ()
    inputs: tuple = ()
    classical_outputs: tuple = ()
    output_phase: Mapping = field(default_factory=dict)
    flow: Mapping | None = None

    def __post_init__(self) -> None:
        g = self.graph
        order, outputs = tuple(self.order), tuple(self.outputs)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "classical_outputs", tuple(self.classical_outputs))
        for v in order + outputs + self.inputs:
            if v not in g:
                raise InputError(f"pattern vertex {v!r} not in host graph")
        if len(set(order)) != len(order) or set(order) & set(outputs) or len(set(outputs)) != len(outputs):
            raise InputError("order and outputs must be disjoint and duplicate-free")
        if set(order) | set(outputs) != set(g.vertices):
            raise InputError("every vertex must be measured or be an output")
        if not set(self.classical_outputs) <= set(order):
            raise InputError("classical outputs must be measured vertices")
        pos = {v: i for i, v in enumerate(order)}
        angles = {v: int(self.angles.get(v, 0)) % 8 for v in order}
        xdeps = {v: frozenset(self.xdeps.get(v, ())) for v in g.vertices}
        zdeps = {v: frozenset(self.zdeps.get(v, ())) for v in g.vertices}
        for v in g.vertices:
            limit = pos.get(v, len(order))
            for j in xdeps[v] | zdeps[v]:
                if j not in pos or pos[j] >= limit:
                    raise InputError(f"vertex {v!r} depends on {j!r}, which is not measured before it")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "xdeps", xdeps)
        object.__setattr__(self, "zdeps", zdeps)
        object.__setattr__(self, "output_phase", {o: int(self.output_phase.get(o, 0)) % 8 for o in outputs})

    @classmethod
    def from_flow(
        cls,
        graph: Graph,
        angles: Mapping,
        flow: Mapping,
        order: Sequence,
        outputs: Sequence,
        inputs: Sequence = (),
        classical_outputs: Sequence = (),
    ) -> MeasurementPattern:
        """Pattern whose corrections come from a causal flow ``f``.

        Outcome of ``i`` X-corrects ``f(i)`` and Z-corrects ``N(f(i)) - {i}``.
        """
        _check_flow(graph, flow, order, outputs, classical_outputs)
        xdeps: dict = {v: set() for v in graph.vertices}
        zdeps: dict = {v: set() for v in graph.vertices}
        for i, fi in flow.items():
            xdeps[fi].add(i)
            for k in graph.neighbours(fi):
                if k != i:
                    zdeps[k].add(i)
        return cls(graph, angles, xdeps, zdeps, tuple(order), tuple(outputs), tuple(inputs), tuple(classical_outputs), {}, dict(flow))

    def adapted_angle(self, v: Hashable, s: Mapping) -> int:
        sx = _parity(s, self.xdeps[v])
        sz = _parity(s, self.zdeps[v])
        return ((-1) ** sx * self.angles[v] + 4 * sz) % 8

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "graph": self.graph.to_json(),
            "angles": {str(v): k for v, k in self.angles.items()},
            "xdeps": {str(v): sorted(d, key=str) for v, d in self.xdeps.items() if d},
            "zdeps": {str(v): sorted(d, key=str) for v, d in self.zdeps.items() if d},
            "order": list(self.order),
            "outputs": list(self.outputs),
        }
        if self.inputs:
            out["inputs"] = list(self.inputs)
        if self.classical_outputs:
            out["classical_outputs"] = list(self.classical_outputs)
        if any(self.output_phase.values()):
            out["output_phase"] = {str(v): k for v, k in self.output_phase.items()}
        if self.flow is not None:
            out["flow"] = {str(i): fi for i, fi in self.flow.items()}
        return out


def _check_flow(graph: Graph, flow: Mapping, order: Sequence, outputs: Sequence, readout: Sequence = ()) -> None:
    """Causal-flow conditions; ``readout`` vertices are flow outputs that get measured."""
    order = list(order)
    pos = {v: i for i, v in enumerate(order)}
    late = len(order)
    for v in order:
        if v not in flow and v not in readout:
            raise InputError(f"measured vertex {v!r} has no flow successor")
    if len(set(flow.values())) != len(flow):
        raise InputError("flow is not injective")
    for i, fi in flow.items():
        if i not in pos:
            raise InputError(f"flow source {i!r} is not measured")
        if not graph.has_edge(i, fi):
            raise InputError(f"flow successor {fi!r} of {i!r} is not a neighbour")
        if pos.get(fi, late) <= pos[i]:
            raise InputError(f"flow successor {fi!r} is measured before {i!r}")
        for k in graph.neighbours(fi):
            if k != i and pos.get(k, late) < pos[i]:
                raise InputError(f"neighbour {k!r} of f({i!r}) is measured before {i!r}")


def _resolve_vertex(tok: Any, graph: Graph) -> Hashable:
    if tok in graph:
        return tok
    if isinstance(tok, str):
        try:
            as_int = int(tok)
        except ValueError:
            as_int = None
        if as_int is not None and as_int in graph:
            return as_int
    raise InputError(f"pattern refers to unknown vertex {tok!r}")


def parse_pattern(data: Mapping, base: Graph | None = None) -> MeasurementPattern:
    """Read a pattern object.

    ``"level": "dotted"`` (default) means vertices of ``dot(base)``; the
    host is ``dot(base)`` when a base graph is supplied, else ``data["graph"]``.
    ``"level": "base"`` means a pattern on the base graph given with a
    ``"flow"`` map; it is bridged onto ``dot(base)``.
    """
    level = data.get("level", "dotted")
    if level == "base":
        if base is None:
            from .graph_core import parse_base_graph

            base = parse_base_graph(data["graph"])
        res = lambda t: _resolve_vertex(t, base)  # noqa: E731
        if "flow" not in data:
            raise InputError('a base-level pattern needs a "flow" map')
        flow = {res(i): res(f) for i, f in data["flow"].items()}
        pattern = MeasurementPattern.from_flow(
            base,
            {res(v): k for v, k in data.get("angles", {}).items()},
            flow,
            [res(v) for v in data["order"]],
            [res(v) for v in data.get("outputs", [])],
            [res(v) for v in data.get("inputs", [])],
            [res(v) for v in data.get("classical_outputs", [])],
        )
        return bridge_pattern(pattern)
    if level != "dotted":
        raise InputError(f"unknown pattern level {level!r}")
    if base is not None:
        host = dot(base).graph
    elif isinstance(data.get("graph"), Mapping):
        from .graph_core import parse_base_graph

        host = parse_base_graph(data["graph"])
    else:
        raise InputError("pattern needs a base graph or an inline host graph")
    res = lambda t: _resolve_vertex(t, host)  # noqa: E731
    try:
        return MeasurementPattern(
            host,
            {res(v): k for v, k in data.get("angles", {}).items()},
            {res(v): [res(j) for j in d] for v, d in data.get("xdeps", {}).items()},
            {res(v): [res(j) for j in d] for v, d in data.get("zdeps", {}).items()},
            tuple(res(v) for v in data["order"]),
            tuple(res(v) for v in data.get("outputs", [])),
            tuple(res(v) for v in data.get("inputs", [])),
            tuple(res(v) for v in data.get("classical_outputs", [])),
            {res(v): k for v, k in data.get("output_phase", {}).items()},
        )
    except KeyError as exc:
        raise InputError(f"pattern is missing field {exc}") from exc


def load_pattern(path: str | Path, base: Graph | None = None) -> MeasurementPattern:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, Mapping):
        raise InputError(f"{path}: pattern must be a JSON object")
    return parse_pattern(data, base)


def bridge_pattern(pattern: MeasurementPattern) -> MeasurementPattern:
    """Carry a flow pattern on ``G`` over to ``dot(G)``.

    Every added vertex is measured first at angle pi/2.  A Y measurement of a
    degree-two vertex restores the base edge between its neighbours up to
    ``Z(pi/2) Z^s`` on each of them, so primary ``v`` carries a known phase
    ``deg(v) * pi/2`` plus Z byproducts from its added neighbours.  The phase
    is folded into the angle (and, for odd degree, the X dependencies also
    feed the Z parity); on outputs it becomes an output phase.
    """
    if pattern.flow is None:
        raise InputError("bridging needs a pattern with a flow")
    g = pattern.graph
    _check_flow(g, pattern.flow, pattern.order, pattern.outputs, pattern.classical_outputs)
    d = dot(g)
    at = {v: d.vertex_at[Location.primary(v)] for v in g.vertices}
    added_of = {v: [] for v in g.vertices}
    for a in d.added_vertices:
        u, w = d.location_of[a].endpoints(g)
        added_of[u].append(a)
        added_of[w].append(a)

    angles, xdeps, zdeps, phase = {}, {}, {}, {}
    for a in d.added_vertices:
        angles[a] = 2
    for v in g.vertices:
        beta = 2 * g.degree(v)
        xs = frozenset(at[j] for j in pattern.xdeps[v])
        zs = frozenset(at[j] for j in pattern.zdeps[v]) ^ frozenset(added_of[v])
        if v in pattern.angles:
            angles[at[v]] = (pattern.angles[v] + beta) % 8
            if g.degree(v) % 2:
                zs = zs ^ xs
        else:
            phase[at[v]] = (pattern.output_phase.get(v, 0) - beta) % 8
        xdeps[at[v]] = xs
        zdeps[at[v]] = zs
    order = tuple(d.added_vertices) + tuple(at[v] for v in pattern.order)
    return MeasurementPattern(
        d.graph,
        angles,
        xdeps,
        zdeps,
        order,
        tuple(at[v] for v in pattern.outputs),
        tuple(at[v] for v in pattern.inputs),
        tuple(at[v] for v in pattern.classical_outputs),
        phase,
    )


@dataclass
class RunResult:
    output: QuantumState | None
    outcomes: dict
    classical: tuple = ()


def decode_output(state: QuantumState, pattern: MeasurementPattern, s: Mapping, extra_phase: Mapping | None = None) -> None:
    """Apply output phases then Pauli byproduct corrections, in place."""
    for o in pattern.outputs:
        k = pattern.output_phase[o] + (extra_phase or {}).get(o, 0)
        state.phase(o, k)
        if _parity(s, pattern.xdeps[o]):
            state.apply_pauli(o, "X")
        if _parity(s, pattern.zdeps[o]):
            state.apply_pauli(o, "Z")


def reference_run(pattern: MeasurementPattern, seed=None, cap: int = DEFAULT_CAP) -> RunResult:
    """Execute a pattern without blinding on a single dense state."""
    rng = _rng(seed)
    state = prepare_graph_state(pattern.graph, cap=cap)
    s: dict = {}
    for v in pattern.order:
        s[v], _ = state.measure(v, pattern.adapted_angle(v, s), rng)
    decode_output(state, pattern, s)
    if pattern.outputs:
        state = QuantumState(list(pattern.outputs), np.transpose(state.tensor, [state.labels.index(o) for o in pattern.outputs]), cap)
    else:
        state = None
    return RunResult(state, s, tuple(s[v] for v in pattern.classical_outputs))


# ---------------------------------------------------------------------------
# registers


class DenseRegister:
    """All qubits in one state vector (monolithic cross-check backend)."""

    def __init__(self, preparations: Mapping[int, np.ndarray], cap: int = DEFAULT_CAP):
        labels = list(preparations)
        self.state = QuantumState.product(labels, [preparations[v] for v in labels], cap)
        self.cap = cap

    def copy(self) -> DenseRegister:
        new = object.__new__(DenseRegister)
        new.state, new.cap = self.state.copy(), self.cap
        return new

    @property
    def qubits(self) -> list:
        return list(self.state.labels)

    def entangle(self, edges: Iterable[tuple]) -> None:
        for u, v in edges:
            self.state.cz(u, v)

    def apply_pauli(self, v: int, p: str) -> None:
        self.state.apply_pauli(v, p)

    def probability(self, v: int, k: int) -> float:
        return self.state.probability(v, k)

    def measure(self, v: int, k: int, rng=None, outcome: int | None = None) -> tuple[int, float]:
        return self.state.measure(v, k, rng, outcome)

    def discard(self, v: int) -> None:
        """Drop a qubit known to be unentangled from the rest."""
        p0 = self.state.probability(v, 0)
        self.state.measure(v, 0, outcome=0 if p0 >= 0.5 else 1)

    def state_of(self, vertices: Sequence[int]) -> QuantumState:
        if set(vertices) != set(self.state.labels):
            raise InputError("dense register can only export all remaining qubits")
        return QuantumState(list(vertices), np.transpose(self.state.tensor, [self.state.labels.index(v) for v in vertices]), self.cap)


class ComponentRegister:
    """Componentwise simulation.

    Qubits prepared in ``|0>``/``|1>`` never become entangled under CZ: they
    only contribute ``Z^d`` to their neighbours and give a uniformly random
    outcome in any equatorial basis.  They are tracked as classical bits and
    every other connected component is simulated as its own dense state.
    """

    def __init__(self, preparations: Mapping[int, np.ndarray], cap: int = DEFAULT_CAP):
        self.cap = cap
        self.classical: dict[int, int] = {}
        self.pending: dict[int, np.ndarray] = {}
        for v, vec in preparations.items():
            vec = np.asarray(vec, dtype=complex)
            if abs(abs(vec[0]) - 1) < 1e-12:
                self.classical[v] = 0
            elif abs(abs(vec[1]) - 1) < 1e-12:
                self.classical[v] = 1
            else:
                self.pending[v] = vec.copy()
        self.components: list[QuantumState] = []
        self.where: dict[int, int] = {}
        self.entangled = False

    def copy(self) -> ComponentRegister:
        new = object.__new__(ComponentRegister)
        new.cap = self.cap
        new.classical = dict(self.classical)
        new.pending = {v: vec.copy() for v, vec in self.pending.items()}
        new.components = [c.copy() for c in self.components]
        new.where = dict(self.where)
        new.entangled = self.entangled
        return new

    @property
    def qubits(self) -> list:
        return sorted(list(self.classical) + list(self.pending) + list(self.where))

    def entangle(self, edges: Iterable[tuple]) -> None:
        if self.entangled:
            raise InputError("register already entangled")
        parent = {v: v for v in self.pending}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        quantum_edges = []
        for u, v in edges:
            cu, cv = u in self.classical, v in self.classical
            if cu and cv:
                continue  # CZ between basis states is a global phase
            if cu:
                if self.classical[u]:
                    self.pending[v] = PAULI["Z"] @ self.pending[v]
            elif cv:
                if self.classical[v]:
                    self.pending[u] = PAULI["Z"] @ self.pending[u]
            else:
                quantum_edges.append((u, v))
                parent[find(u)] = find(v)
        groups: dict[int, list[int]] = {}
        for v in self.pending:
            groups.setdefault(find(v), []).append(v)
        for members in sorted(groups.values(), key=min):
            members.sort()
            idx = len(self.components)
            self.components.append(QuantumState.product(members, [self.pending[v] for v in members], self.cap))
            for v in members:
                self.where[v] = idx
        for u, v in quantum_edges:
            self.components[self.where[u]].cz(u, v)
        self.pending = {}
        self.entangled = True

    def component_sets(self) -> list[frozenset]:
        return [frozenset(c.labels) for c in self.components if c.labels]

    def apply_pauli(self, v: int, p: str) -> None:
        if v in self.classical:
            if p in ("X", "Y"):
                self.classical[v] ^= 1
        else:
            self.components[self.where[v]].apply_pauli(v, p)

    def probability(self, v: int, k: int) -> float:
        if v in self.classical:
            return 0.5
        return self.components[self.where[v]].probability(v, k)

    def measure(self, v: int, k: int, rng=None, outcome: int | None = None) -> tuple[int, float]:
        if v in self.classical:
            del self.classical[v]
            if outcome is None:
                outcome = int(_rng(rng).integers(0, 2))
            return outcome, 0.5
        result = self.components[self.where.pop(v)].measure(v, k, rng, outcome)
        return result

    def discard(self, v: int) -> None:
        if v in self.classical:
            del self.classical[v]
            return
        comp = self.components[self.where[v]]
        p0 = comp.probability(v, 0)
        comp.measure(v, 0, outcome=0 if p0 >= 0.5 else 1)
        del self.where[v]

    def state_of(self, vertices: Sequence[int]) -> QuantumState:
        """Joint state of ``vertices``; they must not share a component with other qubits."""
        vertices = list(vertices)
        wanted = set(vertices)
        state = QuantumState([], np.ones(()), self.cap)
        used = set()
        for v in vertices:
            if v in self.classical:
                state = state.tensor_with(QuantumState([v], basis_state(self.classical[v]), self.cap))
                continue
            idx = self.where[v]
            if idx in used:
                continue
            comp = self.components[idx]
            if not set(comp.labels) <= wanted:
                raise InputError(f"qubit {v} is entangled with qubits outside the request")
            used.add(idx)
            state = state.tensor_with(comp)
        return QuantumState(vertices, np.transpose(state.tensor, [state.labels.index(v) for v in vertices]), self.cap)


def make_register(preparations: Mapping[int, np.ndarray], backend: str = "components", cap: int = DEFAULT_CAP):
    if backend == "components":
        return ComponentRegister(preparations, cap)
    if backend == "dense":
        return DenseRegister(preparations, cap)
    raise InputError(f"unknown backend {backend!r}")


@dataclass
class ComponentSimulation:
    outcomes: dict
    reported: dict
    components: list
    resolved: frozenset
    register: Any


def simulate_components(
    graph: Graph,
    preparations: Mapping[int, np.ndarray],
    order: Sequence[int],
    angle: Callable[[int, Mapping[int, int]], int],
    attack: Mapping[int, str] | None = None,
    seed=None,
    cap: int = DEFAULT_CAP,
    backend: str = "components",
) -> ComponentSimulation:
    """Entangle, apply a Pauli attack and measure ``order`` adaptively.

    ``angle(v, reported)`` gives the measurement angle of ``v`` from the
    outcomes reported so far.  Attack entries on measured vertices act in the
    measurement frame (X and Y flip the reported bit, Z has no effect); on
    unmeasured vertices they act on the state that remains.
    """
    rng = _rng(seed)
    attack = {v: str(p) for v, p in (attack or {}).items()}
    reg = make_register(preparations, backend, cap)
    resolved = frozenset(getattr(reg, "classical", {}))
    reg.entangle(graph.edges)
    components = reg.component_sets() if backend == "components" else [frozenset(reg.qubits)]
    measured = set(order)
    for v, p in attack.items():
        if v not in measured:
            reg.apply_pauli(v, p)
    outcomes, reported = {}, {}
    for v in order:
        b, _ = reg.measure(v, angle(v, reported), rng)
        outcomes[v] = b
        reported[v] = b ^ (attack.get(v) in ("X", "Y"))
    return ComponentSimulation(outcomes, reported, components, resolved, reg)

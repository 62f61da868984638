"""Verifier and prover state machines for trap-based blind verification.

A run takes a measurement pattern on ``dot(G)``, hides it in the green copy
of a trap-coloured resource (``DT(G)`` or three dotted copies), and plays the
rounds: the verifier sends an angle, the prover measures and reports a bit.
Traps and dummies carry angle 0 and no dependencies; a run accepts iff every
trap, measured or returned, gives back its ``r`` bit.

Seeding: a run seed feeds ``np.random.SeedSequence(seed).spawn(2)``; the
first child draws the secrets, the second drives the prover's outcomes.
Drivers spawn one child per sub-run from their root seed.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .adversary import AttackSpec, PauliMixture, output_locations
from .coloring import (
    CopyRoles,
    RolePartition,
    TrapColouring,
    role_partition,
    sample_copy_roles,
    sample_trap_colouring,
)
from .errors import InputError, SequencingError
from .graph_core import (
    DottedTripleGraph,
    Graph,
    LocatedGraph,
    Location,
    ThreeDottedCopies,
    dot,
    dotted_triple,
    three_dotted_copies,
)
from .mbqc import (
    DEFAULT_CAP,
    MeasurementPattern,
    QuantumState,
    basis_state,
    make_register,
    plus_state,
)

__all__ = [
    "SecretParameters",
    "LiftedPattern",
    "sample_secrets",
    "lift_pattern",
    "prepare_initial_qubits",
    "compute_delta",
    "Verifier",
    "Prover",
    "HonestProver",
    "PauliAttackProver",
    "MixedPauliProver",
    "Round",
    "Transcript",
    "run_protocol",
    "Branch",
    "exact_run_distribution",
    "Job",
    "DriverResult",
    "repetitions_for",
    "combine_runs",
    "repetition_driver",
    "three_copies_driver",
    "split_seed",
    "SINGLE_RUN_BOUND",
    "THREE_COPIES_BOUND",
]

SINGLE_RUN_BOUND = Fraction(8, 9)
THREE_COPIES_BOUND = Fraction(2, 3)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def split_seed(seed, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds ``0..n-1`` of a root seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)


@dataclass(frozen=True, eq=False)
class SecretParameters:
    """Everything the verifier keeps private for one run.

    ``order`` is the measurement order of the prover's qubits.  It follows
    the pattern order across locations with a uniform shuffle inside each
    set and is announced to the prover before the first round.
    """

    colouring: TrapColouring | CopyRoles
    theta: Mapping[int, int]
    r: Mapping[int, int]
    d: Mapping[int, int]
    x: Mapping[int, int]
    order: tuple[int, ...]

    def theta_eff(self, v: int) -> int:
        """Preparation angle including the input-padding sign flip."""
        return (-self.theta[v] if self.x.get(v, 0) else self.theta[v]) % 8


@dataclass(frozen=True, eq=False)
class LiftedPattern:
    """A ``dot(G)`` pattern placed on the green copy of a coloured resource."""

    resource: LocatedGraph
    partition: RolePartition
    angles: dict[int, int]
    xdeps: dict[int, frozenset]
    zdeps: dict[int, frozenset]
    output_phase: dict[int, int]
    green_at: dict[Location, int]
    location_order: tuple[Location, ...]
    outputs: tuple[int, ...]
    inputs: tuple[int, ...]
    classical_outputs: tuple[int, ...]
    returned: frozenset[int]

    @cached_property
    def measured(self) -> frozenset[int]:
        return frozenset(self.resource.vertices) - self.returned

    @cached_property
    def output_traps(self) -> tuple[int, ...]:
        return tuple(sorted(self.returned & self.partition.traps))

    @cached_property
    def output_dummies(self) -> tuple[int, ...]:
        return tuple(sorted(self.returned & self.partition.dummies))

    @cached_property
    def measured_traps(self) -> frozenset[int]:
        return self.partition.traps & self.measured


def _check_host(resource: LocatedGraph, pattern: MeasurementPattern) -> None:
    if pattern.graph != dot(resource.base).graph:
        raise InputError("pattern host must be dot(G) for the resource's base graph G")


def lift_pattern(resource: LocatedGraph, colouring, pattern: MeasurementPattern) -> LiftedPattern:
    _check_host(resource, pattern)
    d = dot(resource.base)
    part = role_partition(resource, colouring)
    green_at = {}
    for loc, vs in resource.sets.items():
        greens = [v for v in vs if v in part.computation]
        if len(greens) != 1:
            raise InputError(f"{loc.label(resource.base)} has {len(greens)} green vertices")
        green_at[loc] = greens[0]
    lift = {u: green_at[d.location_of[u]] for u in d.vertices}
    angles = {v: 0 for v in resource.vertices}
    xdeps = {v: frozenset() for v in resource.vertices}
    zdeps = {v: frozenset() for v in resource.vertices}
    for u in d.vertices:
        g = lift[u]
        if u in pattern.angles:
            angles[g] = pattern.angles[u]
        xdeps[g] = frozenset(lift[j] for j in pattern.xdeps[u])
        zdeps[g] = frozenset(lift[j] for j in pattern.zdeps[u])
    out_locs = output_locations(pattern, resource)
    returned = frozenset(v for loc in out_locs for v in resource.sets[loc])
    return LiftedPattern(
        resource=resource,
        partition=part,
        angles=angles,
        xdeps=xdeps,
        zdeps=zdeps,
        output_phase={lift[o]: pattern.output_phase[o] for o in pattern.outputs},
        green_at=green_at,
        location_order=tuple(d.location_of[u] for u in pattern.order),
        outputs=tuple(lift[o] for o in pattern.outputs),
        inputs=tuple(lift[i] for i in pattern.inputs),
        classical_outputs=tuple(lift[c] for c in pattern.classical_outputs),
        returned=returned,
    )


def sample_secrets(
    resource: LocatedGraph, pattern: MeasurementPattern, seed=None, colouring=None
) -> SecretParameters:
    """Draw colouring (unless given), angles, bits and the measurement order."""
    rng = _rng(seed)
    if colouring is None:
        if isinstance(resource, DottedTripleGraph):
            colouring = sample_trap_colouring(resource, rng)
        elif isinstance(resource, ThreeDottedCopies):
            colouring = sample_copy_roles(resource, rng)
        else:
            raise InputError(f"no colouring sampler for {type(resource).__name__}")
    lifted = lift_pattern(resource, colouring, pattern)
    n = len(resource.vertices)
    theta = rng.integers(0, 8, size=n)
    r = rng.integers(0, 2, size=n)
    d = rng.integers(0, 2, size=n)
    x = rng.integers(0, 2, size=n)
    order: list[int] = []
    for loc in lifted.location_order:
        order.extend(int(v) for v in rng.permutation(resource.sets[loc]))
    return SecretParameters(
        colouring=colouring,
        theta={v: int(theta[v]) for v in resource.vertices},
        r={v: int(r[v]) for v in resource.vertices},
        d={v: int(d[v]) for v in sorted(lifted.partition.dummies)},
        x={v: int(x[v]) for v in lifted.inputs},
        order=tuple(order),
    )


def prepare_initial_qubits(
    resource: LocatedGraph, secrets: SecretParameters, pattern: MeasurementPattern | None = None
) -> dict[int, np.ndarray]:
    """Single-qubit states sent to the prover.

    Dummies are ``|d>``.  Every other qubit is ``|+_theta>`` pre-rotated by
    ``pi`` per dummy neighbour with ``d = 1``, so that entangling with the
    dummies leaves exactly ``|+_theta>``.  Padded inputs use ``-theta``.
    """
    part = role_partition(resource, secrets.colouring)
    if pattern is not None:
        lifted = lift_pattern(resource, secrets.colouring, pattern)
        unknown = set(secrets.x) - set(lifted.inputs)
        if unknown:
            raise InputError(f"input padding given for non-input vertices {sorted(unknown)!r}")
    missing_d = part.dummies - set(secrets.d)
    if missing_d:
        raise InputError(f"no dummy bit for vertices {sorted(missing_d)!r}")
    out = {}
    for v in resource.vertices:
        if v in part.dummies:
            out[v] = basis_state(secrets.d[v])
            continue
        if v not in secrets.theta:
            raise InputError(f"no angle secret for vertex {v}")
        flips = sum(secrets.d[j] for j in resource.neighbours(v) if j in part.dummies)
        out[v] = plus_state(secrets.theta_eff(v) + 4 * flips)
    return out


def compute_delta(
    vertex: int,
    phi: int,
    theta: int,
    r: int,
    s: Mapping[int, int],
    xdeps: Sequence[int] = (),
    zdeps: Sequence[int] = (),
) -> int:
    """``(-1)^{sX} phi + theta + pi (r XOR sZ)`` in units of ``pi/4``."""
    sx = sz = 0
    for j in xdeps:
        if j not in s:
            raise SequencingError(f"angle of {vertex} needs the outcome of {j}")
        sx ^= s[j]
    for j in zdeps:
        if j not in s:
            raise SequencingError(f"angle of {vertex} needs the outcome of {j}")
        sz ^= s[j]
    return ((-1) ** sx * phi + theta + 4 * (r ^ sz)) % 8


class Verifier:
    """Holds the secrets and the corrected outcome record ``s``."""

    def __init__(self, resource: LocatedGraph, pattern: MeasurementPattern, secrets: SecretParameters):
        self.resource = resource
        self.pattern = pattern
        self.secrets = secrets
        self.lifted = lift_pattern(resource, secrets.colouring, pattern)
        self.s: dict[int, int] = {}
        self.trap_failures: list[int] = []

    def copy(self) -> Verifier:
        new = object.__new__(Verifier)
        new.__dict__.update(self.__dict__)
        new.s = dict(self.s)
        new.trap_failures = list(self.trap_failures)
        return new

    @property
    def order(self) -> tuple[int, ...]:
        return self.secrets.order

    def preparations(self) -> dict[int, np.ndarray]:
        return prepare_initial_qubits(self.resource, self.secrets)

    def angle(self, v: int) -> int:
        lp, sec = self.lifted, self.secrets
        return compute_delta(v, lp.angles[v], sec.theta_eff(v), sec.r[v], self.s, lp.xdeps[v], lp.zdeps[v])

    def record(self, v: int, b: int) -> None:
        if v in self.s:
            raise SequencingError(f"vertex {v} already measured")
        self.s[v] = b ^ self.secrets.r[v]
        if v in self.lifted.measured_traps and b != self.secrets.r[v]:
            self.trap_failures.append(v)

    def output_trap_angle(self, t: int) -> int:
        return (self.secrets.theta[t] + 4 * self.secrets.r[t]) % 8

    def decode(self, state: QuantumState) -> QuantumState:
        """Undo the preparation rotation, the output phase and the byproducts."""
        lp = self.lifted
        for o in lp.outputs:
            state.phase(o, -self.secrets.theta_eff(o) + lp.output_phase[o])
            if _parity(self.s, lp.xdeps[o]):
                state.apply_pauli(o, "X")
            if _parity(self.s, lp.zdeps[o]):
                state.apply_pauli(o, "Z")
        return state

    def classical_output(self) -> tuple[int, ...]:
        return tuple(self.s[v] for v in self.lifted.classical_outputs)


def _parity(s: Mapping[int, int], deps) -> int:
    out = 0
    for j in deps:
        out ^= s[j]
    return out


class Prover(ABC):
    """Untrusted party: entangles what it receives and measures on request."""

    def __init__(self, backend: str = "components", cap: int = DEFAULT_CAP):
        self.backend = backend
        self.cap = cap
        self.register = None
        self.rng: np.random.Generator | None = None

    def receive(self, qubits: Mapping[int, np.ndarray], graph: Graph, order: Sequence[int], rng=None) -> None:
        """Take the prepared qubits, the public graph and the announced order; entangle."""
        self.rng = _rng(rng)
        self.order = tuple(order)
        self.register = make_register(qubits, self.backend, self.cap)
        self.register.entangle(graph.edges)
        self.after_entangling()

    def after_entangling(self) -> None:
        pass

    @abstractmethod
    def measure(self, v: int, delta: int) -> int: ...

    def release(self):
        """Hand back the qubits that were never measured."""
        return self.register


class HonestProver(Prover):
    def measure(self, v: int, delta: int) -> int:
        b, _ = self.register.measure(v, delta, self.rng)
        return b


class PauliAttackProver(Prover):
    """Applies a fixed Pauli string right after entangling.

    On qubits it later measures, the Pauli is kept in its measurement frame:
    X and Y flip the reported bit, Z does nothing.  On qubits it returns,
    the Pauli acts on the state.
    """

    def __init__(self, attack: AttackSpec, backend: str = "components", cap: int = DEFAULT_CAP):
        super().__init__(backend, cap)
        self.attack = attack

    def after_entangling(self) -> None:
        measured = set(self.order)
        for v, p in self.attack.ops.items():
            if v not in measured:
                self.register.apply_pauli(v, p.value)

    def measure(self, v: int, delta: int) -> int:
        b, _ = self.register.measure(v, delta, self.rng)
        return b ^ int(self.attack[v].flips_outcome)


class MixedPauliProver(PauliAttackProver):
    """Draws one Pauli string per run from a weighted mixture."""

    def __init__(self, mixture: PauliMixture, backend: str = "components", cap: int = DEFAULT_CAP):
        super().__init__(AttackSpec(), backend, cap)
        self.mixture = mixture

    def after_entangling(self) -> None:
        self.attack = self.mixture.sample(self.rng)
        super().after_entangling()


@dataclass(frozen=True)
class Round:
    vertex: int
    delta: int
    b: int


@dataclass
class Transcript:
    rounds: list[Round]
    accept: bool
    output: QuantumState | None
    classical_output: tuple[int, ...]
    trap_failures: tuple[int, ...] = ()

    def output_json(self) -> list:
        if self.output is None:
            return list(self.classical_output)
        vec = self.output.vector()
        k = int(np.argmax(np.abs(vec) > 1e-9))
        vec = vec * np.exp(-1j * np.angle(vec[k]))
        return [[round(float(a.real), 12) + 0.0, round(float(a.imag), 12) + 0.0] for a in vec]

    def records(self) -> list[dict]:
        out: list[dict] = [{"v": r.vertex, "delta": r.delta, "b": r.b} for r in self.rounds]
        out.append({"accept": self.accept, "output": self.output_json()})
        return out

    def to_jsonl(self, extra: Mapping | None = None) -> str:
        lines = []
        for rec in self.records():
            if extra:
                rec = {**extra, **rec}
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"


def run_protocol(
    resource: LocatedGraph,
    pattern: MeasurementPattern,
    secrets: SecretParameters,
    prover: Prover | None = None,
    seed=None,
) -> Transcript:
    """Play one complete run and return its transcript."""
    rng = _rng(seed)
    prover = prover or HonestProver()
    verifier = Verifier(resource, pattern, secrets)
    prover.receive(verifier.preparations(), resource.graph, verifier.order, rng)
    rounds = []
    for v in verifier.order:
        delta = verifier.angle(v)
        b = int(prover.measure(v, delta))
        verifier.record(v, b)
        rounds.append(Round(v, delta, b))
    register = prover.release()
    failures = list(verifier.trap_failures)
    lp = verifier.lifted
    for t in lp.output_traps:
        b, _ = register.measure(t, verifier.output_trap_angle(t), rng)
        if b != secrets.r[t]:
            failures.append(t)
    for v in lp.output_dummies:
        register.discard(v)
    output = verifier.decode(register.state_of(lp.outputs)) if lp.outputs else None
    return Transcript(rounds, not failures, output, verifier.classical_output(), tuple(failures))


@dataclass
class Branch:
    """One outcome branch of an exactly enumerated run."""

    probability: float
    reported: tuple[tuple[int, int], ...]
    accept_probability: float
    output: QuantumState | None
    classical_output: tuple[int, ...]


def exact_run_distribution(
    resource: LocatedGraph,
    pattern: MeasurementPattern,
    secrets: SecretParameters,
    attack: AttackSpec | None = None,
    backend: str = "components",
    cap: int = DEFAULT_CAP,
) -> list[Branch]:
    """All outcome branches of a run with their exact probabilities.

    Output traps are not branched: the branch carries the probability that
    all of them return their ``r`` bit, and the output state conditioned on
    that event.
    """
    attack = attack or AttackSpec()
    verifier = Verifier(resource, pattern, secrets)
    prover = PauliAttackProver(attack, backend, cap)
    prover.receive(verifier.preparations(), resource.graph, verifier.order, np.random.default_rng(0))
    order = verifier.order
    out: list[Branch] = []

    def leaf(ver: Verifier, reg, prob: float, reported: tuple) -> None:
        lp = ver.lifted
        ok = 1.0 if not ver.trap_failures else 0.0
        output = None
        if ok:
            for t in lp.output_traps:
                k = ver.output_trap_angle(t)
                p0 = reg.probability(t, k)
                p = p0 if secrets.r[t] == 0 else 1 - p0
                if p < 1e-14:
                    ok = 0.0
                    break
                ok *= p
                reg.measure(t, k, outcome=secrets.r[t])
        if ok and lp.outputs:
            for v in lp.output_dummies:
                reg.discard(v)
            output = ver.decode(reg.state_of(lp.outputs))
        out.append(Branch(prob, reported, ok, output, ver.classical_output()))

    def walk(i: int, ver: Verifier, reg, prob: float, reported: tuple) -> None:
        if i == len(order):
            leaf(ver, reg, prob, reported)
            return
        v = order[i]
        delta = ver.angle(v)
        p0 = reg.probability(v, delta)
        flip = int(attack[v].flips_outcome)
        live = [(o, p) for o, p in ((0, p0), (1, 1 - p0)) if p > 1e-14]
        for j, (o, p) in enumerate(live):
            reg_j = reg if j == len(live) - 1 else reg.copy()
            ver_j = ver if j == len(live) - 1 else ver.copy()
            reg_j.measure(v, delta, outcome=o)
            b = o ^ flip
            ver_j.record(v, b)
            walk(i + 1, ver_j, reg_j, prob * p, reported + ((v, b),))

    walk(0, verifier, prover.register, 1.0, ())
    return out


# ---------------------------------------------------------------------------
# amplification drivers


@dataclass(frozen=True, eq=False)
class Job:
    """A classical-output computation to be run repeatedly.

    ``prover_for(i)`` builds the prover of sub-run ``i`` (honest by default),
    which lets tests inject a deviating prover into selected sub-runs.
    """

    base: Graph
    pattern: MeasurementPattern
    prover_for: Callable[[int], Prover] | None = None

    def check_classical(self) -> None:
        if self.pattern.outputs or not self.pattern.classical_outputs:
            raise InputError("amplification needs a pattern with classical output only")


@dataclass
class DriverResult:
    accept: bool
    output: tuple[int, ...] | None
    runs: list[Transcript] = field(default_factory=list)
    repetitions: int = 0
    variant: str = "dtg"


def repetitions_for(epsilon: float, per_run: Fraction = SINGLE_RUN_BOUND) -> int:
    """Smallest ``d`` with ``per_run ** d <= epsilon``."""
    if not 0 < epsilon < 1:
        raise InputError("epsilon must lie strictly between 0 and 1")
    d = max(1, math.ceil(math.log(epsilon) / math.log(float(per_run))))
    while d > 1 and float(per_run) ** (d - 1) <= epsilon:
        d -= 1
    while float(per_run) ** d > epsilon:
        d += 1
    return d


def _drive(job: Job, resource: LocatedGraph, d: int, seed, variant: str) -> DriverResult:
    job.check_classical()
    runs = []
    for i, child in enumerate(split_seed(seed, d)):
        secret_seed, prover_seed = child.spawn(2)
        secrets = sample_secrets(resource, job.pattern, np.random.default_rng(secret_seed))
        prover = job.prover_for(i) if job.prover_for else HonestProver()
        runs.append(run_protocol(resource, job.pattern, secrets, prover, np.random.default_rng(prover_seed)))
    accept, output = combine_runs(runs)
    return DriverResult(accept, output, runs, d, variant)


def combine_runs(runs: Sequence[Transcript]) -> tuple[bool, tuple[int, ...] | None]:
    """Accept iff every run accepted and all classical outputs agree."""
    outputs = {t.classical_output for t in runs}
    if runs and all(t.accept for t in runs) and len(outputs) == 1:
        return True, runs[0].classical_output
    return False, None


def repetition_driver(job: Job, epsilon: float, seed=None) -> DriverResult:
    """Independent runs on ``DT(G)``; accept iff all accept with one common output."""
    return _drive(job, dotted_triple(job.base), repetitions_for(epsilon, SINGLE_RUN_BOUND), seed, "dtg")


def three_copies_driver(job: Job, epsilon: float, seed=None) -> DriverResult:
    """Same rule on three disjoint dotted copies with uniformly assigned roles."""
    return _drive(job, three_dotted_copies(job.base), repetitions_for(epsilon, THREE_COPIES_BOUND), seed, "three-copies")


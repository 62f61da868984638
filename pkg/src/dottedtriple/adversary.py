"""Pauli-string deviations, their classification and their location support."""

from __future__ import annotations

import enum
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .graph_core import LocatedGraph, Location, dot

__all__ = [
    "PauliOp",
    "AttackSpec",
    "AttackClass",
    "PauliMixture",
    "classify",
    "output_locations",
    "returned_vertices",
    "support_locations",
    "ft_required_support",
    "load_attack",
]


class PauliOp(str, enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    def __mul__(self, other: PauliOp) -> PauliOp:
        """Product up to phase (the Klein four-group on bit pairs)."""
        x = _BITS[self][0] ^ _BITS[PauliOp(other)][0]
        z = _BITS[self][1] ^ _BITS[PauliOp(other)][1]
        return _FROM_BITS[(x, z)]

    @property
    def flips_outcome(self) -> bool:
        """Whether this Pauli anticommutes with every equatorial measurement."""
        return _BITS[self][0] == 1


_BITS = {PauliOp.I: (0, 0), PauliOp.X: (1, 0), PauliOp.Y: (1, 1), PauliOp.Z: (0, 1)}
_FROM_BITS = {bits: op for op, bits in _BITS.items()}


@dataclass(frozen=True)
class AttackSpec:
    """A Pauli string on resource vertices; vertices not listed carry ``I``."""

    ops: Mapping[int, PauliOp] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        clean = {}
        for v, p in dict(self.ops).items():
            try:
                op = PauliOp(p)
            except ValueError:
                raise InputError(f"unknown Pauli {p!r} on vertex {v!r}") from None
            if op is not PauliOp.I:
                clean[v] = op
        object.__setattr__(self, "ops", dict(sorted(clean.items())))

    def __getitem__(self, v: int) -> PauliOp:
        return self.ops.get(v, PauliOp.I)

    def __hash__(self) -> int:
        return hash(tuple(self.ops.items()))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.ops)

    @classmethod
    def single(cls, v: int, p: str | PauliOp) -> AttackSpec:
        return cls({v: PauliOp(p)}, name=f"{PauliOp(p).value}{v}")

    def label(self) -> str:
        return self.name or ("I" if not self.ops else "".join(f"{p.value}{v}" for v, p in self.ops.items()))

    def check(self, resource: LocatedGraph) -> None:
        bad = [v for v in self.ops if v not in resource.graph]
        if bad:
            raise InputError(f"attack names unknown vertices {bad!r}")

    def to_json(self) -> dict[str, str]:
        return {str(v): p.value for v, p in self.ops.items()}

    @classmethod
    def from_json(cls, data: Mapping, name: str = "") -> AttackSpec:
        if not isinstance(data, Mapping):
            raise InputError("attack must be a JSON object {vertex: Pauli}")
        ops = {}
        for k, p in data.items():
            try:
                ops[int(k)] = p
            except ValueError:
                raise InputError(f"attack vertex {k!r} is not an integer id") from None
        return cls(ops, name)


def load_attack(path: str | Path) -> AttackSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return AttackSpec.from_json(data, name=Path(path).stem)


@dataclass(frozen=True)
class AttackClass:
    """Positions of each Pauli type, split by measured and returned qubits."""

    identity: frozenset
    x: frozenset
    y: frozenset
    z: frozenset
    z_output: frozenset

    @property
    def in_e(self) -> bool:
        return bool(self.x or self.y or self.z_output)

    @property
    def harmless(self) -> bool:
        return not self.in_e


def output_locations(pattern, resource: LocatedGraph) -> frozenset[Location]:
    """Base-locations of a dotted-graph pattern's quantum outputs.

    ``pattern`` may also be given directly as an iterable of locations.
    """
    if hasattr(pattern, "outputs"):
        d = dot(resource.base)
        if pattern.graph != d.graph:
            raise InputError("pattern host is not the dotted base graph of this resource")
        return frozenset(d.location_of[o] for o in pattern.outputs)
    return frozenset(pattern)


def returned_vertices(resource: LocatedGraph, pattern) -> frozenset[int]:
    """Resource vertices at quantum output locations (never measured by the prover)."""
    out: set[int] = set()
    for loc in output_locations(pattern, resource):
        out.update(resource.sets[loc])
    return frozenset(out)


def classify(attack: AttackSpec, pattern, resource: LocatedGraph) -> AttackClass:
    """Sort attack positions into I / X / Y / Z sets.

    The attack is in the contributing class iff it has an X or Y anywhere or
    a Z on a returned output qubit.  Everything else commutes with every
    measurement the prover makes and is harmless for any secrets.
    """
    attack.check(resource)
    returned = returned_vertices(resource, pattern)
    by: dict[PauliOp, set] = {op: set() for op in PauliOp}
    for v in resource.vertices:
        by[attack[v]].add(v)
    return AttackClass(
        frozenset(by[PauliOp.I]),
        frozenset(by[PauliOp.X]),
        frozenset(by[PauliOp.Y]),
        frozenset(by[PauliOp.Z]),
        frozenset(by[PauliOp.Z] & returned),
    )


def support_locations(attack: AttackSpec, resource: LocatedGraph) -> frozenset[Location]:
    attack.check(resource)
    return frozenset(resource.location_of[v] for v in attack.ops)


def ft_required_support(delta: int) -> int:
    """Fewest attacked locations that can defeat a code correcting ``delta`` errors."""
    if delta < 1:
        raise InputError("error tolerance must be at least 1")
    return math.ceil(delta / 2)


@dataclass(frozen=True)
class PauliMixture:
    """Probability-weighted list of Pauli strings, sampled once per run."""

    entries: tuple[tuple[float, AttackSpec], ...]

    def __post_init__(self) -> None:
        weights = [w for w, _ in self.entries]
        if not weights or min(weights) < 0 or not math.isclose(sum(weights), 1.0, abs_tol=1e-12):
            raise InputError("mixture weights must be non-negative and sum to 1")

    @classmethod
    def of(cls, attacks: Sequence[AttackSpec], weights: Sequence[float] | None = None) -> PauliMixture:
        weights = weights or [1 / len(attacks)] * len(attacks)
        return cls(tuple(zip(weights, attacks)))

    def sample(self, rng: np.random.Generator) -> AttackSpec:
        idx = rng.choice(len(self.entries), p=[w for w, _ in self.entries])
        return self.entries[int(idx)][1]

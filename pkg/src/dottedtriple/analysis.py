"""Exact and sampled evasion probabilities and the closed-form bounds.

Evasion is the probability that a fixed Pauli attack passes every trap.  It
is computed exactly by enumerating the colourings that matter (the primary
sets touched by the attack), with each trap's miss factor averaged over its
hidden angle analytically.  All exact quantities are :class:`Fraction`.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .adversary import AttackSpec, PauliOp, classify, returned_vertices
from .coloring import PERMUTATIONS, Colour, greedy_icl_subset, is_icl
from .errors import InputError, ResourceLimitError
from .graph_core import DottedTripleGraph, LocatedGraph, Location, ThreeDottedCopies
from .mbqc import MeasurementPattern
from .protocol import PauliAttackProver, run_protocol, sample_secrets, split_seed

__all__ = [
    "SET_KINDS",
    "trap_miss_factor",
    "g_factor",
    "exact_evasion",
    "effective_support",
    "MonteCarloEstimate",
    "monte_carlo_evasion",
    "BoundSpec",
    "bound",
    "ICLReport",
    "icl_product_check",
    "EvasionReport",
    "evasion_report",
    "reports_to_csv",
    "reports_to_json",
    "CSV_HEADER",
    "PERM_CODES",
]

SET_KINDS = ("measured-primary", "measured-added", "output-primary", "output-added")
ENUMERATION_GUARD = 8

# cos(k pi/2) for k = 0..3; cos^2(k pi/4) = (1 + cos(k pi/2)) / 2 exactly
_COS_DOUBLE = (1, 0, -1, 0)


def _output_miss(p: PauliOp) -> Fraction:
    """Mean over the 8 hidden angles of ``<+_t|p|+_t>^2`` (the ``r`` flip only changes sign)."""
    if p is PauliOp.I:
        return Fraction(1)
    if p is PauliOp.Z:
        return Fraction(0)
    sign = 1 if p is PauliOp.X else -1
    return sum((Fraction(1 + sign * _COS_DOUBLE[k % 4], 2) for k in range(8)), Fraction(0)) / 8


def trap_miss_factor(pauli: PauliOp | str, measured: bool) -> Fraction:
    """Probability that a trap carrying ``pauli`` still reports its expected bit."""
    p = PauliOp(pauli)
    if measured:
        return Fraction(0) if p.flips_outcome else Fraction(1)
    return _output_miss(p)


def g_factor(pauli: PauliOp | str, set_kind: str) -> Fraction:
    """Evasion of a single Pauli on one qubit of a set, averaged over colourings."""
    p = PauliOp(pauli)
    if p is PauliOp.I:
        raise InputError("the identity has no evasion factor")
    if set_kind not in SET_KINDS:
        raise InputError(f"unknown set kind {set_kind!r}; expected one of {SET_KINDS}")
    where, kind = set_kind.split("-")
    trap_mass = Fraction(1, 3) if kind == "primary" else Fraction(1, 9)
    return 1 - trap_mass + trap_mass * trap_miss_factor(p, where == "measured")


# colour codes per permutation: PERM_CODES[perm, copy] with W=0, B=1, G=2
_CODE = {Colour.WHITE: 0, Colour.BLACK: 1, Colour.GREEN: 2}
PERM_CODES = np.array([[_CODE[c] for c in perm] for perm in PERMUTATIONS], dtype=np.int8)


def _trap_masks(resource: LocatedGraph, vertices: Sequence[int], guard: int) -> np.ndarray:
    """Boolean ``(colourings, vertices)`` table: is the vertex a trap?

    Rows enumerate, uniformly, every colouring of the primary sets that can
    influence the listed vertices.
    """
    if isinstance(resource, ThreeDottedCopies):
        colours = PERM_CODES[:, [resource.copy_index[v] - 1 for v in vertices]]
        primary = np.array([resource.is_primary(v) for v in vertices])
        return np.where(primary, colours == 0, colours == 1)
    if not isinstance(resource, DottedTripleGraph):
        raise InputError(f"no colouring model for {type(resource).__name__}")
    if len(resource.base) > guard:
        raise ResourceLimitError(f"exact enumeration limited to {guard} base vertices")
    # copy indices (0..2) of each primary touched, keyed by base vertex
    touched: dict = {}
    plan = []
    for v in vertices:
        loc = resource.location_of[v]
        if loc.is_primary:
            plan.append(((loc.key, resource.copy_index[v] - 1),))
        else:
            p, q = resource.bridged(v)
            plan.append(tuple((resource.location_of[x].key, resource.copy_index[x] - 1) for x in (p, q)))
        for key, _ in plan[-1]:
            touched.setdefault(key, len(touched))
    combos = np.array(list(itertools.product(range(6), repeat=len(touched))), dtype=np.int8).reshape(-1, len(touched))
    cols = []
    for items in plan:
        cs = [PERM_CODES[combos[:, touched[key]], c] for key, c in items]
        if len(cs) == 1:
            cols.append(cs[0] == 0)
        else:
            cols.append((cs[0] == 1) & (cs[1] == 1))
    if not cols:
        return np.ones((1, 0), dtype=bool)
    return np.stack(cols, axis=1)


def exact_evasion(
    resource: LocatedGraph,
    pattern: MeasurementPattern,
    attack: AttackSpec,
    guard: int = ENUMERATION_GUARD,
) -> Fraction:
    """Exact probability that ``attack`` passes every trap.

    Averages, over all colourings, the product of the miss factors of the
    attacked qubits that are traps.  Colourings of untouched primary sets
    factor out, so only the touched ones are enumerated.
    """
    attack.check(resource)
    returned = returned_vertices(resource, pattern)
    verts = list(attack.ops)
    if not verts:
        return Fraction(1)
    masks = _trap_masks(resource, verts, guard)
    # miss factors are multiples of 1/2: track numerators over 2 per vertex
    nums = np.array([int(trap_miss_factor(attack[v], v not in returned) * 2) for v in verts], dtype=np.int64)
    per = np.where(masks, nums[None, :], 2).astype(object)
    total = sum(int(x) for x in np.prod(per, axis=1))
    return Fraction(total, masks.shape[0] * 2 ** len(verts))


def effective_support(attack: AttackSpec, pattern, resource: LocatedGraph) -> frozenset[Location]:
    """Locations holding an X or Y, or a Z on a returned qubit."""
    cls = classify(attack, pattern, resource)
    return frozenset(resource.location_of[v] for v in cls.x | cls.y | cls.z_output)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    trials: int
    accepts: int


def _mc_chunk(args) -> list[bool]:
    resource, pattern, attack, seeds, backend = args
    out = []
    for child in seeds:
        secret_seed, prover_seed = child.spawn(2)
        secrets = sample_secrets(resource, pattern, np.random.default_rng(secret_seed))
        prover = PauliAttackProver(attack, backend)
        out.append(run_protocol(resource, pattern, secrets, prover, np.random.default_rng(prover_seed)).accept)
    return out


def monte_carlo_evasion(
    resource: LocatedGraph,
    pattern: MeasurementPattern,
    attack: AttackSpec,
    trials: int,
    seed=None,
    jobs: int = 1,
    backend: str = "components",
) -> MonteCarloEstimate:
    """Acceptance frequency over ``trials`` full runs with fresh secrets.

    Trial ``i`` uses child ``i`` of the root seed, so the result does not
    depend on ``jobs``.
    """
    if trials < 1:
        raise InputError("need at least one trial")
    seeds = split_seed(seed, trials)
    if jobs <= 1:
        flags = _mc_chunk((resource, pattern, attack, seeds, backend))
    else:
        size = math.ceil(trials / jobs)
        chunks = [(resource, pattern, attack, seeds[i : i + size], backend) for i in range(0, trials, size)]
        with ProcessPoolExecutor(jobs) as pool:
            flags = [f for part in pool.map(_mc_chunk, chunks) for f in part]
    k = sum(flags)
    p = k / trials
    return MonteCarloEstimate(p, math.sqrt(p * (1 - p) / trials), trials, k)


@dataclass(frozen=True)
class BoundSpec:
    """``variant`` is one of single-run, repetition, three-copies, fault-tolerant."""

    variant: str = "single-run"
    d: int = 1
    delta: int = 1
    c: int = 1

    def __post_init__(self) -> None:
        if self.variant not in ("single-run", "repetition", "three-copies", "fault-tolerant"):
            raise InputError(f"unknown bound variant {self.variant!r}")
        if self.d < 1 or self.delta < 1 or self.c < 1:
            raise InputError("d, delta and c must all be at least 1")


def bound(spec: BoundSpec) -> Fraction:
    single = Fraction(8, 9)
    if spec.variant == "single-run":
        return single
    if spec.variant == "repetition":
        return single**spec.d
    if spec.variant == "three-copies":
        return Fraction(2, 3) ** spec.d
    return single ** math.ceil(Fraction(spec.delta, 2 * (2 * spec.c + 1)))


@dataclass(frozen=True)
class ICLReport:
    support: frozenset
    icl_subset: tuple
    exact: Fraction
    product_bound: Fraction
    support_is_icl: bool
    location_factors: dict = field(default_factory=dict)

    @property
    def within_bound(self) -> bool:
        return self.exact <= self.product_bound

    @property
    def factorises(self) -> bool | None:
        """Exact equality with the product of per-location factors (ICL supports only)."""
        if not self.support_is_icl:
            return None
        prod = Fraction(1)
        for f in self.location_factors.values():
            prod *= f
        return prod == self.exact


def icl_product_check(
    resource: LocatedGraph, attack: AttackSpec, pattern: MeasurementPattern, guard: int = ENUMERATION_GUARD
) -> ICLReport:
    """Compare exact evasion with ``(8/9)^|S'|`` for a greedy ICL subset ``S'`` of the support."""
    support = effective_support(attack, pattern, resource)
    base = resource.base
    sub = tuple(greedy_icl_subset(support, base))
    exact = exact_evasion(resource, pattern, attack, guard)
    factors = {}
    icl = is_icl(support, base)
    if icl:
        for loc in support:
            part = AttackSpec({v: p for v, p in attack.ops.items() if resource.location_of[v] == loc})
            factors[loc] = exact_evasion(resource, pattern, part, guard)
    return ICLReport(frozenset(support), sub, exact, Fraction(8, 9) ** len(sub), icl, factors)


@dataclass
class EvasionReport:
    attack: AttackSpec
    harmless: bool
    exact: Fraction | None
    bound: Fraction
    mc: MonteCarloEstimate | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {
            "attack": self.attack.label(),
            "paulis": self.attack.to_json(),
            "class": "harmless" if self.harmless else "in_E",
            "exact": None if self.exact is None else str(self.exact),
            "bound": str(self.bound),
            "mc_estimate": None if self.mc is None else self.mc.estimate,
            "mc_stderr": None if self.mc is None else self.mc.stderr,
            "trials": 0 if self.mc is None else self.mc.trials,
            "note": self.note,
        }

    def row(self) -> list:
        j = self.to_json()
        return [
            j["attack"],
            j["class"],
            "" if self.exact is None else self.exact.numerator,
            "" if self.exact is None else self.exact.denominator,
            "" if self.exact is None else f"{float(self.exact):.6f}",
            j["bound"],
            "" if self.mc is None else f"{self.mc.estimate:.6f}",
            "" if self.mc is None else f"{self.mc.stderr:.6f}",
            j["trials"],
            self.note,
        ]


CSV_HEADER = [
    "attack",
    "class",
    "exact_num",
    "exact_den",
    "exact",
    "bound",
    "mc_estimate",
    "mc_stderr",
    "trials",
    "note",
]


def evasion_report(
    resource: LocatedGraph,
    pattern: MeasurementPattern,
    attack: AttackSpec,
    trials: int = 0,
    seed=None,
    jobs: int = 1,
    guard: int = ENUMERATION_GUARD,
) -> EvasionReport:
    harmless = classify(attack, pattern, resource).harmless
    note = ""
    try:
        exact = exact_evasion(resource, pattern, attack, guard)
    except ResourceLimitError:
        exact, note = None, "skipped-exact"
    if harmless:
        limit = Fraction(1)
    elif isinstance(resource, ThreeDottedCopies):
        limit = Fraction(2, 3)
    else:
        limit = Fraction(8, 9) ** len(greedy_icl_subset(effective_support(attack, pattern, resource), resource.base))
    mc = monte_carlo_evasion(resource, pattern, attack, trials, seed, jobs) if trials > 0 else None
    return EvasionReport(attack, harmless, exact, limit, mc, note)


def reports_to_csv(reports: Iterable[EvasionReport], comment_lines: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comment_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep in reports:
        w.writerow(rep.row())
    return buf.getvalue()


def reports_to_json(reports: Iterable[EvasionReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True)


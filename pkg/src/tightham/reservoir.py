"""Reservoir sets: a small random vertex set kept aside for later connections."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .connect import (
    AvoidSetTooLarge,
    ConnectError,
    ConnectRequest,
    ExhaustedBudget,
    RobustFamily,
    connectable_pairs,
    connector_size,
    find_connecting_path,
)
from .hypergraph import Hypergraph3, TightPath, bits, mask_of, popcount


class ReservoirError(RuntimeError):
    pass


class ReservoirCapExceeded(ReservoirError):
    pass


@dataclass
class Reservoir:
    members: int
    theta_star: float
    seed: int
    ell: int = 3
    used: int = 0
    attempts: int = 1
    validation: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return popcount(self.members)

    @property
    def free(self) -> int:
        return self.members & ~self.used

    @property
    def free_count(self) -> int:
        return popcount(self.free)

    def member_list(self) -> list[int]:
        return list(bits(self.members))

    def mark_used(self, vertices) -> None:
        m = mask_of(vertices)
        if m & ~self.members:
            raise ReservoirError("marking non-members as used")
        if m & self.used:
            raise ReservoirError("reservoir vertex used twice")
        self.used |= m


def inclusion_probability(theta_star: float, ell: int) -> float:
    return (1 - 1 / (10 * ell)) * theta_star**2


def sample_reservoir(
    H: Hypergraph3,
    theta_star: float,
    seed: int,
    retries: int = 200,
    ell: int = 3,
    min_size: int = 0,
    exclude: int = 0,
) -> Reservoir:
    """Independent inclusion with probability ``(1 - 1/(10 ell)) theta*^2``, resampled
    until the size lies in ``[max(theta*^2 n / 2, min_size), theta*^2 n]``."""
    n = H.n
    hi = theta_star**2 * n
    lo = max(hi / 2, min_size)
    if hi < 8:
        raise ReservoirError(f"size window is vacuous: theta*^2 n = {hi:.2f} < 8")
    if lo > hi:
        raise ReservoirError(f"min_size {min_size} exceeds theta*^2 n = {hi:.2f}")
    p = inclusion_probability(theta_star, ell)
    rng = np.random.Generator(np.random.PCG64(seed))
    ok = np.ones(n, dtype=bool)
    ok[list(bits(exclude))] = False
    for attempt in range(1, retries + 1):
        take = (rng.random(n) < p) & ok
        k = int(take.sum())
        if lo <= k <= hi:
            return Reservoir(mask_of(np.flatnonzero(take).tolist()), theta_star, seed, ell, attempts=attempt)
    raise ReservoirError(f"size window [{lo:.1f}, {hi:.1f}] not hit in {retries} samples")


def connect_through_reservoir(
    H: Hypergraph3,
    fam: RobustFamily,
    res: Reservoir,
    start: tuple[int, int],
    end: tuple[int, int],
    zeta2: float,
    cap: float | None = None,
    seed: int = 0,
    budget: int = 200_000,
) -> TightPath:
    """Connect ``start`` to ``end`` with all internal vertices in the unused part of the reservoir.

    ``cap`` bounds ``|res.used|`` on entry (``None`` means no bound).  The
    internal vertices are marked used on success.
    """
    if cap is not None and res.used and popcount(res.used) > cap:
        raise ReservoirCapExceeded(f"{popcount(res.used)} reservoir vertices already used, cap {cap:g}")
    avoid = frozenset(v for v in range(H.n) if not (res.free >> v) & 1)
    req = ConnectRequest(tuple(start), tuple(end), zeta2, avoid, res.ell)
    path = find_connecting_path(H, fam, req, budget=budget, seed=seed)
    res.mark_used(path.seq[2:-2])
    return path


def validate_reservoir(
    H: Hypergraph3,
    fam: RobustFamily,
    res: Reservoir,
    zeta2: float,
    sample: int = 50,
    seed: int = 0,
    budget: int = 50_000,
) -> dict:
    """Fraction of random disjoint connectable pair-pairs joinable inside the reservoir."""
    need = connector_size(res.ell)
    report = {"sample": 0, "successes": 0, "fraction": 0.0, "reservoir_size": res.size, "failures": {}}
    if res.free_count < need:
        report["diagnosis"] = f"reservoir has {res.free_count} free vertices, a connection needs {need}"
        res.validation = report
        return report
    pairs = sorted(connectable_pairs(fam, zeta2))
    if len(pairs) < 2:
        report["diagnosis"] = "fewer than two connectable pairs"
        res.validation = report
        return report
    rng = random.Random(seed)
    done = 0
    tries = 0
    while done < sample and tries < 50 * sample:
        tries += 1
        p, q = rng.sample(pairs, 2)
        if set(p) & set(q):
            continue
        p = p if rng.random() < 0.5 else p[::-1]
        q = q if rng.random() < 0.5 else q[::-1]
        done += 1
        probe = Reservoir(res.members, res.theta_star, res.seed, res.ell, used=res.used | (res.members & mask_of(p + q)))
        try:
            connect_through_reservoir(H, fam, probe, p, q, zeta2, seed=rng.randrange(1 << 30), budget=budget)
            report["successes"] += 1
        except ConnectError as e:
            report["failures"][e.kind] = report["failures"].get(e.kind, 0) + 1
    report["sample"] = done
    report["fraction"] = report["successes"] / done if done else 0.0
    res.validation = report
    return report


__all__ = [
    "Reservoir",
    "ReservoirError",
    "ReservoirCapExceeded",
    "sample_reservoir",
    "validate_reservoir",
    "connect_through_reservoir",
    "inclusion_probability",
    "AvoidSetTooLarge",
    "ExhaustedBudget",
]

"""End-to-end construction of a tight Hamiltonian cycle.

Stages, in order: robust link subgraphs, reservoir, absorber family,
absorbing path ``P_A``, long path ``Q`` outside ``P_A``, two reservoir
connections closing ``Q`` and ``P_A`` into a cycle, absorption of the
leftover vertices, and an independent certificate check.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .absorb import (
    AbsorbConfig,
    AbsorbError,
    AbsorbingPath,
    absorb_vertices,
    absorption_plan,
    build_absorbing_path,
    choose_absorber_family,
)
from .connect import ConnectError, RobustFamily, connector_size
from .hypergraph import Hypergraph3, TightPath, bits, mask_of, popcount
from .longpath import Candidate, LongPathConfig, LongPathError, build_long_path
from .reservoir import Reservoir, ReservoirError, connect_through_reservoir, sample_reservoir, validate_reservoir


class ConfigInfeasible(ValueError):
    pass


@dataclass
class PipelineConfig:
    alpha: float = 0.2
    beta: float = 0.01
    ell: int = 3
    zeta_star: float = 0.25
    zeta_2star: float = 0.15
    theta_star: float | None = None  # None: desk rule, see reservoir_theta
    theta_2star: float = 0.45
    M: int = 8
    m: int = 3
    seed: int = 0
    mode: str = "desk"
    # desk-scale knobs
    family_size: int | None = None  # None: 2 from n = 55 on, else 1
    cover_min: int = 0
    frac: float = 1e-3
    bridge_max: int | None = 2
    sweep_slack: int = 1
    leftover_cap: float | None = None
    reservoir_retries: int = 500
    reservoir_validation: int = 0
    close_retries: int = 8
    connect_budget: int = 200_000
    search_budget: int = 50_000
    sweep_budget: int = 20_000
    min_n: int = 40
    time_budget_s: float | None = None

    def check(self) -> None:
        if self.ell < 3 or self.ell % 2 == 0:
            raise ConfigInfeasible("ell must be odd and at least 3")
        if self.M % 3 != 2:
            raise ConfigInfeasible("M must be congruent to 2 mod 3")
        if self.mode not in ("desk", "faithful"):
            raise ConfigInfeasible(f"unknown mode {self.mode!r}")
        if self.mode == "faithful":
            if self.theta_star is None:
                raise ConfigInfeasible("faithful mode needs an explicit theta*")
            chain = [self.alpha, self.zeta_star, self.theta_star, self.zeta_2star, self.theta_2star]
            if not all(a > b for a, b in zip(chain, chain[1:])):
                raise ConfigInfeasible("faithful mode needs alpha > zeta* > theta* > zeta** > theta**")

    def derived_seed(self, stage: str, attempt: int = 0) -> int:
        h = hashlib.sha256(f"{self.seed}/{stage}/{attempt}".encode()).digest()
        return int.from_bytes(h[:4], "big")

    def reservoir_theta(self, n: int) -> float:
        """theta* itself when set; otherwise 0.66, raised so that the closing
        connections plus slack (and 4 spare vertices) fit into theta*^2 n."""
        if self.theta_star is not None:
            return self.theta_star
        need = 2 * (3 * self.ell + 1) + self.sweep_slack + 4
        return max(0.66, (need / n) ** 0.5) if n else 0.66

    def absorbers_for(self, n: int) -> int:
        if self.family_size is not None:
            return self.family_size
        return 2 if n >= 55 else 1

    def leftover(self, n: int) -> float:
        if self.leftover_cap is not None:
            return self.leftover_cap
        return max(self.reservoir_theta(n) ** 2 * n, 6)


@dataclass
class StageReport:
    stage: str
    elapsed_ms: float
    counters: dict = field(default_factory=dict)
    outcome: str = "ok"


@dataclass
class HamResult:
    outcome: str  # "cycle" or "stage_failure"
    cycle: TightPath | None = None
    stage: str | None = None
    diagnosis: str = ""
    stage_reports: list[StageReport] = field(default_factory=list)
    certificate: dict = field(default_factory=dict)
    budget_exceeded: bool = False
    candidates: list[Candidate] = field(default_factory=list, repr=False)
    reservoir_mask: int = field(default=0, repr=False)

    @property
    def ok(self) -> bool:
        return self.outcome == "cycle"

    def to_json(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome,
            "stage": self.stage,
            "diagnosis": self.diagnosis,
            "cycle": list(self.cycle.seq) if self.cycle else None,
            "certificate": self.certificate,
            "budget_exceeded": self.budget_exceeded,
            "stages": [asdict(r) for r in self.stage_reports],
        }

    def signature(self) -> str:
        """Everything except timings, for determinism checks."""
        d = self.to_json()
        for s in d["stages"]:
            s.pop("elapsed_ms")
        return json.dumps(d, sort_keys=True)


def certify_cycle(n: int, edges, seq) -> dict:
    """Check a Hamiltonian tight cycle directly from the raw triples."""
    E = {frozenset(e) for e in edges}
    seq = [int(v) for v in seq]
    if len(seq) != n:
        return {"accepted": False, "reason": f"cycle has {len(seq)} vertices, expected {n}"}
    if sorted(seq) != list(range(n)):
        return {"accepted": False, "reason": "cycle is not a permutation of the vertex set"}
    if n < 4:
        return {"accepted": False, "reason": "too few vertices"}
    for i in range(n):
        w = frozenset((seq[i], seq[(i + 1) % n], seq[(i + 2) % n]))
        if w not in E:
            return {"accepted": False, "reason": f"window at position {i} is not an edge"}
    return {"accepted": True, "reason": ""}


class _Stop(Exception):
    def __init__(self, stage: str, msg: str, budget: bool = False):
        super().__init__(msg)
        self.stage = stage
        self.budget = budget


def _sweep(
    H: Hypergraph3,
    end: tuple[int, int],
    loose: int,
    rfree: int,
    keep: int,
    C: np.ndarray,
    rng: random.Random,
    budget: int,
) -> list[int]:
    """Extend from ``end`` through leftover vertices, leaving ``keep`` free reservoir vertices.

    Prefers covering ``loose`` (non-reservoir leftovers) and then consuming
    reservoir vertices down to exactly ``keep``; the result ends at a connectable pair.
    """
    pm = H.pair_mask
    target_r = popcount(rfree) - keep
    best: tuple[tuple[int, int], list[int]] = ((0, -abs(target_r)), [])
    left = [budget]
    total_loose = popcount(loose)

    def rec(a: int, b: int, ext: list[int], lc: int, rc: int, used: int) -> bool:
        nonlocal best
        if ext and C[a, b]:
            score = (lc, -abs(target_r - rc))
            if score > best[0]:
                best = (score, list(ext))
                if lc == total_loose and rc == target_r:
                    return True
        left[0] -= 1
        if left[0] < 0:
            return True
        opts = list(bits(pm(a, b) & (loose | rfree) & ~used))
        rng.shuffle(opts)
        opts.sort(key=lambda w: (not (loose >> w) & 1, popcount(pm(b, w) & (loose | rfree) & ~used)))
        for w in opts:
            is_r = (rfree >> w) & 1
            if is_r and rc + 1 > target_r:
                continue
            ext.append(w)
            if rec(b, w, ext, lc + (0 if is_r else 1), rc + is_r, used | (1 << w)):
                return True
            ext.pop()
        return False

    rec(end[0], end[1], [], 0, 0, 0)
    return best[1]


def run_pipeline(H: Hypergraph3, config: PipelineConfig | None = None, observe: Callable | None = None) -> HamResult:
    cfg = config or PipelineConfig()
    n = H.n
    reports: list[StageReport] = []
    observed: list[Candidate] = []
    rmask = 0
    t_start = time.perf_counter()

    def stage(name: str):
        class _S:
            def __enter__(s):
                s.t = time.perf_counter()
                s.rep = StageReport(name, 0.0)
                reports.append(s.rep)
                if cfg.time_budget_s is not None and time.perf_counter() - t_start > cfg.time_budget_s:
                    raise _Stop(name, "time budget exhausted", budget=True)
                return s.rep

            def __exit__(s, et, ev, tb):
                s.rep.elapsed_ms = round((time.perf_counter() - s.t) * 1000, 3)
                if et is not None:
                    s.rep.outcome = "failed"
                    if isinstance(ev, _Stop):
                        return False
                    if isinstance(ev, (ConnectError, ReservoirError, AbsorbError, LongPathError, ConfigInfeasible)):
                        raise _Stop(name, f"{type(ev).__name__}: {ev}") from ev
                return False

        return _S()

    try:
        with stage("config") as r:
            cfg.check()
            if n < cfg.min_n:
                raise ConfigInfeasible(f"n = {n} is below the minimum workable size {cfg.min_n}")
            r.counters = {"n": n, "edges": H.m, "mode": cfg.mode, "seed": cfg.seed}

        with stage("robust") as r:
            fam = RobustFamily.from_hypergraph(H, cfg.alpha)
            sizes = [g.order for g in fam.graphs]
            r.counters = {"min_U": min(sizes), "max_U": max(sizes), "connectable_pairs": int(np.triu(fam.connectable_matrix(cfg.zeta_star), 1).sum())}

        conn = connector_size(cfg.ell)
        with stage("reservoir") as r:
            res = sample_reservoir(
                H, cfg.reservoir_theta(n), cfg.derived_seed("reservoir"), cfg.reservoir_retries, cfg.ell,
                min_size=2 * conn + cfg.sweep_slack,
            )
            r.counters = {"size": res.size, "attempts": res.attempts}
            rmask = res.members
            if cfg.reservoir_validation:
                rep = validate_reservoir(H, fam, res, cfg.zeta_2star, cfg.reservoir_validation, cfg.derived_seed("reservoir-check"))
                r.counters["validation_fraction"] = rep["fraction"]

        acfg = AbsorbConfig(
            zeta_star=cfg.zeta_star, ell=cfg.ell, frac=cfg.frac, family_size=cfg.absorbers_for(n),
            cover_min=cfg.cover_min, bridge_max=cfg.bridge_max if cfg.mode == "desk" else None,
            seed=cfg.derived_seed("absorbers"), connect_budget=cfg.connect_budget,
        )
        with stage("absorbers") as r:
            family = choose_absorber_family(H, fam, res, acfg)
            r.counters = {"tuples": len(family.tuples), **family.diagnostics}

        with stage("absorbing-path") as r:
            acfg.seed = cfg.derived_seed("absorbing-path")
            PA = build_absorbing_path(H, fam, res, family, acfg)
            r.counters = {"vertices": len(PA.seq), "connectors": PA.connectors}
            if cfg.mode == "faithful" and len(PA.seq) > cfg.reservoir_theta(n) * n:
                raise AbsorbError(f"absorbing path has {len(PA.seq)} > theta* n vertices")

        avail = ((1 << n) - 1) & ~mask_of(PA.seq)
        lcfg = LongPathConfig(
            alpha=cfg.alpha, ell=cfg.ell, zeta2=cfg.zeta_2star, M=cfg.M, m=cfg.m, mode=cfg.mode,
            leftover_cap=cfg.leftover(n), q_reservoir_cap=cfg.theta_2star**2 * n,
            reservoir_cap=2 * cfg.theta_2star**2 * n, search_budget=cfg.search_budget,
            connect_budget=cfg.connect_budget, seed=cfg.derived_seed("long-path"),
            reserve_free=2 * conn + cfg.sweep_slack,
        )

        def obs(c: Candidate) -> None:
            observed.append(c)
            if observe is not None:
                observe(c)

        with stage("long-path") as r:
            cand, lrep = build_long_path(H, fam, res, lcfg, avail=avail, observe=obs)
            r.counters = asdict(lrep)

        with stage("close") as r:
            C2 = fam.connectable_matrix(cfg.zeta_2star)
            Q = list(cand.seq)
            base_used = res.used
            cyc = None
            plan_fail = ""
            for attempt in range(cfg.close_retries):
                res.used = base_used
                rng = random.Random(cfg.derived_seed("close", attempt))
                try:
                    if Q:
                        c1 = connect_through_reservoir(
                            H, fam, res, (Q[-2], Q[-1]), PA.seq[:2], cfg.zeta_2star,
                            cap=lcfg.reservoir_cap, seed=rng.randrange(1 << 30), budget=cfg.connect_budget,
                        )
                        head = Q + list(c1.seq[2:-2])
                        first = tuple(Q[:2])
                    else:
                        head = []
                        first = PA.seq[:2]
                    covered = mask_of(head) | mask_of(PA.seq)
                    loose = ((1 << n) - 1) & ~covered & ~res.members
                    slack = max(0, min(cfg.sweep_slack, len(family.tuples)))
                    ext = _sweep(
                        H, PA.seq[-2:], loose, res.free & ~covered, conn + slack, C2, rng, cfg.sweep_budget,
                    )
                    res.mark_used([v for v in ext if (res.members >> v) & 1])
                    tail_end = (list(PA.seq) + ext)[-2:]
                    c2 = connect_through_reservoir(
                        H, fam, res, tuple(tail_end), first, cfg.zeta_2star,
                        cap=lcfg.reservoir_cap, seed=rng.randrange(1 << 30), budget=cfg.connect_budget,
                    )
                except (ConnectError, ReservoirError) as e:
                    plan_fail = f"{type(e).__name__}: {e}"
                    continue
                seq = head + list(PA.seq) + ext + list(c2.seq[2:-2])
                X = sorted(set(range(n)) - set(seq))
                if absorption_plan(PA, X) is None or len(X) > len(family.tuples):
                    plan_fail = f"leftover {X} cannot be absorbed by the family"
                    continue
                cyc = (seq, X, len(head))
                r.counters = {"attempt": attempt, "cycle_vertices": len(seq), "leftover": len(X), "sweep": len(ext), "reservoir_used": popcount(res.used)}
                break
            if cyc is None:
                raise AbsorbError(f"closing failed after {cfg.close_retries} attempts ({plan_fail})")

        with stage("absorb") as r:
            seq, X, offset = cyc
            PA2 = absorb_vertices(PA, X, H)
            seq = seq[:offset] + list(PA2.seq) + seq[offset + len(PA.seq):]
            r.counters = {"absorbed": len(X)}

        with stage("certify") as r:
            cert = certify_cycle(n, H.edges, seq)
            r.counters = dict(cert)
            if not cert["accepted"]:
                r.outcome = "failed"
                return HamResult("stage_failure", None, "certify", cert["reason"], reports, cert, candidates=observed, reservoir_mask=rmask)
        return HamResult("cycle", TightPath(tuple(seq), True), None, "", reports, cert, candidates=observed, reservoir_mask=rmask)
    except _Stop as s:
        return HamResult("stage_failure", None, s.stage, str(s), reports, {}, budget_exceeded=s.budget, candidates=observed, reservoir_mask=rmask)

"""Seeded property harness.

Each suite checks one family of identities on random instances. A trial owns
its generator, seeded from (seed, suite, dim, trial), so any trial can be
replayed on its own and a run does not depend on scheduling order.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from services import instance_generator as gen
from services.bundle import (
    FiberPoint,
    block_offdiagonal_residual,
    e_chart,
    e_chart_inv,
    fiber_psi,
    fiber_psi_inverse,
    fiber_residual,
    p_preimage_point,
    pi_trivialize,
    pi_trivialize_check,
    pi_trivialize_inv,
    project_p,
    split_frame,
    trivialize_phi,
    trivialize_phi_inv,
)
from services.delta import certify, common_complement
from services.grassmann import (
    Subspace,
    act,
    buckholtz_report,
    complementary,
    graph_chart,
    graph_chart_inv,
    image,
    oblique_projector,
    oblique_projector_oracle,
    perp,
)
from services.operators import (
    big_L,
    big_L_analytic,
    compose_round_trip,
    pi_s0,
    section_sigma,
    w_unitary,
)
from services.substrate import (
    Tolerances,
    TriState,
    adjoint,
    condition_number,
    gap_distance,
    identity,
    op_norm,
)

logger = logging.getLogger(__name__)

SUITES = ("buckholtz", "oblique", "transition", "section", "unitary", "charts",
          "action", "fiber", "trivialization", "complement")

GAP_ATOL = 1e-8
FIX_ATOL = 1e-9
UNITARITY_ATOL = 1e-12
CONJUGATION_ATOL = 1e-9
# Largest condition number of the random operators fed to the action suite.
ACTION_MAX_COND = 1e6
# Share of perturbed fiber frames that must leave the fiber, judged once a
# suite has run at least NEGATIVE_CONTROL_MIN_TRIALS controls.
NEGATIVE_CONTROL_FLOOR = 0.95
NEGATIVE_CONTROL_MIN_TRIALS = 20


class FuzzConfig(BaseModel):
    dims: List[int] = Field(min_length=1, description="Ambient dimensions to sweep")
    trials: int = Field(ge=1, description="Trials per suite and dimension")
    seed: int = Field(default=0, ge=0)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    suites: List[str] = Field(default_factory=lambda: list(SUITES))
    workers: int = Field(default=1, ge=1)

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, dims):
        if any(n < 1 for n in dims):
            raise ValueError("Every ambient dimension must be at least 1")
        return dims

    @field_validator("suites")
    @classmethod
    def _known_suites(cls, suites):
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ValueError(f"Unknown suites {unknown}; choose from {list(SUITES)}")
        if not suites:
            raise ValueError("At least one suite is required")
        return suites


@dataclass
class TrialOutcome:
    """Residuals with their limits, tri-state expectations and counters of one trial."""
    residuals: Dict[str, float] = field(default_factory=dict)
    limits: Dict[str, float] = field(default_factory=dict)
    expectations: List[Tuple[TriState, TriState]] = field(default_factory=list)
    flags: Dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None

    def check(self, name: str, value: float, limit: float):
        self.residuals[name] = max(float(value), self.residuals.get(name, 0.0))
        self.limits[name] = limit

    def expect(self, verdict: TriState, expected: TriState = TriState.TRUE):
        self.expectations.append((verdict, expected))

    def count(self, name: str, amount: int = 1):
        self.flags[name] = self.flags.get(name, 0) + amount

    @property
    def status(self) -> str:
        if self.error is not None:
            return "fail"
        if any(self.residuals[name] > self.limits[name] for name in self.residuals):
            return "fail"
        if any(v.is_determinate and v is not want for v, want in self.expectations):
            return "fail"
        if any(not v.is_determinate for v, _ in self.expectations):
            return "indeterminate"
        return "pass"


class FailingInstanceModel(BaseModel):
    dim: int
    trial: int
    error: Optional[str] = None


class SuiteReport(BaseModel):
    passed: int = 0
    failed: int = 0
    indeterminate: int = 0
    worst_residuals: Dict[str, float] = Field(default_factory=dict)
    flags: Dict[str, int] = Field(default_factory=dict)
    failing_instances: List[FailingInstanceModel] = Field(default_factory=list)
    violations: List[str] = Field(default_factory=list, description="Suite-level rate checks that failed")
    wall_clock_seconds: float = 0.0

    def add(self, n: int, trial: int, outcome: TrialOutcome):
        status = outcome.status
        if status == "pass":
            self.passed += 1
        elif status == "indeterminate":
            self.indeterminate += 1
        else:
            self.failed += 1
            self.failing_instances.append(FailingInstanceModel(dim=n, trial=trial, error=outcome.error))
        for name, value in outcome.residuals.items():
            self.worst_residuals[name] = max(value, self.worst_residuals.get(name, 0.0))
        for name, amount in outcome.flags.items():
            self.flags[name] = self.flags.get(name, 0) + amount


class Report(BaseModel):
    seed: int
    dims: List[int]
    trials: int
    suites: Dict[str, SuiteReport]
    wall_clock_seconds: float = 0.0

    @property
    def total_failures(self) -> int:
        return sum(s.failed + len(s.violations) for s in self.suites.values())

    def deterministic_dump(self) -> dict:
        """The report without timing fields."""
        data = self.model_dump(mode="json", exclude={"wall_clock_seconds"})
        for suite in data["suites"].values():
            suite.pop("wall_clock_seconds", None)
        return data


def rate_violations(flags: Dict[str, int]) -> List[str]:
    """Suite-level checks on counted flags; empty when the suite is healthy."""
    trials = flags.get("negative_control_trials", 0)
    escaped = flags.get("negative_control_escaped", 0)
    if trials >= NEGATIVE_CONTROL_MIN_TRIALS and escaped < NEGATIVE_CONTROL_FLOOR * trials:
        return [f"negative control left the fiber in only {escaped} of {trials} instances"]
    return []


def trial_generator(seed: int, suite: str, n: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, SUITES.index(suite), n, trial]))


def _relative(value: float, scale: float) -> float:
    return value / max(1.0, scale)


def _suite_buckholtz(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    k = gen.split_dimension(rng, n)
    S = gen.random_subspace(rng, n, k, tol)
    kind = int(rng.integers(3))
    if kind == 0 or n - k == 0:
        Z = gen.graph_subspace(rng, S, float(rng.uniform(0.2, 3.0)), tol)
        expected = TriState.TRUE
    elif kind == 1:
        shared = S.basis[:, :1]
        Z = Subspace.from_columns(np.hstack([shared, gen.complex_gaussian(rng, n, n - k - 1)]), tol)
        expected = TriState.FALSE
    else:
        Z = S
        expected = TriState.FALSE
    report = buckholtz_report(S, Z, tol)
    for verdict in report.verdicts:
        out.expect(verdict, expected)
    if report.determinate and report.consistent:
        out.count("three_way_agreement")
    dual = buckholtz_report(perp(S, tol), perp(Z, tol), tol)
    if report.norm_lt_one.is_determinate and dual.norm_lt_one.is_determinate:
        out.expect(dual.norm_lt_one, report.norm_lt_one)


def _suite_oblique(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    L = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    K = gen.graph_subspace(rng, L, float(rng.uniform(0.2, 3.0)), tol)
    E = oblique_projector(L, K, tol).matrix
    scale = op_norm(E)
    out.check("oracle", _relative(op_norm(E - oblique_projector_oracle(L, K)), scale), GAP_ATOL)
    out.check("idempotency", _relative(op_norm(E @ E - E), scale), FIX_ATOL)


def _suite_transition(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    Z = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    S = gen.graph_subspace(rng, Z, float(rng.uniform(0.2, 2.0)), tol)
    T = gen.graph_subspace(rng, Z, float(rng.uniform(0.2, 2.0)), tol)
    L = big_L(Z, S, T, tol).matrix
    scale = op_norm(L)
    out.check("maps_s_onto_t", gap_distance(image(L, S, tol).projector, T.projector), GAP_ATOL)
    fixed = max((np.linalg.norm(L @ v - v) for v in Z.basis.T), default=0.0)
    out.check("fixes_z", _relative(fixed, scale), FIX_ATOL)
    out.check("analytic", _relative(op_norm(L - big_L_analytic(Z, S, T, tol)), scale), GAP_ATOL)
    out.check("round_trip", compose_round_trip(Z, S, T, tol), GAP_ATOL)
    out.expect(TriState.from_bool(condition_number(L) <= tol.cond_max))


def _suite_section(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    Z = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    S0 = gen.graph_subspace(rng, Z, float(rng.uniform(0.2, 2.0)), tol)
    T = gen.graph_subspace(rng, Z, float(rng.uniform(0.2, 2.0)), tol)
    img = pi_s0(section_sigma(Z, S0, T, tol), S0, tol)
    out.check("section", gap_distance(img.projector, T.projector), GAP_ATOL)


def _suite_unitary(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    S = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    Q = gen.graph_subspace(rng, perp(S, tol), float(rng.uniform(0.0, 3.0)), tol)
    W = w_unitary(S, Q, tol).matrix
    out.check("unitarity", op_norm(adjoint(W) @ W - identity(n)), UNITARITY_ATOL)
    out.check("conjugation", op_norm(W @ S.projector @ adjoint(W) - Q.projector), CONJUGATION_ATOL)


def _suite_charts(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    Z = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    coord = gen.random_graph_coordinate(rng, Z, float(rng.uniform(0.1, 3.0)))
    S = graph_chart_inv(coord, tol)
    X = graph_chart(Z, S, tol).matrix
    entrywise = float(np.max(np.abs(X - coord.matrix))) if X.size else 0.0
    out.check("chart_of_inverse", _relative(entrywise, op_norm(coord.matrix)), GAP_ATOL)
    S_back = graph_chart_inv(graph_chart(Z, S, tol), tol)
    out.check("inverse_of_chart", gap_distance(S_back.projector, S.projector), GAP_ATOL)


def _suite_action(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    S = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    G = gen.random_invertible(rng, n, ACTION_MAX_COND)
    img, projector = act(G, S, tol)
    out.check("ando_vs_oracle", gap_distance(projector.matrix, img.projector), GAP_ATOL)


def _suite_fiber(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    k = gen.split_dimension(rng, n)
    z = gen.random_subspace(rng, n, n - k, tol)
    S0 = gen.graph_subspace(rng, z, float(rng.uniform(0.2, 2.0)), tol)
    T0 = gen.graph_subspace(rng, z, float(rng.uniform(0.2, 2.0)), tol)
    frames = split_frame(S0, "minus", tol)
    Lz = big_L(z, T0, S0, tol)
    G = gen.random_block_diagonal(rng, frames.h_minus, tol=tol)
    K = gen.random_block_diagonal(rng, frames.h_minus, tol=tol)
    point = FiberPoint.checked(fiber_psi(S0, T0, frames, Lz, z, G, K, tol), S0, T0, tol)
    out.check("in_fiber", point.residual, GAP_ATOL)
    _, G_back, K_back = fiber_psi_inverse(S0, T0, frames, Lz, point, tol)
    out.check("inverse", max(_relative(op_norm(G_back - G), op_norm(G)),
                             _relative(op_norm(K_back - K), op_norm(K))), GAP_ATOL)
    if 0 < frames.h_minus.dim < n:
        G_off = G + gen.off_block_perturbation(rng, frames)
        escaped = fiber_residual(fiber_psi(S0, T0, frames, Lz, z, G_off, K, tol), S0, T0, tol) > GAP_ATOL
        out.count("negative_control_trials")
        out.count("negative_control_escaped", int(escaped))


def _suite_trivialization(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    Z0 = gen.random_subspace(rng, n, gen.split_dimension(rng, n), tol)
    Z0p = perp(Z0, tol)

    anchored = gen.random_frame_near_anchor(rng, Z0, tol=tol)
    f = anchored.frame
    frames = split_frame(Z0p, "minus", tol)
    triv = trivialize_phi(Z0, frames, f, tol)
    out.check("base_pair", max(gap_distance(triv.pair.s.projector, anchored.s.projector),
                               gap_distance(triv.pair.t.projector, anchored.t.projector)), GAP_ATOL)
    out.check("a_block_diagonal", _relative(block_offdiagonal_residual(triv.a, frames), op_norm(triv.a)), GAP_ATOL)
    out.check("b_block_diagonal", _relative(block_offdiagonal_residual(triv.b, frames), op_norm(triv.b)), GAP_ATOL)
    out.expect(complementary(triv.u, frames.h_minus, tol))
    back = trivialize_phi_inv(Z0, frames, triv.pair, triv.u, triv.a, triv.b, tol)
    out.check("phi_round_trip", max(gap_distance(back.z.projector, f.z.projector),
                                    _relative(op_norm(back.g.matrix - f.g.matrix), op_norm(f.g.matrix)),
                                    _relative(op_norm(back.k.matrix - f.k.matrix), op_norm(f.k.matrix))), GAP_ATOL)

    pt = pi_trivialize(Z0, f, tol)
    out.expect(pi_trivialize_check(Z0, pt, tol))
    back = pi_trivialize_inv(Z0, pt, tol)
    out.check("pi_round_trip", max(_relative(op_norm(back.g.matrix - f.g.matrix), op_norm(f.g.matrix)),
                                   _relative(op_norm(back.k.matrix - f.k.matrix), op_norm(f.k.matrix))), GAP_ATOL)

    plus = split_frame(Z0p, "plus", tol)
    z = gen.graph_subspace(rng, Z0, float(rng.uniform(0.2, 2.0)), tol)
    G = gen.random_h_plus_operator(rng, plus, tol)
    K = gen.random_h_plus_operator(rng, plus, tol)
    _, G_back, K_back = e_chart_inv(Z0, plus, e_chart(Z0, plus, z, G, K, tol), tol)
    out.check("e_chart_round_trip", max(_relative(op_norm(G_back - G), op_norm(G)),
                                        _relative(op_norm(K_back - K), op_norm(K))), GAP_ATOL)


def _suite_complement(rng: np.random.Generator, n: int, tol: Tolerances, out: TrialOutcome):
    k = int(rng.integers(0, n + 1))
    S = gen.random_subspace(rng, n, k, tol)
    T = gen.random_subspace(rng, n, k, tol)
    cert = common_complement(S, T, tol, seed=int(rng.integers(0, 2 ** 31)))
    out.count(f"method_{cert.method.value}")
    verdict, _, _ = certify(S, T, cert.z, tol)
    out.expect(verdict)
    pair = project_p(p_preimage_point(S, T, cert.z, tol), tol)
    out.check("preimage", max(gap_distance(pair.s.projector, S.projector),
                              gap_distance(pair.t.projector, T.projector)), GAP_ATOL)


SUITE_RUNNERS: Dict[str, Callable[[np.random.Generator, int, Tolerances, TrialOutcome], None]] = {
    "buckholtz": _suite_buckholtz,
    "oblique": _suite_oblique,
    "transition": _suite_transition,
    "section": _suite_section,
    "unitary": _suite_unitary,
    "charts": _suite_charts,
    "action": _suite_action,
    "fiber": _suite_fiber,
    "trivialization": _suite_trivialization,
    "complement": _suite_complement,
}


class FuzzService:
    def __init__(self, config: FuzzConfig):
        self.config = config
        self.tol = config.tolerances

    def run_trial(self, suite: str, n: int, trial: int) -> TrialOutcome:
        out = TrialOutcome()
        rng = trial_generator(self.config.seed, suite, n, trial)
        try:
            SUITE_RUNNERS[suite](rng, n, self.tol, out)
        except Exception as e:
            out.error = f"{type(e).__name__}: {e}"
            logger.debug(f"[Fuzz] {suite} n={n} trial={trial} raised {out.error}")
        return out

    def replay(self, suite: str, n: int, trial: int) -> TrialOutcome:
        """Recompute a single trial from its coordinates."""
        if suite not in SUITES:
            raise ValueError(f"Unknown suite {suite!r}")
        return self.run_trial(suite, n, trial)

    def _run_suite(self, suite: str, pool: Optional[ThreadPoolExecutor]) -> SuiteReport:
        keys = [(n, trial) for n in self.config.dims for trial in range(self.config.trials)]
        started = time.perf_counter()
        if pool is None:
            outcomes = [self.run_trial(suite, n, trial) for n, trial in keys]
        else:
            outcomes = list(pool.map(lambda key: self.run_trial(suite, *key), keys))
        report = SuiteReport()
        for (n, trial), outcome in zip(keys, outcomes):
            report.add(n, trial, outcome)
        report.violations = rate_violations(report.flags)
        for violation in report.violations:
            logger.warning(f"[Fuzz] {suite}: {violation}")
        report.wall_clock_seconds = time.perf_counter() - started
        logger.info(f"[Fuzz] {suite}: {report.passed} passed, {report.failed} failed, "
                    f"{report.indeterminate} indeterminate in {report.wall_clock_seconds:.2f}s")
        return report

    def run(self) -> Report:
        started = time.perf_counter()
        logger.info(f"[Fuzz] Seed {self.config.seed}, dims {self.config.dims}, "
                    f"{self.config.trials} trials, suites {self.config.suites}")
        suites: Dict[str, SuiteReport] = {}
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                for suite in self.config.suites:
                    suites[suite] = self._run_suite(suite, pool)
        else:
            for suite in self.config.suites:
                suites[suite] = self._run_suite(suite, None)
        report = Report(seed=self.config.seed, dims=self.config.dims, trials=self.config.trials,
                        suites=suites, wall_clock_seconds=time.perf_counter() - started)
        if report.total_failures:
            logger.warning(f"[Fuzz] {report.total_failures} failures across suites")
        return report

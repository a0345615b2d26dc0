"""Griffin-Lim type phase retrieval solvers.

Every solver is a stepper ``state -> state`` over coefficient grids; the
runner drives a stepper for a fixed number of iterations and records a
trace. ``P1`` below is the projection onto the consistent set (range of the
transform), ``P2`` the projection onto the magnitude set.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .frame import GaborSystem, synthesize
from .metric import ssnr
from .proj import check_target, objective, proj_magnitude, proj_range


class Algorithm(str, enum.Enum):
    GLA = "gla"
    FGLA = "fgla"
    AGLA = "agla"
    RAAR = "raar"
    DM = "dm"
    DM_ELSER = "dm_elser"

    @property
    def projections_per_iter(self) -> int:
        return 4 if self in (Algorithm.DM, Algorithm.DM_ELSER) else 2


class DivergedError(RuntimeError):
    """An iterate became non-finite."""

    def __init__(self, kind, iteration: int):
        self.kind = Algorithm(kind)
        self.iteration = iteration
        super().__init__(f"{self.kind.value} diverged at iteration {iteration}")


@dataclass(frozen=True)
class AlgoConfig:
    """Solver selection and parameters.

    Defaults are the momentum/relaxation values that work well for speech:
    ``alpha=0.99`` (FGLA/AGLA), ``beta=0.95, gamma=1.2`` (AGLA),
    ``lam=0.9`` (RAAR), ``rho=0.8`` (DM).
    """

    kind: Algorithm = Algorithm.AGLA
    alpha: float = 0.99
    beta: float = 0.95
    gamma: float = 1.2
    lam: float = 0.9
    rho: float = 0.8
    n_iter: int = 1000
    init: str = "zero"
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Algorithm(self.kind))
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise ValueError(f"n_iter must be a positive integer, got {self.n_iter}")
        if not 0 < self.lam <= 1:
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if self.rho == 0:
            raise ValueError("rho must be nonzero")
        if self.init not in ("zero", "random"):
            raise ValueError(f"unknown init mode {self.init!r}")
        for name in ("alpha", "beta", "gamma", "lam", "rho"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def params(self) -> dict:
        """Parameters that affect the selected solver."""
        k = self.kind
        if k is Algorithm.FGLA:
            return {"alpha": self.alpha}
        if k is Algorithm.AGLA:
            return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}
        if k is Algorithm.RAAR:
            return {"lambda": self.lam}
        if k in (Algorithm.DM, Algorithm.DM_ELSER):
            return {"rho": self.rho}
        return {}


@dataclass
class AlgoState:
    c: np.ndarray
    t_prev: Optional[np.ndarray] = None
    d_prev: Optional[np.ndarray] = None
    iter: int = 0
    proj_count: int = 0


@dataclass
class RunTrace:
    """Per-iteration record of a run.

    ``proj_count`` is cumulative; ``elapsed_ns`` is wall-clock time since the
    start of the run (zeros when timing is disabled).
    """

    iters: np.ndarray
    ssnr: np.ndarray
    objective: np.ndarray
    proj_count: np.ndarray
    elapsed_ns: np.ndarray
    signal: np.ndarray
    coefficients: np.ndarray = field(repr=False)

    def __len__(self):
        return self.iters.size

    @property
    def total_proj_count(self) -> int:
        return int(self.proj_count[-1]) if self.proj_count.size else 0

    @property
    def final_ssnr(self) -> float:
        return float(self.ssnr[-1])


def init_coefficients(s, mode: str = "zero", seed: Optional[int] = None) -> np.ndarray:
    """Starting grid with modulus ``s`` and zero or seeded uniform phase."""
    s = check_target(s)
    if mode == "zero":
        return s.astype(complex)
    if mode == "random":
        theta = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, size=s.shape)
        return s * np.exp(1j * theta)
    raise ValueError(f"unknown init mode {mode!r}")


def _gla_map(c, sys, s):
    return proj_range(proj_magnitude(c, s), sys)


def gla_step(state: AlgoState, sys: GaborSystem, s) -> AlgoState:
    return replace(
        state,
        c=_gla_map(state.c, sys, s),
        iter=state.iter + 1,
        proj_count=state.proj_count + 2,
    )


def fgla_step(state: AlgoState, sys: GaborSystem, s, alpha: float) -> AlgoState:
    t = _gla_map(state.c, sys, s)
    c = t + alpha * (t - state.t_prev)
    return replace(
        state, c=c, t_prev=t, iter=state.iter + 1, proj_count=state.proj_count + 2
    )


def agla_step(
    state: AlgoState, sys: GaborSystem, s, alpha: float, beta: float, gamma: float
) -> AlgoState:
    t = (1.0 - gamma) * state.d_prev + gamma * _gla_map(state.c, sys, s)
    step = t - state.t_prev
    c = t + alpha * step
    d = t + beta * step
    return replace(
        state,
        c=c,
        t_prev=t,
        d_prev=d,
        iter=state.iter + 1,
        proj_count=state.proj_count + 2,
    )


def raar_step(state: AlgoState, sys: GaborSystem, s, lam: float) -> AlgoState:
    c = state.c
    p2 = proj_magnitude(c, s)
    r2 = 2.0 * p2 - c
    r1 = 2.0 * proj_range(r2, sys) - r2
    new = 0.5 * lam * (c + r1) + (1.0 - lam) * p2
    return replace(state, c=new, iter=state.iter + 1, proj_count=state.proj_count + 2)


def dm_step(
    state: AlgoState, sys: GaborSystem, s, rho: float, elser_sign: bool = False
) -> AlgoState:
    """Difference map step.

    With ``elser_sign`` the inner map towards the consistent set uses
    ``-1/rho`` instead of ``+1/rho``.
    """
    if rho == 0:
        raise ValueError("rho must be nonzero")
    c = state.c
    p2 = proj_magnitude(c, s)
    p1 = proj_range(c, sys)
    t = p2 + (p2 - c) / rho
    if elser_sign:
        u = p1 - (p1 - c) / rho
    else:
        u = p1 + (p1 - c) / rho
    new = c + rho * (proj_range(t, sys) - proj_magnitude(u, s))
    return replace(state, c=new, iter=state.iter + 1, proj_count=state.proj_count + 4)


def stepper(cfg: AlgoConfig) -> Callable[[AlgoState, GaborSystem, np.ndarray], AlgoState]:
    """Bind the configured parameters to the matching step function."""
    k = cfg.kind
    if k is Algorithm.GLA:
        return gla_step
    if k is Algorithm.FGLA:
        return lambda st, sys, s: fgla_step(st, sys, s, cfg.alpha)
    if k is Algorithm.AGLA:
        return lambda st, sys, s: agla_step(st, sys, s, cfg.alpha, cfg.beta, cfg.gamma)
    if k is Algorithm.RAAR:
        return lambda st, sys, s: raar_step(st, sys, s, cfg.lam)
    elser = k is Algorithm.DM_ELSER
    return lambda st, sys, s: dm_step(st, sys, s, cfg.rho, elser)


def init_state(cfg: AlgoConfig, sys: GaborSystem, s, c0) -> AlgoState:
    """Fresh solver state at ``c0``; momentum buffers start at ``P1(P2(c0))``.

    The buffer initialisation is not counted in ``proj_count``.
    """
    state = AlgoState(c=np.asarray(c0, dtype=complex))
    if cfg.kind in (Algorithm.FGLA, Algorithm.AGLA):
        t0 = _gla_map(state.c, sys, s)
        state.t_prev = t0
        state.d_prev = t0
    return state


def _check_shapes(sys, s, c0=None):
    if s.shape != sys.shape:
        raise ValueError(f"target shape {s.shape} does not match frame shape {sys.shape}")
    if c0 is not None and np.shape(c0) != sys.shape:
        raise ValueError(f"initial grid shape {np.shape(c0)} does not match {sys.shape}")


def _iterate(cfg, sys, s, state, n_iter, timing, start_iter=0, start_proj=0):
    step = stepper(cfg)
    ssnrs = np.empty(n_iter)
    objs = np.empty(n_iter)
    projs = np.empty(n_iter, dtype=np.int64)
    elapsed = np.zeros(n_iter, dtype=np.int64)
    t0 = time.perf_counter_ns()
    for n in range(n_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            state = step(state, sys, s)
        if not np.all(np.isfinite(state.c)):
            raise DivergedError(cfg.kind, start_iter + n + 1)
        ssnrs[n] = ssnr(state.c, s)
        objs[n] = objective(state.c, s)
        projs[n] = start_proj + state.proj_count
        if timing:
            elapsed[n] = time.perf_counter_ns() - t0
    return state, ssnrs, objs, projs, elapsed


def run(
    cfg: AlgoConfig,
    sys: GaborSystem,
    s,
    c0=None,
    *,
    timing: bool = True,
) -> RunTrace:
    """Run one solver for ``cfg.n_iter`` iterations.

    Parameters
    ----------
    cfg : AlgoConfig
    sys : GaborSystem
    s : ndarray
        Target magnitudes, shape ``sys.shape``.
    c0 : ndarray, optional
        Starting grid; defaults to ``init_coefficients(s, cfg.init, cfg.seed)``.
    timing : bool
        Record wall-clock time per iteration.

    Raises
    ------
    DivergedError
        If an iterate contains NaN or Inf.
    """
    return run_chain([(cfg, cfg.n_iter)], sys, s, c0, timing=timing)


def run_chain(
    stages: Sequence[tuple[AlgoConfig, int]],
    sys: GaborSystem,
    s,
    c0=None,
    *,
    timing: bool = True,
) -> RunTrace:
    """Run solvers back to back, each starting from the last grid of the previous.

    Momentum buffers are rebuilt at each stage boundary. Elapsed time keeps
    accumulating across stages.
    """
    if not stages:
        raise ValueError("run_chain needs at least one stage")
    s = check_target(s)
    _check_shapes(sys, s, c0)
    first = stages[0][0]
    c = init_coefficients(s, first.init, first.seed) if c0 is None else np.asarray(c0)
    parts = []
    done = 0
    proj = 0
    offset_ns = 0
    for cfg, budget in stages:
        if int(budget) != budget or budget < 0:
            raise ValueError(f"stage budget must be a nonnegative integer, got {budget}")
        if budget == 0:
            continue
        state = init_state(cfg, sys, s, c)
        state, ss, ob, pc, el = _iterate(cfg, sys, s, state, int(budget), timing, done, proj)
        parts.append((ss, ob, pc, el + offset_ns))
        c = state.c
        done += budget
        proj = int(pc[-1])
        offset_ns = int(parts[-1][3][-1])
    if not parts:
        raise ValueError("run_chain needs a positive total iteration budget")
    cat = [np.concatenate(col) for col in zip(*parts)]
    return RunTrace(
        iters=np.arange(1, done + 1),
        ssnr=cat[0],
        objective=cat[1],
        proj_count=cat[2],
        elapsed_ns=cat[3],
        signal=synthesize(c, sys),
        coefficients=c,
    )

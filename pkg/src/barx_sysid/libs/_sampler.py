"""
Description: Hamiltonian Monte Carlo for the Bayesian ARX posterior.

Trajectories are either built by recursive doubling with a no-U-turn stop and
multinomial state selection, or by a fixed number of leapfrog steps with a
Metropolis correction. Warmup tunes the step size by dual averaging and a
diagonal mass matrix over expanding windows. A random-walk Metropolis sampler
is provided to cross-check results on small problems.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from ._grad import LogPosterior
from ._model import (
    ModelConfig,
    ParameterVector,
    RegressionDataset,
    initialize,
    log_posterior_unconstrained,
    transform,
)

logger = logging.getLogger(__name__)

Target = Callable[[np.ndarray], Tuple[float, np.ndarray]]

TRAJECTORIES = ("nuts", "static")
STAT_NAMES = (
    "accept_stat",
    "n_leapfrog",
    "tree_depth",
    "divergent",
    "energy",
    "log_density",
)
PARAMETER_NAMES = ("a", "b", "w", "mu", "sigma", "sigma_f", "sigma_mu", "e0")
# diagonal of the identity multiple the mass estimate is shrunk towards
MASS_SHRINK_TARGET = 1e-3


class SamplerAbortError(RuntimeError):
    """Raised when a chain cannot make a single valid warmup transition."""


@dataclass(frozen=True)
class HmcConfig:
    """
    Sampler settings.

    Parameters
    ----------
    n_iterations : int
        Total iterations per chain, warmup included.
    n_warmup : int
        Iterations spent adapting; these are discarded.
    n_chains : int
        Number of independent chains.
    target_accept : float
        Acceptance statistic targeted by dual averaging.
    max_tree_depth : int
        Maximum number of trajectory doublings.
    init_step_size : float
        Step size before the first heuristic search.
    seed : int, optional
        Root seed; drawn from entropy by ``resolve_seed`` when missing.
    trajectory : str
        ``"nuts"`` (dynamic doubling) or ``"static"`` (fixed length).
    n_leapfrog : int
        Base trajectory length of the static policy.
    jitter : float
        Relative jitter of the static trajectory length.
    divergence_threshold : float
        Energy error above which a trajectory is declared divergent.
    max_workers : int, optional
        Cap on the number of chains run concurrently.
    """

    n_iterations: int = 30000
    n_warmup: int = 15000
    n_chains: int = 4
    target_accept: float = 0.8
    max_tree_depth: int = 10
    init_step_size: float = 1.0
    seed: Optional[int] = None
    trajectory: str = "nuts"
    n_leapfrog: int = 16
    jitter: float = 0.2
    divergence_threshold: float = 1000.0
    max_workers: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.n_warmup < self.n_iterations:
            raise ValueError("n_warmup should satisfy 0 < n_warmup < n_iterations")
        if self.n_chains < 1:
            raise ValueError("n_chains should be at least 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept should lie in (0, 1)")
        if self.max_tree_depth < 1:
            raise ValueError("max_tree_depth should be at least 1")
        if not self.init_step_size > 0:
            raise ValueError("init_step_size should be positive")
        if self.trajectory not in TRAJECTORIES:
            raise ValueError(
                f"trajectory should be one of {TRAJECTORIES}, "
                f"got {self.trajectory!r}"
            )
        if self.n_leapfrog < 1:
            raise ValueError("n_leapfrog should be at least 1")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter should lie in [0, 1)")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold should be positive")
        if self.max_workers is not None and self.max_workers < 1:
            raise ValueError("max_workers should be at least 1")

    @property
    def n_kept(self) -> int:
        return self.n_iterations - self.n_warmup

    def policy(self) -> "TrajectoryPolicy":
        return TrajectoryPolicy(
            kind=self.trajectory,
            max_tree_depth=self.max_tree_depth,
            n_leapfrog=self.n_leapfrog,
            jitter=self.jitter,
            divergence_threshold=self.divergence_threshold,
        )

    def resolve_seed(self) -> "HmcConfig":
        """Return a copy with a concrete seed, drawing one if needed."""
        if self.seed is not None:
            return self
        seed = int(np.random.SeedSequence().entropy % (2**63))
        warnings.warn(f"no seed given, using seed {seed} drawn from entropy")
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "HmcConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown sampler settings: {sorted(unknown)}")
        return cls(**values)


@dataclass(frozen=True)
class TrajectoryPolicy:
    kind: str = "nuts"
    max_tree_depth: int = 10
    n_leapfrog: int = 16
    jitter: float = 0.2
    divergence_threshold: float = 1000.0


@dataclass
class PhaseState:
    """Position and momentum, with the log-density and gradient at ``z``."""

    z: np.ndarray
    p: np.ndarray
    log_density: float = np.nan
    grad: Optional[np.ndarray] = None
    divergent: bool = False

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.z.shape != self.p.shape:
            raise ValueError(
                f"position and momentum shapes differ "
                f"({self.z.shape} != {self.p.shape})"
            )


@dataclass
class Transition:
    z: np.ndarray
    log_density: float
    grad: np.ndarray
    accept_stat: float
    divergent: bool
    tree_depth: int
    n_leapfrog: int
    energy: float


def _check_mass(mass_diag: np.ndarray) -> np.ndarray:
    mass_diag = np.asarray(mass_diag, dtype=float)
    if np.any(~(mass_diag > 0)):
        raise ValueError("mass matrix entries should be positive")
    return mass_diag


def kinetic_energy(p: np.ndarray, mass_diag: np.ndarray) -> float:
    return 0.5 * float(np.sum(p * p / mass_diag))


def hamiltonian(
    state: PhaseState, mass_diag: np.ndarray, logpost: float
) -> float:
    """Potential ``-logpost`` plus the kinetic energy of the momentum."""
    mass_diag = _check_mass(mass_diag)
    return -logpost + kinetic_energy(state.p, mass_diag)


def _evaluate(target: Target, z: np.ndarray) -> Tuple[float, np.ndarray, bool]:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        try:
            value, grad = target(z)
        except (FloatingPointError, OverflowError):
            return -np.inf, np.full(len(z), np.nan), False
    ok = bool(np.isfinite(value)) and bool(np.all(np.isfinite(grad)))
    return float(value), np.asarray(grad, dtype=float), ok


def leapfrog(
    state: PhaseState,
    step_size: float,
    n_steps: int,
    mass_diag: np.ndarray,
    gradfn: Target,
) -> PhaseState:
    """
    Integrate Hamiltonian dynamics with ``n_steps`` leapfrog steps.

    A negative ``step_size`` integrates backwards in time. A non-finite
    log-density or gradient stops the integration and returns a state flagged
    as divergent.
    """
    if step_size == 0:
        raise ValueError("step size should be non-zero")
    if n_steps < 1:
        raise ValueError("n_steps should be at least 1")
    grad = state.grad
    if grad is None:
        _, grad, ok = _evaluate(gradfn, state.z)
        if not ok:
            return replace(state, divergent=True)
    z = state.z.copy()
    p = state.p + 0.5 * step_size * grad
    for i in range(n_steps):
        z = z + step_size * p / mass_diag
        log_density, grad, ok = _evaluate(gradfn, z)
        if not ok:
            return PhaseState(z, p, -np.inf, grad, divergent=True)
        kick = step_size if i < n_steps - 1 else 0.5 * step_size
        p = p + kick * grad
    return PhaseState(z, p, log_density, grad)


def _draw_momentum(rng: np.random.Generator, mass_diag: np.ndarray):
    return rng.standard_normal(len(mass_diag)) * np.sqrt(mass_diag)


def _energy(state: PhaseState, mass_diag: np.ndarray) -> float:
    if state.divergent or not np.isfinite(state.log_density):
        return np.inf
    return -state.log_density + kinetic_energy(state.p, mass_diag)


@dataclass
class _Tree:
    left: PhaseState
    right: PhaseState
    proposal: PhaseState
    log_weight: float
    p_sum: np.ndarray
    sum_accept: float = 0.0
    n_leapfrog: int = 0
    divergent: bool = False
    turning: bool = False


def _is_turning(tree: _Tree, mass_diag: np.ndarray) -> bool:
    p_sum = tree.p_sum
    return (
        float(np.dot(tree.left.p / mass_diag, p_sum)) <= 0
        or float(np.dot(tree.right.p / mass_diag, p_sum)) <= 0
    )


def _build_tree(
    target: Target,
    state: PhaseState,
    direction: int,
    depth: int,
    step_size: float,
    mass_diag: np.ndarray,
    h0: float,
    rng: np.random.Generator,
    threshold: float,
) -> _Tree:
    if depth == 0:
        new = leapfrog(state, direction * step_size, 1, mass_diag, target)
        delta = _energy(new, mass_diag) - h0
        if np.isnan(delta):
            delta = np.inf
        return _Tree(
            left=new,
            right=new,
            proposal=new,
            log_weight=-delta,
            p_sum=new.p.copy(),
            sum_accept=float(np.exp(min(0.0, -delta))),
            n_leapfrog=1,
            divergent=bool(delta > threshold),
        )

    inner = _build_tree(
        target, state, direction, depth - 1, step_size, mass_diag, h0, rng,
        threshold,
    )
    if inner.divergent or inner.turning:
        return inner
    edge = inner.right if direction > 0 else inner.left
    outer = _build_tree(
        target, edge, direction, depth - 1, step_size, mass_diag, h0, rng,
        threshold,
    )
    log_weight = np.logaddexp(inner.log_weight, outer.log_weight)
    proposal = inner.proposal
    if np.log(rng.random()) < outer.log_weight - log_weight:
        proposal = outer.proposal
    left, right = (
        (inner.left, outer.right) if direction > 0 else (outer.left, inner.right)
    )
    tree = _Tree(
        left=left,
        right=right,
        proposal=proposal,
        log_weight=log_weight,
        p_sum=inner.p_sum + outer.p_sum,
        sum_accept=inner.sum_accept + outer.sum_accept,
        n_leapfrog=inner.n_leapfrog + outer.n_leapfrog,
        divergent=outer.divergent,
        turning=outer.turning,
    )
    if not (tree.divergent or tree.turning):
        tree.turning = _is_turning(tree, mass_diag)
    return tree


def _nuts_transition(
    target: Target,
    start: PhaseState,
    step_size: float,
    mass_diag: np.ndarray,
    rng: np.random.Generator,
    policy: TrajectoryPolicy,
) -> Transition:
    h0 = _energy(start, mass_diag)
    tree = _Tree(
        left=start,
        right=start,
        proposal=start,
        log_weight=0.0,
        p_sum=start.p.copy(),
    )
    depth = 0
    divergent = False
    while depth < policy.max_tree_depth:
        direction = 1 if rng.random() < 0.5 else -1
        edge = tree.right if direction > 0 else tree.left
        sub = _build_tree(
            target, edge, direction, depth, step_size, mass_diag, h0, rng,
            policy.divergence_threshold,
        )
        tree.sum_accept += sub.sum_accept
        tree.n_leapfrog += sub.n_leapfrog
        depth += 1
        if sub.divergent:
            divergent = True
            break
        if sub.turning:
            break
        # progressive sampling biased towards the new subtree
        if np.log(rng.random()) < sub.log_weight - tree.log_weight:
            tree.proposal = sub.proposal
        tree.log_weight = np.logaddexp(tree.log_weight, sub.log_weight)
        tree.p_sum = tree.p_sum + sub.p_sum
        if direction > 0:
            tree.right = sub.right
        else:
            tree.left = sub.left
        if _is_turning(tree, mass_diag):
            break

    chosen = tree.proposal
    return Transition(
        z=chosen.z,
        log_density=chosen.log_density,
        grad=chosen.grad,
        accept_stat=tree.sum_accept / max(tree.n_leapfrog, 1),
        divergent=divergent,
        tree_depth=depth,
        n_leapfrog=tree.n_leapfrog,
        energy=_energy(chosen, mass_diag),
    )


def _static_transition(
    target: Target,
    start: PhaseState,
    step_size: float,
    mass_diag: np.ndarray,
    rng: np.random.Generator,
    policy: TrajectoryPolicy,
) -> Transition:
    low = max(1, int(round(policy.n_leapfrog * (1.0 - policy.jitter))))
    high = max(low, int(round(policy.n_leapfrog * (1.0 + policy.jitter))))
    n_steps = int(rng.integers(low, high + 1))
    end = leapfrog(start, step_size, n_steps, mass_diag, target)
    h0 = _energy(start, mass_diag)
    h1 = _energy(end, mass_diag)
    delta = h1 - h0
    if np.isnan(delta):
        delta = np.inf
    accept_prob = float(np.exp(min(0.0, -delta)))
    accepted = rng.random() < accept_prob
    chosen = end if accepted else start
    return Transition(
        z=chosen.z,
        log_density=chosen.log_density,
        grad=chosen.grad,
        accept_stat=accept_prob,
        divergent=bool(delta > policy.divergence_threshold),
        tree_depth=0,
        n_leapfrog=n_steps,
        energy=h1 if accepted else h0,
    )


def hmc_step(
    target: Target,
    z: np.ndarray,
    step_size: float,
    mass_diag: np.ndarray,
    rng: np.random.Generator,
    trajectory_policy: Optional[TrajectoryPolicy] = None,
    log_density: Optional[float] = None,
    grad: Optional[np.ndarray] = None,
) -> Transition:
    """
    One HMC transition from ``z``.

    The momentum is refreshed from ``N(0, diag(mass_diag))``. Under the
    ``"nuts"`` policy the next state is drawn from the trajectory with weights
    ``exp(H0 - H)``; under ``"static"`` the trajectory end is accepted with
    probability ``min(1, exp(H0 - H1))``.
    """
    mass_diag = _check_mass(mass_diag)
    trajectory_policy = trajectory_policy or TrajectoryPolicy()
    z = np.asarray(z, dtype=float)
    if log_density is None or grad is None:
        log_density, grad, _ = _evaluate(target, z)
    start = PhaseState(z, _draw_momentum(rng, mass_diag), log_density, grad)
    if trajectory_policy.kind == "nuts":
        return _nuts_transition(
            target, start, step_size, mass_diag, rng, trajectory_policy
        )
    if trajectory_policy.kind == "static":
        return _static_transition(
            target, start, step_size, mass_diag, rng, trajectory_policy
        )
    raise ValueError(f"unknown trajectory policy {trajectory_policy.kind!r}")


def find_reasonable_step_size(
    target: Target,
    z: np.ndarray,
    mass_diag: np.ndarray,
    rng: np.random.Generator,
    step_size: float = 1.0,
) -> float:
    """
    Double or halve the step size until the one-step acceptance probability
    crosses one half.
    """
    log_density, grad, ok = _evaluate(target, z)
    if not ok:
        return step_size
    start = PhaseState(z, _draw_momentum(rng, mass_diag), log_density, grad)
    h0 = _energy(start, mass_diag)
    log_half = np.log(0.5)

    def log_accept(eps: float) -> float:
        delta = h0 - _energy(leapfrog(start, eps, 1, mass_diag, target), mass_diag)
        return -np.inf if np.isnan(delta) else delta

    current = log_accept(step_size)
    direction = 1 if current > log_half else -1
    for _ in range(100):
        if direction > 0 and not current > log_half:
            break
        if direction < 0 and not current < log_half:
            break
        candidate = step_size * 2.0**direction
        if not 1e-10 < candidate < 1e7:
            break
        step_size = candidate
        current = log_accept(step_size)
    return step_size


class DualAveraging:
    """
    Step-size adaptation towards a target acceptance statistic.

    Parameters
    ----------
    step_size : float
        Initial step size; the iterates are shrunk towards ``10 * step_size``.
    target_accept : float
        Desired mean acceptance statistic.
    """

    def __init__(
        self,
        step_size: float,
        target_accept: float = 0.8,
        gamma: float = 0.05,
        t0: float = 10.0,
        kappa: float = 0.75,
    ):
        self.target_accept = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.restart(step_size)

    def restart(self, step_size: float) -> None:
        self.mu = np.log(10.0 * step_size)
        self.h_bar = 0.0
        self.x_bar = 0.0
        self.counter = 0

    def update(self, accept_stat: float) -> float:
        if not np.isfinite(accept_stat):
            accept_stat = 0.0
        accept_stat = min(1.0, accept_stat)
        self.counter += 1
        eta = 1.0 / (self.counter + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (
            self.target_accept - accept_stat
        )
        x = self.mu - np.sqrt(self.counter) / self.gamma * self.h_bar
        weight = self.counter ** (-self.kappa)
        self.x_bar = weight * x + (1.0 - weight) * self.x_bar
        return float(np.exp(x))

    @property
    def final_step_size(self) -> float:
        if self.counter == 0:
            return float(np.exp(self.mu) / 10.0)
        return float(np.exp(self.x_bar))


def warmup_windows(
    n_warmup: int,
    init_buffer: int = 75,
    term_buffer: int = 50,
    base_window: int = 25,
) -> List[Tuple[int, int]]:
    """
    Mass-matrix estimation windows as ``(start, end)`` iteration ranges.

    A fast initial buffer and a terminal buffer tune only the step size; in
    between, windows double in length and the last one absorbs any remainder.
    """
    if init_buffer + base_window + term_buffer > n_warmup:
        init_buffer = int(0.15 * n_warmup)
        term_buffer = int(0.1 * n_warmup)
        base_window = n_warmup - init_buffer - term_buffer
    windows = []
    start, size = init_buffer, base_window
    last = n_warmup - term_buffer
    while size > 0 and start < last:
        end = start + size
        if end + 2 * size > last:
            end = last
        windows.append((start, end))
        start, size = end, 2 * size
    return windows


def regularized_variance(draws: np.ndarray) -> np.ndarray:
    """
    Windowed variance shrunk towards the scaled identity ``1e-3 I`` with
    weight ``5 / (n + 5)``.
    """
    n = len(draws)
    variance = np.var(draws, axis=0, ddof=1) if n > 1 else np.ones(draws.shape[1])
    return (n / (n + 5.0)) * variance + MASS_SHRINK_TARGET * (5.0 / (n + 5.0))


@dataclass
class ChainResult:
    z: np.ndarray
    stats: dict
    step_size: float
    mass_diag: np.ndarray
    warmup_divergences: int = 0


def _run_warmup_and_sampling(
    target: Target,
    z0: np.ndarray,
    config: HmcConfig,
    rng: np.random.Generator,
    chain_index: int,
    progress: Optional[Callable],
) -> ChainResult:
    dim = len(z0)
    policy = config.policy()
    mass_diag = np.ones(dim)
    z = np.asarray(z0, dtype=float)
    log_density, grad, ok = _evaluate(target, z)
    if not ok:
        raise SamplerAbortError(
            f"chain {chain_index}: log-density is not finite at the initial "
            "point"
        )

    step_size = find_reasonable_step_size(
        target, z, mass_diag, rng, config.init_step_size
    )
    adapter = DualAveraging(step_size, config.target_accept)
    windows = dict(warmup_windows(config.n_warmup))
    window_ends = {end: start for start, end in windows.items()}
    window_draws: List[np.ndarray] = []
    in_window = False

    n_kept = config.n_kept
    stats = {
        "accept_stat": np.zeros(n_kept),
        "n_leapfrog": np.zeros(n_kept, dtype=int),
        "tree_depth": np.zeros(n_kept, dtype=int),
        "divergent": np.zeros(n_kept, dtype=bool),
        "energy": np.zeros(n_kept),
        "log_density": np.zeros(n_kept),
    }
    kept = np.zeros((n_kept, dim))
    warmup_divergences = 0

    iterations = range(config.n_iterations)
    if progress is not None:
        iterations = progress(
            iterations, desc=f"chain {chain_index}", position=chain_index
        )

    for i in iterations:
        if i in windows:
            in_window = True
            window_draws = []
        transition = hmc_step(
            target, z, step_size, mass_diag, rng, policy, log_density, grad
        )
        z = transition.z
        log_density, grad = transition.log_density, transition.grad

        if i < config.n_warmup:
            warmup_divergences += int(transition.divergent)
            step_size = adapter.update(transition.accept_stat)
            if in_window:
                window_draws.append(z)
            if i + 1 in window_ends:
                in_window = False
                mass_diag = 1.0 / regularized_variance(np.array(window_draws))
                step_size = find_reasonable_step_size(
                    target, z, mass_diag, rng, step_size
                )
                adapter.restart(step_size)
                logger.debug(
                    "chain %d: mass matrix updated at iteration %d, "
                    "step size %.4g",
                    chain_index,
                    i + 1,
                    step_size,
                )
            if i + 1 == config.n_warmup:
                if warmup_divergences == config.n_warmup:
                    raise SamplerAbortError(
                        f"chain {chain_index}: every warmup transition "
                        "diverged"
                    )
                step_size = adapter.final_step_size
                logger.info(
                    "chain %d: warmup done, step size %.4g, "
                    "%d warmup divergences",
                    chain_index,
                    step_size,
                    warmup_divergences,
                )
            continue

        k = i - config.n_warmup
        kept[k] = z
        stats["accept_stat"][k] = transition.accept_stat
        stats["n_leapfrog"][k] = transition.n_leapfrog
        stats["tree_depth"][k] = transition.tree_depth
        stats["divergent"][k] = transition.divergent
        stats["energy"][k] = transition.energy
        stats["log_density"][k] = log_density

    n_divergent = int(stats["divergent"].sum())
    if n_divergent:
        logger.warning(
            "chain %d: %d divergent transitions after warmup",
            chain_index,
            n_divergent,
        )
    return ChainResult(
        z=kept,
        stats=stats,
        step_size=step_size,
        mass_diag=mass_diag,
        warmup_divergences=warmup_divergences,
    )


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Independent stream for one chain of a seeded run."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(chain_index),))
    return np.random.Generator(np.random.PCG64(sequence))


def rng_metadata(seed: int) -> dict:
    return {
        "bit_generator": "PCG64",
        "seeding": "SeedSequence(entropy=seed, spawn_key=(chain_index,))",
        "seed": int(seed),
        "numpy": np.__version__,
    }


@dataclass
class PosteriorDraws:
    """
    Retained draws of one or more chains.

    ``z_draws`` has shape ``(n_chains, n_kept, dimension)``; the sampler
    statistics and the constrained parameters are arrays with the same two
    leading axes. ``z_draws`` is ``None`` for draws read back from disk.
    """

    z_draws: Optional[np.ndarray]
    stats: dict
    model_config: Optional[ModelConfig] = None
    constrained: dict = field(default_factory=dict)
    step_size: Optional[np.ndarray] = None
    mass_diag: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return next(iter(self.stats.values())).shape[0]

    @property
    def n_kept(self) -> int:
        return next(iter(self.stats.values())).shape[1]

    @property
    def n_draws(self) -> int:
        return self.n_chains * self.n_kept

    def __getitem__(self, name: str) -> np.ndarray:
        return self.constrained[name]

    def flat(self, name: str) -> np.ndarray:
        """Constrained parameter ``name`` with the chains concatenated."""
        values = self.constrained[name]
        return values.reshape((self.n_draws,) + values.shape[2:])

    def coefficients(self) -> np.ndarray:
        """``(n_draws, n_a + n_b)`` matrix of the regression coefficients."""
        return np.concatenate((self.flat("a"), self.flat("b")), axis=1)

    def theta(self, chain: int, draw: int) -> ParameterVector:
        return ParameterVector(
            **{
                name: self.constrained[name][chain, draw]
                for name in PARAMETER_NAMES
            }
        )

    @classmethod
    def from_unconstrained(
        cls,
        z_draws: np.ndarray,
        stats: dict,
        model_config: ModelConfig,
        **kwargs,
    ) -> "PosteriorDraws":
        n_chains, n_kept, _ = z_draws.shape
        constrained = {}
        for c in range(n_chains):
            for i in range(n_kept):
                theta, _ = transform(z_draws[c, i], model_config)
                for name, value in theta.to_dict().items():
                    constrained.setdefault(name, []).append(value)
        constrained = {
            name: np.asarray(values, dtype=float).reshape(
                (n_chains, n_kept) + np.shape(values[0])
            )
            for name, values in constrained.items()
        }
        return cls(
            z_draws=z_draws,
            stats=stats,
            model_config=model_config,
            constrained=constrained,
            **kwargs,
        )

    def thin(self, max_draws: Optional[int]) -> "PosteriorDraws":
        """Keep at most ``max_draws`` evenly spaced draws in total."""
        if max_draws is None or max_draws >= self.n_draws:
            return self
        per_chain = max(1, max_draws // self.n_chains)
        index = np.unique(
            np.linspace(0, self.n_kept - 1, per_chain).round().astype(int)
        )
        return replace(
            self,
            z_draws=None if self.z_draws is None else self.z_draws[:, index],
            stats={k: v[:, index] for k, v in self.stats.items()},
            constrained={k: v[:, index] for k, v in self.constrained.items()},
        )

    def permute_components(self, order) -> "PosteriorDraws":
        """Relabel the mixture components of every draw."""
        order = np.asarray(order)
        constrained = dict(self.constrained)
        for name in ("w", "mu", "sigma"):
            constrained[name] = self.constrained[name][..., order]
        return replace(self, z_draws=None, constrained=constrained)

    def to_records(self):
        """One dictionary per draw, chain-major, for line-delimited JSON."""
        for c in range(self.n_chains):
            for i in range(self.n_kept):
                record = {"chain": c, "draw": i}
                for name in PARAMETER_NAMES:
                    value = self.constrained[name][c, i]
                    record[name] = (
                        value.tolist() if np.ndim(value) else float(value)
                    )
                for name in STAT_NAMES:
                    value = self.stats[name][c, i]
                    record[name] = value.item()
                yield record

    def to_dataframe(self) -> pd.DataFrame:
        """Wide table with one row per draw and one column per scalar."""
        columns = {
            "chain": np.repeat(np.arange(self.n_chains), self.n_kept),
            "draw": np.tile(np.arange(self.n_kept), self.n_chains),
        }
        for name in PARAMETER_NAMES:
            values = self.flat(name)
            if values.ndim == 1:
                columns[name] = values
            else:
                for k in range(values.shape[1]):
                    columns[f"{name}{k + 1}"] = values[:, k]
        for name in STAT_NAMES:
            columns[name] = self.stats[name].reshape(-1)
        return pd.DataFrame(columns)


def _resolve_workers(config: HmcConfig) -> int:
    if config.max_workers is not None:
        return min(config.max_workers, config.n_chains)
    return config.n_chains


def _stack(results: List[ChainResult]) -> Tuple[np.ndarray, dict]:
    z_draws = np.stack([r.z for r in results])
    stats = {
        name: np.stack([r.stats[name] for r in results]) for name in STAT_NAMES
    }
    return z_draws, stats


def sample_target(
    target: Target,
    init: Callable[[np.random.Generator], np.ndarray],
    config: HmcConfig,
    progress: Optional[Callable] = None,
) -> Tuple[np.ndarray, dict, List[ChainResult]]:
    """
    Run ``config.n_chains`` chains on an arbitrary differentiable target.

    Parameters
    ----------
    target : callable
        Returns the log-density and its gradient at a point.
    init : callable
        Draws a chain's starting point from that chain's generator.
    config : HmcConfig
        Sampler settings; ``seed`` must be set.
    progress : callable, optional
        Wraps the iteration range, e.g. ``tqdm``.

    Returns
    -------
    tuple
        Retained draws ``(n_chains, n_kept, dim)``, stacked statistics and the
        per-chain results. Results are ordered by chain index whatever the
        execution order.
    """
    if config.seed is None:
        raise ValueError("seed should be resolved before sampling")

    def run(chain_index: int) -> ChainResult:
        rng = chain_rng(config.seed, chain_index)
        z0 = np.asarray(init(rng), dtype=float)
        logger.info("chain %d: sampling %d iterations", chain_index,
                    config.n_iterations)
        return _run_warmup_and_sampling(
            target, z0, config, rng, chain_index, progress
        )

    workers = _resolve_workers(config)
    if workers == 1:
        results = [run(c) for c in range(config.n_chains)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(config.n_chains)))
    z_draws, stats = _stack(results)
    return z_draws, stats, results


def run_chains(
    data: RegressionDataset,
    model_config: ModelConfig,
    hmc_config: HmcConfig,
    progress: Optional[Callable] = None,
) -> PosteriorDraws:
    """
    Sample the posterior of the Bayesian ARX model.

    Each chain starts from its own randomized initial point and its own
    generator derived from ``(seed, chain_index)``.
    """
    hmc_config = hmc_config.resolve_seed()
    target = LogPosterior(data, model_config)
    z_draws, stats, results = sample_target(
        target,
        lambda rng: initialize(model_config, data, rng),
        hmc_config,
        progress,
    )
    return PosteriorDraws.from_unconstrained(
        z_draws,
        stats,
        model_config,
        step_size=np.array([r.step_size for r in results]),
        mass_diag=np.stack([r.mass_diag for r in results]),
        metadata={
            "sampler": hmc_config.to_dict(),
            "rng": rng_metadata(hmc_config.seed),
            "warmup_divergences": [r.warmup_divergences for r in results],
        },
    )


def random_walk_metropolis(
    log_density: Callable[[np.ndarray], float],
    z0: np.ndarray,
    n_iterations: int,
    proposal_scale: float,
    rng: np.random.Generator,
    n_warmup: int = 0,
) -> ChainResult:
    """
    Gaussian random-walk Metropolis.

    The proposal is symmetric, so the acceptance ratio is the ratio of target
    densities alone.
    """
    if not proposal_scale > 0:
        raise ValueError("proposal_scale should be positive")
    if not 0 <= n_warmup < n_iterations:
        raise ValueError("n_warmup should satisfy 0 <= n_warmup < n_iterations")
    z = np.asarray(z0, dtype=float).copy()
    current = float(log_density(z))
    n_kept = n_iterations - n_warmup
    kept = np.zeros((n_kept, len(z)))
    stats = {
        "accept_stat": np.zeros(n_kept),
        "n_leapfrog": np.zeros(n_kept, dtype=int),
        "tree_depth": np.zeros(n_kept, dtype=int),
        "divergent": np.zeros(n_kept, dtype=bool),
        "energy": np.zeros(n_kept),
        "log_density": np.zeros(n_kept),
    }
    for i in range(n_iterations):
        candidate = z + proposal_scale * rng.standard_normal(len(z))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            proposed = float(log_density(candidate))
        log_ratio = proposed - current
        if np.isnan(log_ratio):
            log_ratio = -np.inf
        if np.log(rng.random()) < log_ratio:
            z, current = candidate, proposed
        if i >= n_warmup:
            k = i - n_warmup
            kept[k] = z
            stats["accept_stat"][k] = min(1.0, float(np.exp(min(log_ratio, 0.0))))
            stats["energy"][k] = -current
            stats["log_density"][k] = current
    return ChainResult(
        z=kept, stats=stats, step_size=proposal_scale, mass_diag=np.ones(len(z))
    )


def rwmh_baseline(
    data: RegressionDataset,
    model_config: ModelConfig,
    n_iterations: int,
    proposal_scale: float,
    rng: np.random.Generator,
    n_warmup: Optional[int] = None,
) -> PosteriorDraws:
    """Single random-walk Metropolis chain on the model posterior."""
    n_warmup = n_iterations // 2 if n_warmup is None else n_warmup
    result = random_walk_metropolis(
        lambda z: log_posterior_unconstrained(z, data, model_config),
        initialize(model_config, data, rng),
        n_iterations,
        proposal_scale,
        rng,
        n_warmup,
    )
    z_draws, stats = _stack([result])
    return PosteriorDraws.from_unconstrained(
        z_draws,
        stats,
        model_config,
        step_size=np.array([proposal_scale]),
        metadata={"sampler": "random-walk-metropolis"},
    )

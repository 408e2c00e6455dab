"""Euler-Maruyama simulation of the equilibrium dynamics on finite player sets.

Every model reduces to a linear SDE ``dX = A(t) X dt + sigma dW``. ``A``
holds minus the equilibrium coefficients, arranged by the chosen closure of
the infinite system:

* ``periodic`` wraps player indices modulo ``N``;
* ``zero-tail`` drops coefficients that point past either end.

Randomness is keyed per path: path ``k`` draws its normals from a Philox
stream with key ``(seed, k)``, step-major and player-minor. Any path can be
regenerated alone, and the worker count does not change any output bit.
Changing ``block_size`` changes the shape of the batched matrix products,
so results then agree only to rounding.
"""

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass, replace

import numpy as np

from .catalan import StationaryCoefficients, stationary_chain_coeffs, variance_chain
from .errors import SimulationError, ValidationError
from .riccati import RiccatiSolution
from .tree import TreeRiccatiSolution
from .twosided import TwoSidedStationary

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "CostEstimate",
    "DeviationRow",
    "VarianceCrosscheck",
    "simulate",
    "estimate_cost",
    "nash_deviation_test",
    "exact_variance_crosscheck",
    "RNG_ID",
]

RNG_ID = "numpy-Philox4x64/key=(seed,path)/standard_normal/step-major"
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``n_players`` is the ring or segment length for the chain models and
    the number of generations for the tree. ``truncation`` defaults to
    ``N - 1`` (chain) or ``(N - 1) // 2`` (two-sided) under the periodic
    closure, and to the coefficient window otherwise. ``record_players``
    defaults to all players; ``record_stride`` thins the stored time grid.
    """

    model: str = "chain"
    n_players: int = 64
    paths: int = 1000
    dt: float = 0.01
    seed: int = 0
    boundary: str = "periodic"
    truncation: int = None
    horizon: float = None
    x0: object = 0.0
    record_players: tuple = None
    record_stride: int = 1
    block_size: int = 256
    workers: int = 1
    keep_increments: bool = False

    def __post_init__(self):
        if self.model not in ("chain", "twosided", "tree"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.boundary not in ("periodic", "zero-tail"):
            raise ValidationError(f"unknown boundary policy {self.boundary!r}")
        if self.paths < 1:
            raise ValidationError("paths must be at least 1")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.n_players < 1:
            raise ValidationError("n_players must be at least 1")
        if self.record_stride < 1 or self.block_size < 1 or self.workers < 1:
            raise ValidationError("stride, block size and workers must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass
class PathEnsemble:
    """Simulated trajectories with provenance.

    ``states[path, r, n]`` is the state of player ``players[r]`` at
    ``times[n]``; ``controls`` has the same layout.
    """

    config: SimConfig
    params: object
    times: np.ndarray
    players: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    path_keys: np.ndarray
    truncation: int
    provenance: str
    increments: np.ndarray = None
    rng_id: str = RNG_ID
    meta: dict = field(default_factory=dict)

    def row(self, player):
        hits = np.flatnonzero(self.players == player)
        if hits.size == 0:
            raise ValidationError(f"player {player} was not recorded")
        return int(hits[0])

    def sample_variance(self, player=None, time_index=-1):
        """Sample variance across paths and its standard error."""
        r = 0 if player is None else self.row(player)
        x = self.states[:, r, time_index]
        n = x.size
        centred = x - x.mean()
        m2 = float(np.mean(centred ** 2))
        m4 = float(np.mean(centred ** 4))
        var = m2 * n / (n - 1) if n > 1 else 0.0
        se = math.sqrt(max(m4 - m2 * m2, 0.0) / n) if n > 1 else math.inf
        return var, se

    def metadata(self):
        cfg = asdict(self.config)
        cfg["x0"] = np.asarray(self.config.x0).tolist()
        return {
            "model": self.config.model,
            "params": asdict(self.params) if is_dataclass(self.params) else None,
            "truncation": self.truncation,
            "boundary": self.config.boundary,
            "grid": {"dt": self.config.dt, "steps": self.meta.get("steps"),
                     "record_stride": self.config.record_stride,
                     "horizon": float(self.times[-1])},
            "seed": self.config.seed,
            "rng-id": self.rng_id,
            "coefficients": self.provenance,
            "config": cfg,
            "tool-version": _version(),
        }

    def to_csv(self, path, sidecar=True):
        """Write ``path,player,t,x`` rows and a JSON sidecar next to ``path``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["path", "player", "t", "x"])
            for k in range(self.states.shape[0]):
                for r, player in enumerate(self.players):
                    for n, t in enumerate(self.times):
                        writer.writerow([k, int(player), repr(float(t)),
                                         repr(float(self.states[k, r, n]))])
        if sidecar:
            with open(str(path) + ".json", "w") as fh:
                json.dump(self.metadata(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def _version():
    from . import __version__
    return __version__


def _coefficient_layout(config, coefficients):
    """Return ``(pos, lookup, horizon, K, provenance)``.

    ``pos[a, b]`` is the row of the coefficient vector that couples player
    ``a`` to player ``b``, or ``-1`` if none does. ``lookup(t)`` returns the
    coefficient vector at time ``t``.
    """
    model = config.model
    if model == "tree":
        if not isinstance(coefficients, TreeRiccatiSolution):
            raise ValidationError("tree simulation needs a TreeRiccatiSolution")
        return _tree_layout(config, coefficients)

    if isinstance(coefficients, RiccatiSolution):
        if coefficients.model != model:
            raise ValidationError("coefficient model does not match config")
        indices = np.asarray(coefficients.indices)
        lookup = coefficients.at
        horizon = float(coefficients.grid[-1])
        provenance = f"riccati-{model}"
    elif isinstance(coefficients, StationaryCoefficients) and model == "chain":
        indices = coefficients.indices
        vals = np.asarray(coefficients.values)
        lookup = lambda t: vals  # noqa: E731
        horizon = None
        provenance = f"stationary-{coefficients.provenance}"
    elif isinstance(coefficients, TwoSidedStationary) and model == "twosided":
        indices = coefficients.indices
        vals = np.asarray(coefficients.values)
        lookup = lambda t: vals  # noqa: E731
        horizon = None
        provenance = f"stationary-{coefficients.provenance}"
    else:
        raise ValidationError("coefficients do not match the model")

    N = config.n_players
    window = int(max(abs(indices[0]), abs(indices[-1])))
    if config.truncation is None:
        if config.boundary == "periodic":
            K = min(window, N - 1 if model == "chain" else (N - 1) // 2)
        else:
            K = min(window, N - 1)
    else:
        K = int(config.truncation)
    if K > window:
        raise ValidationError(f"coefficients cover {window} offsets, asked {K}")
    if config.boundary == "periodic":
        limit = N - 1 if model == "chain" else (N - 1) // 2
        if K > limit:
            raise ValidationError(
                f"periodic closure on {N} players allows truncation <= {limit}")

    pos = -np.ones((N, N), dtype=int)
    base = int(indices[0])
    offsets = range(0, K + 1) if model == "chain" else range(-K, K + 1)
    rows = np.arange(N)
    for k in offsets:
        cols = rows + k
        if config.boundary == "periodic":
            pos[rows, cols % N] = k - base
        else:
            ok = (cols >= 0) & (cols < N)
            pos[rows[ok], cols[ok]] = k - base
    return pos, lookup, horizon, K, provenance


def _tree_layout(config, solution):
    M = solution.params.M
    G = config.n_players
    if G - 1 > solution.depth:
        raise ValidationError(
            f"tree of {G} generations needs depth {G - 1}, have {solution.depth}")
    starts = np.cumsum([0] + [M ** g for g in range(G)])
    n_nodes = int(starts[-1])
    pos = -np.ones((n_nodes, n_nodes), dtype=int)
    for g in range(G):
        for k in range(M ** g):
            a = starts[g] + k
            for m in range(G - g):
                lo = starts[g + m] + k * M ** m
                pos[a, lo:lo + M ** m] = m
    horizon = float(solution.grid[-1])
    return pos, solution.at, horizon, solution.depth, "riccati-tree"


def _drift_matrix(pos, coeffs):
    ext = np.append(np.asarray(coeffs, dtype=float), 0.0)
    return -ext[pos]


def _path_generator(seed, path):
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) | (path << 64)))


def _simulate_block(args):
    (first, count, seed, x0, sigma, dt, steps, drift_mats, stride,
     rec, keep, chunk) = args
    n_players = x0.shape[0]
    gens = [_path_generator(seed, first + i) for i in range(count)]
    X = np.broadcast_to(x0, (count, n_players)).astype(float)
    n_rec = steps // stride + 1
    states = np.empty((count, len(rec), n_rec))
    controls = np.empty((count, len(rec), n_rec))
    incs = np.empty((count, len(rec), steps)) if keep else None
    root = math.sqrt(dt)
    constant = len(drift_mats) == 1
    A = drift_mats[0]
    for start in range(0, steps, chunk):
        size = min(chunk, steps - start)
        Z = np.stack([g.standard_normal((size, n_players)) for g in gens], axis=1)
        for s in range(size):
            n = start + s
            if not constant:
                A = drift_mats[n]
            alpha = X @ A.T
            if n % stride == 0:
                states[:, :, n // stride] = X[:, rec]
                controls[:, :, n // stride] = alpha[:, rec]
            dW = root * Z[s]
            if keep:
                incs[:, :, n] = dW[:, rec]
            X = X + alpha * dt + sigma * dW
            if not np.all(np.isfinite(X)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
                raise SimulationError(
                    f"non-finite state on path {first + bad} at t={(n + 1) * dt:.6g}",
                    path=first + bad, time=(n + 1) * dt)
    A = drift_mats[-1]
    states[:, :, -1] = X[:, rec]
    controls[:, :, -1] = (X @ A.T)[:, rec]
    return states, controls, incs


def simulate(config, params, coefficients):
    """Simulate equilibrium trajectories.

    Parameters
    ----------
    config : SimConfig
    params : ChainParams, TwoSidedParams or TreeParams
        Supplies ``sigma`` and, for stationary coefficients, the horizon
        unless ``config.horizon`` is set.
    coefficients : RiccatiSolution, StationaryCoefficients,
        TwoSidedStationary or TreeRiccatiSolution

    Returns
    -------
    PathEnsemble
    """
    pos, lookup, horizon, K, provenance = _coefficient_layout(config, coefficients)
    if config.horizon is not None:
        if horizon is not None and abs(config.horizon - horizon) > 1e-12:
            raise ValidationError("config horizon differs from the Riccati horizon")
        horizon = float(config.horizon)
    elif horizon is None:
        horizon = float(params.horizon)
    steps = int(round(horizon / config.dt))
    if steps < 10 or abs(steps * config.dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValidationError("dt must divide the horizon into at least 10 steps")
    if steps % config.record_stride:
        raise ValidationError("record_stride must divide the number of steps")

    n_players = pos.shape[0]
    x0 = np.broadcast_to(np.asarray(config.x0, dtype=float), (n_players,)).copy()
    rec = (np.arange(n_players) if config.record_players is None
           else np.asarray(config.record_players, dtype=int))
    if rec.size == 0 or rec.min() < 0 or rec.max() >= n_players:
        raise ValidationError("recorded players outside the simulated set")

    if isinstance(coefficients, (StationaryCoefficients, TwoSidedStationary)):
        drift_mats = [_drift_matrix(pos, lookup(0.0))]
    else:
        drift_mats = [_drift_matrix(pos, lookup(min(n * config.dt, horizon)))
                      for n in range(steps + 1)]

    sigma = float(params.sigma)
    chunk = max(1, min(steps, 4_000_000 // max(1, config.block_size * n_players)))
    jobs = []
    for first in range(0, config.paths, config.block_size):
        count = min(config.block_size, config.paths - first)
        jobs.append((first, count, config.seed, x0, sigma, config.dt, steps,
                     drift_mats, config.record_stride, rec,
                     config.keep_increments, chunk))
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_simulate_block, jobs))
    else:
        parts = [_simulate_block(job) for job in jobs]

    states = np.concatenate([p[0] for p in parts])
    controls = np.concatenate([p[1] for p in parts])
    incs = (np.concatenate([p[2] for p in parts])
            if config.keep_increments else None)
    times = np.arange(0, steps + 1, config.record_stride) * config.dt
    keys = np.array([[config.seed, k] for k in range(config.paths)], dtype=np.uint64)
    return PathEnsemble(config, params, times, rec, states, controls, keys, K,
                        provenance, incs, meta={"steps": steps})


@dataclass(frozen=True)
class CostEstimate:
    """Monte Carlo cost with a 95% confidence interval."""

    mean: float
    stderr: float
    ci: tuple
    paths: int
    status: str


def _neighbour_terms(ensemble, player):
    """Players entering the cost of ``player`` and their marginal weights.

    Returns ``(x_self_row, [(weight, rows_subset)...])``: each entry is a
    neighbour set whose average is compared with the player's own state.
    """
    cfg, params = ensemble.config, ensemble.params
    N = cfg.n_players
    if cfg.model == "chain":
        nb = player + 1
        if nb >= N:
            if cfg.boundary != "periodic":
                raise ValidationError("player has no right neighbour")
            nb -= N
        return [(params.p, [ensemble.row(nb)])]
    if cfg.model == "twosided":
        right, left = player + 1, player - 1
        if cfg.boundary == "periodic":
            right, left = right % N, left % N
        elif right >= N or left < 0:
            raise ValidationError("player lacks a neighbour on the segment")
        return [(params.p * params.p1, [ensemble.row(right)]),
                ((1.0 - params.p) * params.q1, [ensemble.row(left)])]
    M = params.M
    starts = np.cumsum([0] + [M ** g for g in range(cfg.n_players)])
    g = int(np.searchsorted(starts, player, side="right") - 1)
    if g + 1 >= cfg.n_players:
        raise ValidationError("leaf nodes have no children in the stored tree")
    k = player - starts[g]
    children = [int(starts[g + 1] + k * M + r) for r in range(M)]
    terms = []
    for d in range(1, M + 1):
        prob = params.p ** d * (1.0 - params.p) ** (M - d)
        for subset in itertools.combinations(children, d):
            terms.append((prob, [ensemble.row(c) for c in subset]))
    return terms


def _path_costs(ensemble, params, player, deviation=None):
    cfg = ensemble.config
    if cfg.record_stride != 1:
        raise ValidationError("cost estimation needs record_stride = 1")
    me = ensemble.row(player)
    x = ensemble.states[:, me, :]
    alpha = ensemble.controls[:, me, :]
    dt = cfg.dt
    if deviation is not None:
        h = np.asarray(deviation, dtype=float)
        shift = np.concatenate([[0.0], np.cumsum(h[:-1]) * dt])
        x = x + shift
        alpha = alpha + h
    distance = np.zeros_like(x)
    for weight, rows in _neighbour_terms(ensemble, player):
        avg = ensemble.states[:, rows, :].mean(axis=1)
        distance += weight * (avg - x) ** 2
    running = 0.5 * alpha ** 2 + 0.5 * params.epsilon * distance
    trap = np.full(running.shape[1], dt)
    trap[[0, -1]] = 0.5 * dt
    return running @ trap + 0.5 * params.c * distance[:, -1]


def _summarize(values, ci_width=None):
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    half = 1.96 * se
    status = "ok"
    if ci_width is not None and 2 * half > ci_width:
        status = "warning"
    return CostEstimate(mean, se, (mean - half, mean + half), n, status)


def estimate_cost(ensemble, params, player, deviation=None, ci_width=None):
    """Monte Carlo estimate of one player's expected cost.

    Running cost ``0.5 alpha^2 + 0.5 eps * (marginalized neighbour
    distance)^2`` by the trapezoid rule, plus ``0.5 c`` times the terminal
    distance. ``deviation`` is an optional deterministic control
    perturbation on the simulation grid. It is added to this player's
    control while all other controls stay fixed, so only this player's
    state moves, by the integrated perturbation.
    """
    return _summarize(_path_costs(ensemble, params, player, deviation), ci_width)


@dataclass(frozen=True)
class DeviationRow:
    delta: float
    mean: float
    stderr: float
    status: str


def _perturbation_grid(perturbation, times):
    if callable(perturbation):
        return np.asarray([perturbation(t) for t in times], dtype=float)
    h = np.asarray(perturbation, dtype=float)
    if h.ndim == 0:
        return np.full(times.size, float(h))
    if h.shape != times.shape:
        raise ValidationError("perturbation must match the time grid")
    return h


def nash_deviation_test(config, params, coefficients, player, perturbation,
                        magnitudes, z=3.0):
    """Cost change of unilateral open-loop deviations under common random numbers.

    Each magnitude ``delta`` adds ``delta * h(t)`` to one player's control.
    Every path is scored in both arms, so the differences share noise.
    Status is ``positive`` or ``negative`` when the mean is ``z`` standard
    errors away from zero, else ``inconclusive``.
    """
    cfg = replace(config, record_stride=1, record_players=None)
    ensemble = simulate(cfg, params, coefficients)
    h = _perturbation_grid(perturbation, ensemble.times)
    base = _path_costs(ensemble, params, player)
    rows = []
    for delta in magnitudes:
        diff = _path_costs(ensemble, params, player, delta * h) - base
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0
        if mean - z * se > 0:
            status = "positive"
        elif mean + z * se < 0:
            status = "negative"
        else:
            status = "inconclusive"
        rows.append(DeviationRow(float(delta), mean, se, status))
    return rows


@dataclass(frozen=True)
class VarianceCrosscheck:
    analytic: float
    simulated: float
    stderr: float
    z: float


def exact_variance_crosscheck(params, t, paths=2000, n_players=64, dt=0.01,
                              seed=0, player=0):
    """Compare the variance quadrature with a fresh periodic-chain simulation.

    Uses the closed-form stationary coefficients with truncation ``N - 1``
    and zero initial data.
    """
    if not 0 < params.p <= 1:
        raise ValidationError("variance cross-check needs 0 < p <= 1")
    if t == 0:
        return VarianceCrosscheck(0.0, 0.0, 0.0, 0.0)
    analytic = params.sigma ** 2 * variance_chain(t, params.p)
    coeffs = stationary_chain_coeffs(params.p, params.epsilon, n_players - 1)
    steps = int(round(t / dt))
    cfg = SimConfig(model="chain", n_players=n_players, paths=paths, dt=dt,
                    seed=seed, horizon=t, record_players=(player,),
                    record_stride=steps)
    ens = simulate(cfg, params, coeffs)
    var, se = ens.sample_variance(player)
    return VarianceCrosscheck(analytic, var, se, (var - analytic) / se)

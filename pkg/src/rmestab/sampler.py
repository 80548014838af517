"""Rejection sampling of Jacobians at feasible equilibria (the FCS ensemble).

Each draw index ``k`` owns the Philox substream ``(seed, "fcs", model, branch)``
at counter block ``k``: the parameter vector is its first ``P`` uniforms and any
Newton restarts continue from the same substream. Draws are evaluated in
fixed-size blocks, optionally across worker processes, and merged in draw
order, so the ensemble is identical for any worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import equilibria as _eq
from . import linalg as _linalg
from . import models as _models
from .streams import keyed_substream, stream_key

BLOCK_SIZE = 256
DEFAULT_REJECTION_FACTOR = 1000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ParameterRanges:
    """Closed uniform sampling interval per parameter, in model order."""

    names: tuple
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if not (len(self.names) == len(self.lo) == len(self.hi)):
            raise ValueError("names, lo and hi must have equal length")
        for n, a, b in zip(self.names, self.lo, self.hi):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError(f"range for {n} is not finite")
            if a > b:
                raise ValueError(f"range for {n} has lo > hi ({a} > {b})")

    @classmethod
    def for_model(cls, model, overrides=None):
        """Model defaults, with ``overrides`` mapping names (or prefixes) to (lo, hi).

        A prefix such as ``alpha`` applies to every ``alpha_<i>`` of a family model.
        """
        model = _models.get_model(model)
        bounds = dict(zip(model.param_names, model.default_ranges))
        for key, (a, b) in (overrides or {}).items():
            hits = [n for n in bounds if n == key or n.startswith(f"{key}_")]
            if not hits:
                raise KeyError(f"{model.name} has no parameter {key!r}")
            for n in hits:
                bounds[n] = (float(a), float(b))
        names = model.param_names
        return cls(names, tuple(bounds[n][0] for n in names), tuple(bounds[n][1] for n in names))

    @classmethod
    def scaled(cls, model, scale):
        """The alternative ranges used for the robustness scans.

        Lorenz: ``b, sigma in [0, i]``, ``r in [1, i + 1]``. SEIR family:
        ``mu, beta in [0, 1]``, ``alpha, gamma in [0, i]``.
        """
        model = _models.get_model(model)
        i = float(scale)
        if model.name == "lorenz":
            return cls.for_model(model, {"sigma": (0.0, i), "r": (1.0, i + 1.0), "b": (0.0, i)})
        if model.infective:
            return cls.for_model(model, {"alpha": (0.0, i), "gamma": (0.0, i)})
        raise ValueError(f"no scaled ranges defined for {model.name}")

    def as_dict(self):
        return {n: (a, b) for n, a, b in zip(self.names, self.lo, self.hi)}


@dataclass(frozen=True)
class SamplerConfig:
    samples: int
    seed: int = 0
    max_rejections: int = None
    mode: str = "analytic"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.mode not in ("analytic", "numeric"):
            raise ValueError(f"mode must be 'analytic' or 'numeric', got {self.mode!r}")

    @property
    def rejection_budget(self):
        if self.max_rejections is not None:
            return self.max_rejections
        return DEFAULT_REJECTION_FACTOR * self.samples


@dataclass(frozen=True)
class MatrixSample:
    matrix: np.ndarray
    draw_index: int
    origin: str


@dataclass
class Ensemble:
    """``N`` matrices of one order, stored as an ``(N, n, n)`` array."""

    matrices: np.ndarray
    kind: str
    recipe: dict = field(default_factory=dict)
    draw_index: np.ndarray = None
    acceptance_rate: float = 1.0
    states: np.ndarray = None
    params: np.ndarray = None

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=float)
        if self.matrices.ndim != 3 or self.matrices.shape[1] != self.matrices.shape[2]:
            raise ValueError(f"matrices must have shape (N, n, n), got {self.matrices.shape}")
        if self.draw_index is None:
            self.draw_index = np.arange(len(self.matrices))

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, i):
        return MatrixSample(self.matrices[i], int(self.draw_index[i]), self.kind)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def order(self):
        return self.matrices.shape[1]

    @property
    def samples(self):
        return list(self)


@dataclass(frozen=True)
class StabilityEstimate:
    p_hat: float
    se: float
    samples: int

    @property
    def error_bar(self):
        """Half-width of the +/- 2 s.e. Monte Carlo bar."""
        return 2.0 * self.se


def estimate_from_mask(stable):
    stable = np.asarray(stable, dtype=bool)
    n = stable.size
    if n == 0:
        raise ValueError("cannot estimate a stability probability from an empty ensemble")
    p = float(np.count_nonzero(stable)) / n
    return StabilityEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def stability_probability(ensemble):
    """Fraction of matrices whose leading eigenvalue has negative real part."""
    if len(ensemble) == 0:
        raise ValueError("cannot estimate a stability probability from an empty ensemble")
    return estimate_from_mask(_linalg.stable_mask(ensemble.matrices))


def _draw(model, lo, hi, key, branch, mode, k, newton):
    """Evaluate draw ``k``; returns ``(theta, state, jacobian)`` or ``None``."""
    rng = keyed_substream(key, k)
    theta = lo + (hi - lo) * rng.random(model.n_params)
    if mode == "numeric":
        if branch != "endemic":
            raise ValueError("numeric mode only tracks the endemic branch")
        try:
            ep = _eq.equilibrium_numeric(model, theta, newton, rng=rng, draw_index=k)
        except _eq.EquilibriumNotFound:
            return None
        candidates = [ep]
    else:
        try:
            candidates = _eq.equilibria_closed_form(model, theta, draw_index=k, branch=branch)
        except _eq.DegenerateParameters:
            return None
    good = [ep for ep in candidates if _eq.accepted(model, ep, theta)]
    # no branch point, or an ambiguous one (several feasible roots), is a rejection
    if len(good) != 1:
        return None
    x = good[0].state
    return theta, x, _models.jacobian(model, x, theta)


def _run_block(args):
    name, lo, hi, seed, branch, mode, start, stop, newton = args
    model = _models.get_model(name)
    key = stream_key(seed, "fcs", model.name, branch)
    return [_draw(model, lo, hi, key, branch, mode, k, newton) for k in range(start, stop)]


def _check_branch(model, branch):
    if model.name == "toy1":
        valid = {"origin"}
    elif model.name in ("toy2",):
        valid = {"origin", "ep2"}
    elif model.name == "toy3":
        valid = {"origin", "ep2", "ep3"}
    elif model.name == "lorenz":
        valid = {"origin", "plus", "minus"}
    elif model.name == "tyson":
        valid = {"physical", "other"}
    else:
        valid = {"disease-free", "endemic"}
    if branch not in valid:
        raise ValueError(f"{model.name}: unknown branch {branch!r}; expected one of {sorted(valid)}")


def sample_fcs(model, ranges=None, config=None, branch=None, workers=1, newton=None):
    """Sample ``config.samples`` Jacobians at accepted equilibria of ``branch``.

    Raises :class:`SamplingError` once more than ``config.rejection_budget``
    draws have been rejected before the target count is reached.
    """
    model = _models.get_model(model)
    ranges = ranges or ParameterRanges.for_model(model)
    config = config or SamplerConfig(1000)
    branch = branch or model.default_branch
    newton = newton or _eq.NewtonConfig()
    if tuple(ranges.names) != tuple(model.param_names):
        raise ValueError(f"ranges do not match the parameters of {model.name}")
    _check_branch(model, branch)
    if config.mode == "analytic" and model.family and model.size_param > _eq.CLOSED_FORM_MAX_N:
        raise ValueError(f"{model.name}: n > {_eq.CLOSED_FORM_MAX_N} requires numeric mode")
    lo = np.asarray(ranges.lo, dtype=float)
    hi = np.asarray(ranges.hi, dtype=float)

    N = config.samples
    budget = config.rejection_budget
    thetas, states, jacs, idx = [], [], [], []
    rejected = 0
    next_block = 0
    pool = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        while len(jacs) < N:
            wave = max(1, workers or 1)
            tasks = [
                (model.name, lo, hi, config.seed, branch, config.mode,
                 (next_block + b) * BLOCK_SIZE, (next_block + b + 1) * BLOCK_SIZE, newton)
                for b in range(wave)
            ]
            next_block += wave
            results = pool.map(_run_block, tasks) if pool else map(_run_block, tasks)
            for task, block in zip(tasks, results):
                for k, res in enumerate(block, start=task[6]):
                    if len(jacs) == N:
                        break
                    if res is None:
                        rejected += 1
                        if rejected > budget:
                            raise SamplingError(
                                f"{model.name} branch {branch!r}: more than {budget} rejections "
                                f"before {N} acceptances (ranges {ranges.as_dict()})"
                            )
                        continue
                    thetas.append(res[0])
                    states.append(res[1])
                    jacs.append(res[2])
                    idx.append(k)
    finally:
        if pool:
            pool.shutdown()

    draws = idx[-1] + 1
    recipe = {
        "model": model.name,
        "branch": branch,
        "ranges": ranges.as_dict(),
        "seed": config.seed,
        "mode": config.mode,
        "kind": "fcs",
    }
    return Ensemble(
        np.array(jacs), "fcs", recipe, np.array(idx), N / draws, np.array(states), np.array(thetas)
    )

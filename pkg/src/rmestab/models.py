"""Registry of parametric ODE models with analytic Jacobians.

State orderings (fixed; matrix entries are indexed in this order):

=========== ============================== =========================================
model       state                          parameters
=========== ============================== =========================================
lorenz      x, y, z                        sigma, r, b
tyson       u, v, w, y                     k4, k4p, k6, k1aa, k2, k3ct, k7
nowak       x, y, v                        lam, d, beta, a, k, u
seir        S, E, I                        mu, beta, alpha, gamma
sneir:<n>   S, E_1..E_n, I                 mu, beta_1..beta_n, alpha_1..alpha_n, gamma
senir:<n>   S, E, I_1..I_n                 mu, beta, alpha_1..alpha_n, gamma_1..gamma_n
toy1..toy3  x, y                           theta1, theta2
=========== ============================== =========================================

In the cell-cycle model ``k1aa`` stands for the lumped constant ``k1[aa]/[CT]``
and ``k3ct`` for ``k3[CT]``; ``k4p`` is ``k4'``. The equations are implemented
as printed, including the ``y`` equation repeating the ``-k2(v - w)`` term.
``k4 (w - u)(k4'/k4 + u^2)`` is evaluated as ``(w - u)(k4' + k4 u^2)``, which is
the same function without the division by ``k4``.
"""

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "ModelSpec",
    "get_model",
    "rhs",
    "jacobian",
    "toy_jacobian",
    "MODEL_NAMES",
    "FAMILIES",
]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dim: int
    param_names: tuple
    state_names: tuple
    default_ranges: tuple  # one (lo, hi) per parameter
    default_branch: str
    size_param: int = None
    family: str = None
    # indices of infective compartments; empty for non-epidemic models
    infective: tuple = ()
    _rhs: Callable = field(default=None, repr=False, compare=False)
    _jac: Callable = field(default=None, repr=False, compare=False)

    @property
    def n_params(self):
        return len(self.param_names)


def _check(model, x, theta):
    model = get_model(model)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"{model.name}: state must have length {model.dim}, got shape {x.shape}")
    if theta.shape != (model.n_params,):
        raise ValueError(
            f"{model.name}: parameter vector must have length {model.n_params}, got shape {theta.shape}"
        )
    return model, x, theta


def rhs(model, x, theta):
    """Right-hand side ``f(x; theta)``."""
    model, x, theta = _check(model, x, theta)
    return model._rhs(x, theta)


def jacobian(model, x, theta):
    """Analytic Jacobian ``df_i/dx_j`` at ``x``."""
    model, x, theta = _check(model, x, theta)
    return model._jac(x, theta)


def toy_jacobian(a, b):
    return np.array([[-1.0, float(a)], [float(b), -1.0]])


# -- Lorenz -----------------------------------------------------------------

def _lorenz_rhs(s, th):
    x, y, z = s
    sigma, r, b = th
    return np.array([sigma * (y - x), x * (r - z) - y, x * y - b * z])


def _lorenz_jac(s, th):
    x, y, z = s
    sigma, r, b = th
    return np.array([
        [-sigma, sigma, 0.0],
        [r - z, -1.0, -x],
        [y, x, -b],
    ])


# -- Tyson cell cycle ---------------------------------------------------------

def _tyson_rhs(s, th):
    u, v, w, y = s
    k4, k4p, k6, k1aa, k2, k3ct, k7 = th
    return np.array([
        (w - u) * (k4p + k4 * u * u) - k6 * u,
        k1aa - k2 * (v - w) - k6 * u,
        k3ct * (1.0 - w) * (v - w) - k6 * u,
        k1aa - k2 * (v - w) - k7 * (y - v),
    ])


def _tyson_jac(s, th):
    u, v, w, y = s
    k4, k4p, k6, k1aa, k2, k3ct, k7 = th
    g = k4p + k4 * u * u
    return np.array([
        [-g + 2.0 * k4 * u * (w - u) - k6, 0.0, g, 0.0],
        [-k6, -k2, k2, 0.0],
        [-k6, k3ct * (1.0 - w), -k3ct * ((v - w) + (1.0 - w)), 0.0],
        [0.0, k7 - k2, k2, -k7],
    ])


# -- Nowak & Bangham viral dynamics ------------------------------------------------

def _nowak_rhs(s, th):
    x, y, v = s
    lam, d, beta, a, k, u = th
    return np.array([lam - d * x - beta * x * v, beta * x * v - a * y, k * y - u * v])


def _nowak_jac(s, th):
    x, y, v = s
    lam, d, beta, a, k, u = th
    return np.array([
        [-d - beta * v, 0.0, -beta * x],
        [beta * v, -a, beta * x],
        [0.0, k, -u],
    ])


# -- SEIR family --------------------------------------------------------------

def _sneir_split(th, n):
    return th[0], th[1:1 + n], th[1 + n:1 + 2 * n], th[1 + 2 * n]


def _make_sneir(n):
    p = n + 2

    def f(s, th):
        mu, beta, alpha, gamma = _sneir_split(th, n)
        S, E, I = s[0], s[1:1 + n], s[-1]
        out = np.empty(p)
        out[0] = mu - beta.sum() * S * I - mu * S
        out[1:1 + n] = beta * S * I - (mu + alpha) * E
        out[-1] = alpha @ E - (mu + gamma) * I
        return out

    def jac(s, th):
        mu, beta, alpha, gamma = _sneir_split(th, n)
        S, I = s[0], s[-1]
        J = np.zeros((p, p))
        J[0, 0] = -beta.sum() * I - mu
        J[0, -1] = -beta.sum() * S
        idx = np.arange(1, 1 + n)
        J[idx, 0] = beta * I
        J[idx, idx] = -(mu + alpha)
        J[idx, -1] = beta * S
        J[-1, idx] = alpha
        J[-1, -1] = -(mu + gamma)
        return J

    return f, jac


def _senir_split(th, n):
    return th[0], th[1], th[2:2 + n], th[2 + n:2 + 2 * n]


def _make_senir(n):
    p = n + 2

    def f(s, th):
        mu, beta, alpha, gamma = _senir_split(th, n)
        S, E, I = s[0], s[1], s[2:]
        force = beta * S * I.sum()
        out = np.empty(p)
        out[0] = mu - force - mu * S
        out[1] = force - (mu + alpha.sum()) * E
        out[2:] = alpha * E - (mu + gamma) * I
        return out

    def jac(s, th):
        mu, beta, alpha, gamma = _senir_split(th, n)
        S, I = s[0], s[2:]
        J = np.zeros((p, p))
        J[0, 0] = -beta * I.sum() - mu
        J[0, 2:] = -beta * S
        J[1, 0] = beta * I.sum()
        J[1, 1] = -(mu + alpha.sum())
        J[1, 2:] = beta * S
        idx = np.arange(2, 2 + n)
        J[idx, 1] = alpha
        J[idx, idx] = -(mu + gamma)
        return J

    return f, jac


# -- two-variable illustration family -------------------------------------------

def _make_toy(power):
    # dx/dt = -x + theta1 * y**power ; dy/dt = -y + theta2 * x
    def f(s, th):
        x, y = s
        t1, t2 = th
        return np.array([-x + t1 * y ** power, -y + t2 * x])

    def jac(s, th):
        x, y = s
        t1, t2 = th
        return toy_jacobian(power * t1 * y ** (power - 1), t2)

    return f, jac


_UNIT = (0.0, 1.0)


def _fixed_models():
    models = {
        "lorenz": ModelSpec(
            "lorenz", 3, ("sigma", "r", "b"), ("x", "y", "z"),
            ((0.0, 10.0), (1.0, 11.0), (0.0, 10.0)), "plus",
            _rhs=_lorenz_rhs, _jac=_lorenz_jac,
        ),
        "tyson": ModelSpec(
            "tyson", 4, ("k4", "k4p", "k6", "k1aa", "k2", "k3ct", "k7"), ("u", "v", "w", "y"),
            (_UNIT,) * 7, "physical",
            _rhs=_tyson_rhs, _jac=_tyson_jac,
        ),
        "nowak": ModelSpec(
            "nowak", 3, ("lam", "d", "beta", "a", "k", "u"), ("x", "y", "v"),
            (_UNIT,) * 6, "endemic",
            _rhs=_nowak_rhs, _jac=_nowak_jac,
        ),
    }
    f, jac = _make_sneir(1)
    models["seir"] = ModelSpec(
        "seir", 3, ("mu", "beta", "alpha", "gamma"), ("S", "E", "I"),
        (_UNIT,) * 4, "endemic", infective=(2,), _rhs=f, _jac=jac,
    )
    for power in (1, 2, 3):
        f, jac = _make_toy(power)
        models[f"toy{power}"] = ModelSpec(
            f"toy{power}", 2, ("theta1", "theta2"), ("x", "y"),
            (_UNIT,) * 2, "origin" if power == 1 else "ep2",
            _rhs=f, _jac=jac,
        )
    return models


_FIXED = _fixed_models()
MODEL_NAMES = tuple(_FIXED)
FAMILIES = ("sneir", "senir")
_FAMILY_RE = re.compile(r"^(sneir|senir):(\d+)$")


@lru_cache(maxsize=None)
def _family_model(family, n):
    if n < 1:
        raise ValueError(f"{family}: size must be >= 1, got {n}")
    name = f"{family}:{n}"
    if family == "sneir":
        f, jac = _make_sneir(n)
        params = ("mu",) + tuple(f"beta_{i}" for i in range(1, n + 1)) \
            + tuple(f"alpha_{i}" for i in range(1, n + 1)) + ("gamma",)
        states = ("S",) + tuple(f"E_{i}" for i in range(1, n + 1)) + ("I",)
        infective = (n + 1,)
    else:
        f, jac = _make_senir(n)
        params = ("mu", "beta") + tuple(f"alpha_{i}" for i in range(1, n + 1)) \
            + tuple(f"gamma_{i}" for i in range(1, n + 1))
        states = ("S", "E") + tuple(f"I_{i}" for i in range(1, n + 1))
        infective = tuple(range(2, n + 2))
    return ModelSpec(
        name, n + 2, params, states, (_UNIT,) * len(params), "endemic",
        size_param=n, family=family, infective=infective, _rhs=f, _jac=jac,
    )


def get_model(name):
    """Look up a model by CLI name, e.g. ``lorenz`` or ``sneir:4``."""
    if isinstance(name, ModelSpec):
        return name
    key = str(name).strip().lower()
    if key in _FIXED:
        return _FIXED[key]
    m = _FAMILY_RE.match(key)
    if m:
        return _family_model(m.group(1), int(m.group(2)))
    raise KeyError(
        f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}, sneir:<n>, senir:<n>"
    )

"""Equilibrium points: closed forms, damped Newton, and the feasibility filter.

Closed forms used here (derived by hand and checked against ``rhs``):

* SEIR-family endemic point. For S(nE)IR, ``E_i = beta_i S I / (mu + alpha_i)``
  and ``I`` balance give ``S* = (mu + gamma) / sum_i alpha_i beta_i / (mu + alpha_i)``;
  for SE(nI)R, ``I_i = alpha_i E / (mu + gamma_i)`` gives
  ``S* = (mu + sum alpha) / (beta * sum_i alpha_i / (mu + gamma_i))``. In both,
  the susceptible balance fixes the total force of infection,
  ``mu (1 - S*) / S*``.
* Cell cycle. Eliminating ``v - w``, ``w`` and ``y`` leaves a quartic in ``u``:
  ``[k3ct (k1aa - k6 u)(1 - u) - k2 k6 u](k4p + k4 u^2) - k3ct k6 u (k1aa - k6 u) = 0``.
  Each real root is back-substituted and polished with two Newton steps.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from . import models as _models

FEASIBILITY_TOL = 1e-12
RESIDUAL_TOL = 1e-9
TRIVIAL_INFECTIVE_TOL = 1e-8
CLOSED_FORM_MAX_N = 6
# allowance for rounding in closed forms evaluated at large parameter scales
_ROUNDING_ALLOWANCE = 1e3 * np.finfo(float).eps


class DegenerateParameters(ValueError):
    """A closed-form denominator vanishes for this parameter draw."""


class EquilibriumNotFound(RuntimeError):
    """Newton search exhausted its restarts without finding the endemic root."""


@dataclass(frozen=True)
class EquilibriumPoint:
    state: np.ndarray
    feasible: bool
    branch: str
    residual: float
    draw_index: int = None


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 200
    max_restarts: int = 20
    tol: float = 1e-12
    max_halvings: int = 40


class EquilibriumList(list):
    """List of equilibria plus the reasons any branch was omitted."""

    def __init__(self, points=(), omitted=None):
        super().__init__(points)
        self.omitted = dict(omitted or {})

    def branch(self, name):
        return [ep for ep in self if ep.branch == name]


def residual_tolerance(x, theta):
    scale = max(1.0, float(np.max(np.abs(theta), initial=0.0))) * max(
        1.0, float(np.max(np.abs(x), initial=0.0))
    ) ** 2
    return max(RESIDUAL_TOL, _ROUNDING_ALLOWANCE * scale)


def _clamp(x):
    x = np.array(x, dtype=float)
    x[(x < 0.0) & (x > -FEASIBILITY_TOL)] = 0.0
    return x


def is_feasible(ep):
    """All state components nonnegative, up to ``FEASIBILITY_TOL`` roundoff."""
    state = ep.state if isinstance(ep, EquilibriumPoint) else np.asarray(ep, dtype=float)
    return bool(np.min(state) >= -FEASIBILITY_TOL)


def make_point(model, x, theta, branch, draw_index=None):
    x = _clamp(x)
    res = float(np.max(np.abs(_models.rhs(model, x, theta))))
    return EquilibriumPoint(x, is_feasible(x), branch, res, draw_index)


def accepted(model, ep, theta):
    return ep.feasible and ep.residual <= residual_tolerance(ep.state, theta)


# -- closed forms -----------------------------------------------------------------

def _lorenz(model, th):
    sigma, r, b = th
    pts = [("origin", np.zeros(3))]
    omitted = {}
    q = b * (r - 1.0)
    if q >= 0.0:
        s = np.sqrt(q)
        pts.append(("plus", np.array([s, s, r - 1.0])))
        pts.append(("minus", np.array([-s, -s, r - 1.0])))
    else:
        omitted["plus"] = omitted["minus"] = f"b(r - 1) = {q:.6g} < 0, branch is complex"
    return pts, omitted


def _tyson_roots(th):
    k4, k4p, k6, k1aa, k2, k3ct, k7 = th
    if k2 == 0.0 or k3ct == 0.0 or k7 == 0.0:
        raise DegenerateParameters("cell-cycle model needs k2, k3ct, k7 nonzero")
    lin = P.polysub(P.polymul([k3ct * k1aa, -k3ct * k6], [1.0, -1.0]), [0.0, k2 * k6])
    poly = P.polysub(P.polymul(lin, [k4p, 0.0, k4]), P.polymul([0.0, k3ct * k6], [k1aa, -k6]))
    poly = np.trim_zeros(poly, "b")
    if len(poly) < 2:
        raise DegenerateParameters("cell-cycle reduced polynomial is constant")
    roots = P.polyroots(poly)
    scale = max(1.0, float(np.max(np.abs(roots))))
    out = []
    for u in roots:
        if abs(u.imag) > 1e-9 * scale:
            continue
        u = u.real
        d = (k1aa - k6 * u) / k2
        if d == 0.0:
            continue
        w = 1.0 - k6 * u / (k3ct * d)
        v = w + d
        y = v + k6 * u / k7
        out.append(np.array([u, v, w, y]))
    return out


def _polish(model, x, th, steps=2):
    for _ in range(steps):
        f = _models.rhs(model, x, th)
        try:
            x = x - np.linalg.solve(_models.jacobian(model, x, th), f)
        except np.linalg.LinAlgError:
            break
    return x


def _tyson(model, th):
    pts = []
    for x in sorted(_tyson_roots(th), key=lambda s: s[0]):
        x = _polish(model, x, th)
        physical = np.min(x) >= -FEASIBILITY_TOL and x[2] <= 1.0 + FEASIBILITY_TOL
        pts.append(("physical" if physical else "other", x))
    return pts, {}


def _nowak(model, th):
    lam, d, beta, a, k, u = th
    pts = []
    omitted = {}
    if d != 0.0:
        pts.append(("disease-free", np.array([lam / d, 0.0, 0.0])))
    else:
        omitted["disease-free"] = "d = 0"
    if beta * k == 0.0 or a == 0.0 or u == 0.0:
        raise DegenerateParameters("viral model endemic point needs beta*k, a, u nonzero")
    core = lam * beta * k - d * a * u
    pts.append(("endemic", np.array([a * u / (beta * k), core / (beta * k * a), core / (beta * a * u)])))
    return pts, omitted


def _sneir_endemic(th, n):
    mu, beta, alpha, gamma = th[0], th[1:1 + n], th[1 + n:1 + 2 * n], th[1 + 2 * n]
    weight = np.sum(alpha * beta / (mu + alpha))
    btot = beta.sum()
    if weight == 0.0 or btot == 0.0 or np.any(mu + alpha == 0.0):
        raise DegenerateParameters("S(nE)IR endemic point has a vanishing denominator")
    S = (mu + gamma) / weight
    if S == 0.0:
        raise DegenerateParameters("S(nE)IR endemic point has S = 0")
    I = mu * (1.0 - S) / (btot * S)
    E = beta * S * I / (mu + alpha)
    return np.concatenate(([S], E, [I]))


def _senir_endemic(th, n):
    mu, beta, alpha, gamma = th[0], th[1], th[2:2 + n], th[2 + n:2 + 2 * n]
    if np.any(mu + gamma == 0.0):
        raise DegenerateParameters("SE(nI)R endemic point has a vanishing denominator")
    weight = np.sum(alpha / (mu + gamma))
    if weight == 0.0 or beta == 0.0:
        raise DegenerateParameters("SE(nI)R endemic point has a vanishing denominator")
    S = (mu + alpha.sum()) / (beta * weight)
    if S == 0.0:
        raise DegenerateParameters("SE(nI)R endemic point has S = 0")
    total_I = mu * (1.0 - S) / (beta * S)
    E = total_I / weight
    I = alpha * E / (mu + gamma)
    return np.concatenate(([S, E], I))


def family_endemic(model, theta):
    """Closed-form endemic point for any SEIR-family size.

    Public so tests can use it as a cross-oracle for the Newton path at sizes
    beyond :data:`CLOSED_FORM_MAX_N`.
    """
    th = np.asarray(theta, dtype=float)
    if model.family == "senir":
        return _senir_endemic(th, model.size_param)
    return _sneir_endemic(th, model.size_param or 1)


def _seir_family(model, th):
    free = np.zeros(model.dim)
    free[0] = 1.0
    return [("disease-free", free), ("endemic", family_endemic(model, th))], {}


def _toy(model, th):
    t1, t2 = th
    pts = [("origin", np.zeros(2))]
    omitted = {}
    if model.name == "toy1":
        return pts, omitted
    if t1 * t2 == 0.0:
        raise DegenerateParameters(f"{model.name} needs theta1*theta2 nonzero")
    if model.name == "toy2":
        pts.append(("ep2", np.array([1.0 / (t1 * t2 * t2), 1.0 / (t1 * t2)])))
    elif t1 * t2 > 0.0:
        y = 1.0 / np.sqrt(t1 * t2)
        pts.append(("ep2", np.array([y / t2, y])))
        pts.append(("ep3", np.array([-y / t2, -y])))
    else:
        omitted["ep2"] = omitted["ep3"] = "theta1*theta2 < 0, no real root"
    return pts, omitted


_CLOSED = {
    "lorenz": _lorenz,
    "tyson": _tyson,
    "nowak": _nowak,
    "seir": _seir_family,
    "toy1": _toy,
    "toy2": _toy,
    "toy3": _toy,
}


def equilibria_closed_form(model, theta, draw_index=None, branch=None):
    """All closed-form equilibria of ``model`` at ``theta``, labelled by branch.

    Branches that do not exist for this ``theta`` are left out and the reason
    is recorded in ``result.omitted``. Raises :class:`DegenerateParameters`
    when a denominator of the studied branch vanishes. ``branch`` restricts
    the result to one label.
    """
    model = _models.get_model(model)
    th = np.asarray(theta, dtype=float)
    if th.shape != (model.n_params,):
        raise ValueError(f"{model.name}: expected {model.n_params} parameters, got shape {th.shape}")
    if model.family is not None:
        if model.size_param > CLOSED_FORM_MAX_N:
            raise ValueError(
                f"{model.name}: closed form is used up to n = {CLOSED_FORM_MAX_N}; use the numeric path"
            )
        solver = _seir_family
    else:
        solver = _CLOSED[model.name]
    pts, omitted = solver(model, th)
    return EquilibriumList(
        [make_point(model, x, th, name, draw_index) for name, x in pts if branch in (None, name)],
        omitted,
    )


# -- numeric ----------------------------------------------------------------------

def _is_trivial(model, x):
    return bool(np.all(x[list(model.infective)] <= TRIVIAL_INFECTIVE_TOL))


def _newton(model, x, th, cfg):
    f = _models.rhs(model, x, th)
    norm = np.linalg.norm(f)
    for _ in range(cfg.max_iter):
        if np.max(np.abs(f)) <= cfg.tol:
            return x
        try:
            step = np.linalg.solve(_models.jacobian(model, x, th), f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        t = 1.0
        for _ in range(cfg.max_halvings):
            trial = x - t * step
            f_trial = _models.rhs(model, trial, th)
            n_trial = np.linalg.norm(f_trial)
            if n_trial < norm:
                break
            t *= 0.5
        else:
            return x if np.max(np.abs(f)) <= RESIDUAL_TOL else None
        x, f, norm = trial, f_trial, n_trial
    return x if np.max(np.abs(f)) <= RESIDUAL_TOL else None


def equilibrium_numeric(model, theta, config=None, rng=None, x0=None, draw_index=None):
    """Endemic equilibrium of an SEIR-family model by damped Newton.

    Starts from ``x0`` (if given) and then from up to ``config.max_restarts``
    points drawn uniformly from ``[0, 1]^p`` with ``rng``. Roots whose
    infective compartments all vanish are the trivial branch and trigger a
    restart. The returned point may be infeasible; the caller decides.
    """
    model = _models.get_model(model)
    if not model.infective:
        raise ValueError(f"{model.name}: numeric search is defined for the SEIR family only")
    cfg = config or NewtonConfig()
    th = np.asarray(theta, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    attempts = 0
    while attempts <= cfg.max_restarts:
        if attempts == 0 and x0 is not None:
            start = np.asarray(x0, dtype=float)
        else:
            start = rng.random(model.dim)
        attempts += 1
        x = _newton(model, start.copy(), th, cfg)
        if x is None or _is_trivial(model, x):
            continue
        ep = make_point(model, x, th, "endemic", draw_index)
        if ep.residual <= RESIDUAL_TOL:
            return ep
    raise EquilibriumNotFound(
        f"{model.name}: no endemic root after {attempts} Newton starts"
    )

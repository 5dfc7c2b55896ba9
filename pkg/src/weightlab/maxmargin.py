"""Hard-margin separators for binary data, two independent ways.

``solve_max_margin`` is the production route: a feasibility phase (perceptron)
followed by projected descent on the classic formulation

    minimize ||theta||^2  subject to  y_i theta . x_i >= 1,

where each iterate shrinks theta and projects back onto the feasible set
(the projection is computed exactly by dual coordinate ascent). The reported
direction is theta/||theta|| and gamma_star is the worst margin along it.

``brute_force_max_margin`` is the oracle route for small instances: enumerate
candidate active subsets (size <= d+1 suffices by Caratheodory), solve each
equality system by pseudoinverse, and keep the feasible candidate of minimal
norm. The two routes share no solver state and are cross-checked in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from .datagen import Dataset
from .errors import NotSeparableError, SpecificationError

_PERCEPTRON_BUDGET = 200_000
_FEAS_TOL = 1e-11


@dataclass(frozen=True)
class MaxMarginSolution:
    direction: np.ndarray  # unit vector
    gamma_star: float
    dual_coefficients: np.ndarray  # (n,), >= 0, zero off the support set
    support_set: tuple[int, ...]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        p = np.asarray(self.dual_coefficients, dtype=np.float64)
        d.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "dual_coefficients", p)
        object.__setattr__(self, "support_set", tuple(int(i) for i in self.support_set))


def _signed_rows(ds: Dataset) -> np.ndarray:
    if not ds.is_binary:
        raise SpecificationError("hard-margin separators need binary labels")
    a = ds.labels[:, None] * ds.features
    if np.any(np.linalg.norm(a, axis=1) == 0.0):
        raise NotSeparableError("a zero feature vector admits no positive margin")
    return a


def _perceptron_feasible(a: np.ndarray) -> np.ndarray:
    """A point with all signed margins > 0, or NotSeparableError."""
    n, _ = a.shape
    theta = np.zeros(a.shape[1])
    for _ in range(_PERCEPTRON_BUDGET):
        margins = a @ theta
        violated = np.flatnonzero(margins <= 0.0)
        if violated.size == 0:
            return theta
        theta = theta + a[violated[0]]
    raise NotSeparableError(
        f"no separating direction found within {_PERCEPTRON_BUDGET} perceptron updates"
    )


def _project_onto_feasible(
    a: np.ndarray,
    gram: np.ndarray,
    z: np.ndarray,
    duals: np.ndarray,
    max_sweeps: int = 20_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean projection of z onto {theta : a theta >= 1}.

    Dual coordinate ascent (Gauss-Seidel on the nonnegative duals); ``duals``
    warm-starts the previous projection's multipliers. Returns (theta, duals).
    """
    n = a.shape[0]
    # signed margins of theta = z + a.T @ duals, maintained incrementally
    s = a @ z + gram @ duals
    diag = np.diag(gram)
    for _ in range(max_sweeps):
        biggest_step = 0.0
        for i in range(n):
            residual = 1.0 - s[i]
            step = max(-duals[i], residual / diag[i])
            if step != 0.0:
                duals[i] += step
                s += step * gram[:, i]
                biggest_step = max(biggest_step, abs(step))
        dual_scale = max(1.0, float(np.abs(duals).max()))
        if biggest_step <= 1e-14 * dual_scale and s.min() >= 1.0 - _FEAS_TOL:
            break
    return z + a.T @ duals, duals


def _recover_duals(
    a: np.ndarray, theta_hat: np.ndarray, gamma_star: float, margins: np.ndarray
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Nonnegative combination of active rows reproducing theta_hat.

    ``theta_hat`` is the margin-1 scaled solution; active rows are those whose
    margin sits within a small band of gamma_star. NNLS gives coefficients
    p >= 0 with sum_i p_i y_i x_i = theta_hat up to solver tolerance.
    """
    n = a.shape[0]
    active = np.flatnonzero(margins <= gamma_star * (1.0 + 1e-6) + 1e-12)
    coeffs, _ = nnls(a[active].T, theta_hat)
    p = np.zeros(n)
    p[active] = coeffs
    cutoff = 1e-10 * p.max() if p.max() > 0 else 0.0
    p[p <= cutoff] = 0.0
    support = tuple(int(i) for i in np.flatnonzero(p > 0.0))
    return p, support


def solve_max_margin(ds: Dataset, max_outer: int = 50) -> MaxMarginSolution:
    """Projected-descent solve of the hard-margin problem."""
    a = _signed_rows(ds)
    theta = _perceptron_feasible(a)
    theta = theta / np.min(a @ theta)  # rescale onto the margin-1 boundary
    gram = a @ a.T
    duals = np.zeros(a.shape[0])
    prev_norm = np.inf
    for t in range(1, max_outer + 1):
        eta = min(1.0, 1.0 / np.sqrt(t))
        theta, duals = _project_onto_feasible(a, gram, (1.0 - eta) * theta, duals)
        norm = float(np.linalg.norm(theta))
        if abs(prev_norm - norm) <= 1e-13 * max(1.0, norm):
            break
        prev_norm = norm
    worst = float(np.min(a @ theta))
    if worst <= 0.0:
        raise NotSeparableError("projected descent failed to stay feasible")
    theta = theta / worst  # enforce min signed margin exactly 1
    norm = float(np.linalg.norm(theta))
    direction = theta / norm
    margins = a @ direction
    gamma_star = float(margins.min())
    p, support = _recover_duals(a, theta, gamma_star, margins)
    return MaxMarginSolution(
        direction=direction, gamma_star=gamma_star, dual_coefficients=p, support_set=support
    )


def brute_force_max_margin(ds: Dataset) -> MaxMarginSolution:
    """Oracle solve by enumerating candidate active subsets (small n only).

    Cost grows like C(n, d+1); intended for n up to a few dozen at d <= 3.
    """
    a = _signed_rows(ds)
    n, d = a.shape
    scale = float(np.abs(a).max())
    best_theta: np.ndarray | None = None
    best_norm = np.inf
    for size in range(1, min(d + 1, n) + 1):
        for subset in combinations(range(n), size):
            rows = a[list(subset)]
            gram = rows @ rows.T
            q, *_ = np.linalg.lstsq(gram, np.ones(size), rcond=None)
            if not np.allclose(gram @ q, 1.0, atol=1e-9 * max(1.0, scale**2)):
                continue  # this subset cannot be jointly active at margin 1
            theta = rows.T @ q
            if np.min(a @ theta) < 1.0 - 1e-9:
                continue
            norm = float(np.linalg.norm(theta))
            if best_theta is None or norm < best_norm - 1e-15 * max(1.0, best_norm):
                best_norm, best_theta = norm, theta
    if best_theta is None:
        raise NotSeparableError("no feasible separator over any candidate subset")
    direction = best_theta / best_norm
    margins = a @ direction
    gamma_star = float(margins.min())
    p, support = _recover_duals(a, best_theta, gamma_star, margins)
    return MaxMarginSolution(
        direction=direction, gamma_star=gamma_star, dual_coefficients=p, support_set=support
    )

"""Hastings-McLeod solution of Painleve II and the Tracy-Widom distribution.

u'' = 2u^3 + xu is solved as a boundary-value problem on [-L_minus, L_plus]
with u(-L_minus) = sqrt(L_minus / 2) and u(L_plus) = Ai(L_plus): Numerov
differences (fourth order) and Newton with a tridiagonal Jacobian.  F(t) is
then exp(-int_t^inf (x - t) u^2 dx); independently, F(t) = det(1 - A_t) for
the Airy kernel on [t, t + 12].
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import solve_banded

from .airy import airy_pair
from .errors import ConvergenceError, DomainError
from .fredholm import IntegrableKernel, fredholm_det, gauss_legendre


@dataclass(frozen=True)
class PainleveSolution:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    L_minus: float
    L_plus: float
    residual: float  # max |Numerov residual| / h^2 over interior nodes
    newton_history: tuple = ()
    _spline: CubicHermiteSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.x, self.u, self.du))

    def __call__(self, x):
        return self._spline(x)

    def derivative(self, x):
        return self._spline(x, 1)

    def ode_residual_fd(self):
        """u'' - 2u^3 - xu with a five-point second difference (independent of Numerov)."""
        h = self.x[1] - self.x[0]
        u = self.u
        d2 = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * h * h)
        xi = self.x[2:-2]
        return d2 - 2 * u[2:-2] ** 3 - xi * u[2:-2]


def _fourth_order_derivative(u, h):
    du = np.empty_like(u)
    du[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    # one-sided fourth-order stencils at the two ends of each side
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    du[0] = c @ u[:5]
    du[1] = np.array([-3, -10, 18, -6, 1]) @ u[:5] / (12 * h)
    du[-1] = -(c @ u[::-1][:5])
    du[-2] = -(np.array([-3, -10, 18, -6, 1]) @ u[::-1][:5]) / (12 * h)
    return du


def painleve2_hastings_mcleod(L_minus=10.0, L_plus=8.0, grid_n=800, tol=1e-10, max_newton=50):
    """Hastings-McLeod u on a uniform grid of ``grid_n`` intervals."""
    if L_minus < 4 or L_plus < 6 or grid_n < 400:
        raise ValueError("need L_minus >= 4, L_plus >= 6, grid_n >= 400")
    x = np.linspace(-L_minus, L_plus, grid_n + 1)
    h = x[1] - x[0]
    ai_right = airy_pair(L_plus)[0]
    ai = airy_pair(x)[0]
    u = np.sqrt(ai ** 2 + np.maximum(-x, 0.0) / 2.0)
    u[0] = math.sqrt(L_minus / 2.0)
    u[-1] = ai_right
    c = h * h / 12.0
    history = []
    for _ in range(max_newton):
        f = 2 * u ** 3 + x * u
        fu = 6 * u ** 2 + x
        R = u[2:] - 2 * u[1:-1] + u[:-2] - c * (f[2:] + 10 * f[1:-1] + f[:-2])
        res = float(np.max(np.abs(R))) / (h * h)
        history.append(res)
        if res < tol:
            break
        n = R.size
        ab = np.zeros((3, n))
        ab[0, 1:] = 1 - c * fu[2:-1]  # super-diagonal: d R_i / d u_{i+1}
        ab[1] = -2 - 10 * c * fu[1:-1]
        ab[2, :-1] = 1 - c * fu[1:-2]  # sub-diagonal: d R_i / d u_{i-1}
        step = solve_banded((1, 1), ab, R)
        u[1:-1] -= step
        if np.max(np.abs(step)) < 1e-15 * np.max(u) and res < 1e3 * tol:
            break  # round-off floor
    else:
        raise ConvergenceError(f"Newton stalled at residual {history[-1]:.3e}", history)
    if np.any(u <= 0):
        raise ConvergenceError("Newton converged to a non-positive branch", history)
    return PainleveSolution(x, u.copy(), _fourth_order_derivative(u, h), float(L_minus), float(L_plus),
                            history[-1], tuple(history))


@lru_cache(maxsize=4)
def default_solution(L_minus=10.0, L_plus=8.0, grid_n=800):
    return painleve2_hastings_mcleod(L_minus, L_plus, grid_n)


def _airy_tail(t, start, length=12.0, m=80):
    rule = gauss_legendre(m, start, start + length)
    ai = airy_pair(rule.nodes)[0]
    return float(np.sum(rule.weights * (rule.nodes - t) * ai * ai))


def tracy_widom_pii(t, sol=None, points_per_cell=6):
    """F(t) = exp(-int_t^inf (x - t) u(x)^2 dx) from a Hastings-McLeod solution."""
    sol = default_solution() if sol is None else sol
    if not -sol.L_minus + 1 <= t <= sol.L_plus - 1:
        raise DomainError(f"t = {t} outside [{-sol.L_minus + 1}, {sol.L_plus - 1}]")
    # Gauss panels between consecutive grid points (the last panel starts at t)
    edges = sol.x[sol.x > t]
    edges = np.concatenate([[t], edges])
    g, w = np.polynomial.legendre.leggauss(points_per_cell)
    left, right = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (right - left) * g + 0.5 * (right + left)
    weights = 0.5 * (right - left) * w
    u = sol(nodes)
    body = float(np.sum(weights * (nodes - t) * u * u))
    return math.exp(-(body + _airy_tail(t, sol.L_plus)))


def airy_kernel(t, length=12.0):
    """(Ai(x)Ai'(y) - Ai'(x)Ai(y)) / (x - y) on [t, t + length]."""
    ai = lambda x: airy_pair(x)[0]
    aip = lambda x: airy_pair(x)[1]

    def closed(X, Y):
        aX, pX = airy_pair(X)
        aY, pY = airy_pair(Y)
        same = X == Y
        diff = np.where(same, 1.0, X - Y)
        return np.where(same, pX * pX - X * aX * aX, (aX * pY - pX * aY) / diff)

    return IntegrableKernel(
        (ai, aip), (aip, lambda y: -ai(y)), t, t + length,
        f_prime=(aip, lambda x: x * ai(x)), closed_form=closed, symmetric=True,
    )


def airy_kernel_det(t, m=60, length=12.0):
    """F(t) = det(1 - A_t) with the Airy kernel truncated to [t, t + length]."""
    if t < -8:
        raise DomainError("airy_kernel_det supports t >= -8")
    return float(np.real(fredholm_det(airy_kernel(t, length), m).value))

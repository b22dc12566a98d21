"""Fredholm determinants of integrable kernels by Nystrom discretisation.

``det(1 - K)`` on [a, b] is approximated by ``det(I - W^(1/2) K W^(1/2))``
on Gauss-Legendre nodes; every evaluation is repeated with twice the nodes
and the change is reported alongside the value.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import RepresentationError
from .linalg import hermitian_eigenvalues, symmetric_eigen


class ResolutionWarning(UserWarning):
    """Doubling the quadrature changed a determinant by more than the tolerance."""


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f):
        return np.sum(self.weights * f(self.nodes))


def gauss_legendre(m, a=-1.0, b=1.0):
    """m-point Gauss-Legendre rule mapped to [a, b]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not a < b:
        raise ValueError("need a < b")
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w)


def gauss_legendre_arcsine(m, a=-1.0, b=1.0):
    """Gauss-Legendre in theta after x = mid + half * sin(theta).

    Integrands carrying sqrt((x - a)(b - x)) become analytic in theta, so the
    rule keeps spectral accuracy for them.
    """
    base = gauss_legendre(m, -0.5 * math.pi, 0.5 * math.pi)
    half = 0.5 * (b - a)
    return QuadratureRule(0.5 * (a + b) + half * np.sin(base.nodes), half * np.cos(base.nodes) * base.weights)


@dataclass(frozen=True)
class IntegrableKernel:
    """K(x, y) = sum_i f_i(x) g_i(y) / (x - y) on [a, b].

    On the diagonal the kernel takes the limit sum_i f_i'(x) g_i(x), which
    needs ``f_prime``.  ``closed_form(X, Y)``, when given, is used for
    assembly instead (it must handle X == Y); it avoids the cancellation in
    the quotient for close nodes.
    """

    f: Sequence[Callable]
    g: Sequence[Callable]
    a: float
    b: float
    f_prime: Optional[Sequence[Callable]] = None
    closed_form: Optional[Callable] = None
    symmetric: bool = False
    rule: Callable = gauss_legendre

    def matrix(self, x):
        """K(x_i, x_j) on the given nodes."""
        X, Y = np.meshgrid(x, x, indexing="ij")
        if self.closed_form is not None:
            return np.asarray(self.closed_form(X, Y))
        if not self.f:
            return np.zeros_like(X)
        F = np.array([fi(x) for fi in self.f])
        G = np.array([gi(x) for gi in self.g])
        num = F.T @ G
        diff = X - Y
        np.fill_diagonal(diff, 1.0)
        K = num / diff
        if self.f_prime is None:
            raise ValueError("the diagonal needs f_prime or closed_form")
        Fp = np.array([fp(x) for fp in self.f_prime])
        np.fill_diagonal(K, np.sum(Fp * G, axis=0))
        return K

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.closed_form is not None:
            return self.closed_form(x, y)
        out = np.zeros(x.shape, dtype=complex)
        same = x == y
        for i, (fi, gi) in enumerate(zip(self.f, self.g)):
            off = np.where(same, 0.0, fi(x) * gi(y) / np.where(same, 1.0, x - y))
            diag = self.f_prime[i](x) * gi(x) if self.f_prime is not None else 0.0
            out = out + np.where(same, diag, off)
        return out


def zero_kernel(a=0.0, b=1.0):
    return IntegrableKernel((), (), a, b, closed_form=lambda X, Y: np.zeros_like(X, dtype=float))


def nystrom_matrix(kernel, m):
    rule = kernel.rule(m, kernel.a, kernel.b)
    r = np.sqrt(rule.weights)
    return r[:, None] * kernel.matrix(rule.nodes) * r[None, :]


class FredholmDeterminant(NamedTuple):
    value: complex
    change: float  # |det_m - det_2m|
    m: int
    converged: bool

    def __complex__(self):
        return complex(self.value)

    def __float__(self):
        return float(np.real(self.value))


def _det_one_minus(A):
    return np.linalg.det(np.eye(A.shape[0]) - A)


def fredholm_det(kernel, m=50, tol=1e-8, certify=True):
    """det(1 - K) at m nodes, certified against 2m nodes.

    Converged means |det_m - det_2m| <= tol * max(1, |det_m|).
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    value = _det_one_minus(nystrom_matrix(kernel, m))
    if not certify:
        return FredholmDeterminant(value, math.nan, m, True)
    finer = _det_one_minus(nystrom_matrix(kernel, 2 * m))
    change = float(abs(finer - value))
    converged = change <= tol * max(1.0, abs(value))
    if not converged:
        warnings.warn(f"det(1-K) changed by {change:.3e} between m={m} and m={2 * m}", ResolutionWarning,
                      stacklevel=2)
    return FredholmDeterminant(value, change, m, converged)


def kernel_eigenvalues(kernel, m=50):
    """Eigenvalues of the symmetrised Nystrom matrix, descending."""
    A = nystrom_matrix(kernel, m)
    if np.iscomplexobj(A) and np.any(A.imag):
        H = 0.5 * (A + A.conj().T)
        values = hermitian_eigenvalues(H)
    else:
        A = np.real(A)
        values = symmetric_eigen(0.5 * (A + A.T)).values
    return values[::-1]


# ---------------------------------------------------------------------------
# Sine kernel
# ---------------------------------------------------------------------------

def sine_kernel(s):
    """sin(x - y) / (pi (x - y)) on [0, 2s] in integrable form."""
    f = (lambda x: np.exp(1j * x) / (2j * math.pi), lambda x: -np.exp(-1j * x) / (2j * math.pi))
    g = (lambda y: np.exp(-1j * y), lambda y: np.exp(1j * y))
    fp = (lambda x: np.exp(1j * x) / (2 * math.pi), lambda x: np.exp(-1j * x) / (2 * math.pi))
    return IntegrableKernel(
        f, g, 0.0, 2.0 * s, f_prime=fp,
        closed_form=lambda X, Y: np.sinc((X - Y) / math.pi) / math.pi,
        symmetric=True,
    )


def sine_kernel_gap(s, m=50):
    """det(1 - K_s): probability of no scaled eigenvalue in an interval of length 2s."""
    if s < 0:
        raise ValueError("s must be >= 0")
    if s == 0:
        return 1.0
    return float(np.real(fredholm_det(sine_kernel(s), m).value))


# ---------------------------------------------------------------------------
# XY model
# ---------------------------------------------------------------------------

def xy_phi(z, beta):
    return np.tanh(beta * np.sqrt(np.clip(1.0 - np.asarray(z) ** 2, 0.0, None)))


def _sinhc(x):
    # sinh(x) / x with the removable singularity filled in
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def xy_kernel(t, beta):
    """phi(z) sin(it(z - z')) / (pi (z - z')) on (-1, 1), from its f, g components."""
    two_pi_i = 2j * math.pi
    f = (
        lambda z: -np.exp(t * z) * xy_phi(z, beta) / two_pi_i,
        lambda z: -np.exp(-t * z) * xy_phi(z, beta) / two_pi_i,
    )
    g = (lambda z: np.exp(-t * z), lambda z: -np.exp(t * z))

    def dphi(z):
        r = np.sqrt(np.clip(1.0 - z * z, 1e-300, None))
        return -beta * z / r / np.cosh(beta * r) ** 2

    f_prime = (
        lambda z: -np.exp(t * z) * (t * xy_phi(z, beta) + dphi(z)) / two_pi_i,
        lambda z: -np.exp(-t * z) * (-t * xy_phi(z, beta) + dphi(z)) / two_pi_i,
    )
    # sin(itu) / (pi u) = i t sinh(tu) / (pi tu)
    closed = lambda X, Y: xy_phi(X, beta) * 1j * t * _sinhc(t * (X - Y)) / math.pi
    # phi has square-root endpoints, hence the arcsine-mapped rule
    return IntegrableKernel(f, g, -1.0, 1.0, f_prime=f_prime, closed_form=closed,
                           rule=gauss_legendre_arcsine)


def xy_determinant(t, beta, m=60):
    if t < 0 or beta <= 0:
        raise ValueError("need t >= 0 and beta > 0")
    if t == 0:
        return FredholmDeterminant(1.0 + 0j, 0.0, m, True)
    return fredholm_det(xy_kernel(t, beta), m)


def xy_autocorrelation(t, beta, m=60, imag_tol=1e-8):
    """X(t) = exp(-t^2/2) det(1 - K_t), requiring det to be real to ``imag_tol``."""
    det = complex(xy_determinant(t, beta, m).value)
    if abs(det.imag) > imag_tol:
        raise RepresentationError(
            f"det(1 - K_t) = {det:.12g} has imaginary part {det.imag:.3e} at t={t}, beta={beta}",
            value=det,
        )
    return math.exp(-0.5 * t * t) * det.real


def xy_autocorrelation_complex(t, beta, m=60):
    """exp(-t^2/2) det(1 - K_t) without the realness requirement."""
    return math.exp(-0.5 * t * t) * complex(xy_determinant(t, beta, m).value)


def xy_asymptotic_slope(beta, epsabs=1e-13):
    """(1/pi) * integral_{-1}^{1} log|tanh(beta s)| ds.

    The integrand is even with a log singularity at 0: log(beta s) is
    integrated exactly and only the smooth remainder is done by quadrature.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")

    def smooth(s):
        bs = beta * s
        if bs < 1e-4:
            return -bs * bs / 3.0
        return math.log(math.tanh(bs) / bs)

    remainder, _ = integrate.quad(smooth, 0.0, 1.0, epsabs=epsabs, epsrel=1e-13, limit=200)
    return 2.0 / math.pi * (math.log(beta) - 1.0 + remainder)

"""Sobolev-space utilities on [0, pi] and the space-time sine basis.

Everything is expressed through sine coefficients <., phi_k>, truncated at
the path's mode count; H_r norms weight those coefficients by (1 + k^2)^r.
The space-time basis is psi_ij(t, x) = phibar_i(t) phi_j(x) with
phibar_i(t) = sqrt(2/T) sin(i pi t / T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OutOfRangeError
from .quadrature import gauss_legendre
from .solver import FieldPath, phi_values

__all__ = [
    "SobolevVector",
    "dual_norm",
    "sobolev_norm",
    "truncation_tail_bound",
    "pairing",
    "h_ij_closed_form",
    "h_ij_quadrature",
    "space_time_projection",
    "space_time_parseval",
    "SmoothBump",
]


@dataclass(frozen=True)
class SobolevVector:
    """Sine-coefficient vector tagged with its Sobolev order."""

    coefficients: tuple[float, ...]
    order: float

    def norm(self) -> float:
        return sobolev_norm(np.asarray(self.coefficients), self.order)


def sobolev_norm(coefficients: np.ndarray, r: float) -> float:
    """H_r norm sqrt(sum (1 + k^2)^r c_k^2); r < 0 gives the dual norm."""
    c = np.asarray(coefficients, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    k = np.arange(1, len(c) + 1, dtype=float)
    return float(np.sqrt(np.sum((1.0 + k * k) ** r * c * c)))


def dual_norm(coefficients: np.ndarray, r: float) -> float:
    """H_{-r} norm for r > 0 (the Riesz dual expression)."""
    if r <= 0:
        raise ValueError("dual_norm expects a positive order r")
    return sobolev_norm(coefficients, -r)


def truncation_tail_bound(coefficients: np.ndarray, r: float, sup_tail: float) -> float:
    """Bound on the dual-norm error of truncating at K, given |c_k| <= sup_tail for k > K."""
    K = len(np.asarray(coefficients))
    k = np.arange(K + 1, K + 100001, dtype=float)
    return float(sup_tail * math.sqrt(np.sum((1.0 + k * k) ** (-r))))


def pairing(path: FieldPath, t: float, phi_coefficients: np.ndarray) -> float:
    """<u(t, .), phi> = sum_k u_k(t) phihat_k for a stored instant t."""
    c = np.asarray(phi_coefficients, dtype=float)
    K = path.n_modes
    if len(c) < K:
        c = np.pad(c, (0, K - len(c)))
    idx = _time_index(path, t)
    return float(path.modes[idx] @ c[:K])


def _time_index(path: FieldPath, t: float) -> int:
    times = path.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise OutOfRangeError(f"t={t} outside the stored grid", operation="pairing")
    idx = int(round((t - times[0]) / (times[1] - times[0])))
    idx = min(max(idx, 0), len(times) - 1)
    if abs(times[idx] - t) > 1e-9 * max(1.0, times[-1]):
        raise OutOfRangeError(f"t={t} is not a grid instant", operation="pairing")
    return idx


# ---------------------------------------------------------------------------
# H_ij = int_s^T phibar_i(t) phi_j(y) e^{-j^2 (t-s)} dt
# ---------------------------------------------------------------------------

def h_ij_closed_form(i: int, j: int, s: float, y: float, T: float) -> float:
    """Antiderivative form of the Green-projected space-time basis integral."""
    _check_hij_args(i, j, s, y, T)
    a = i * math.pi / T
    j2 = float(j * j)
    phij = math.sqrt(2.0 / math.pi) * math.sin(j * y)
    pref = math.sqrt(2.0 / T) * phij / (a * a + j2 * j2)
    bracket = (
        math.exp(-j2 * (T - s)) * a * (-1.0) ** (i + 1)
        + j2 * math.sin(a * s)
        + a * math.cos(a * s)
    )
    return pref * bracket


def h_ij_quadrature(i: int, j: int, s: float, y: float, T: float, nodes: int = 400) -> float:
    """Direct composite Gauss-Legendre evaluation of the same integral."""
    _check_hij_args(i, j, s, y, T)
    if s == T:
        return 0.0
    a = i * math.pi / T
    j2 = float(j * j)
    phij = math.sqrt(2.0 / math.pi) * math.sin(j * y)

    def integrand(t):
        return math.sqrt(2.0 / T) * np.sin(a * t) * phij * np.exp(-j2 * (t - s))

    # a couple of nodes per oscillation keeps GL spectral-accurate
    pieces = max(1, int(np.ceil(i / 8.0)))
    cuts = np.linspace(s, T, pieces + 1)
    return float(sum(gauss_legendre(integrand, lo, hi, nodes) for lo, hi in zip(cuts[:-1], cuts[1:])))


def _check_hij_args(i, j, s, y, T):
    if i < 1 or j < 1:
        raise ValueError("i, j must be >= 1")
    if not 0.0 <= s <= T:
        raise OutOfRangeError(f"s={s} outside [0, {T}]", operation="h_ij")
    if not 0.0 <= y <= math.pi:
        raise OutOfRangeError(f"y={y} outside [0, pi]", operation="h_ij")


# ---------------------------------------------------------------------------
# space-time projections
# ---------------------------------------------------------------------------

def space_time_projection(path: FieldPath, i: int, j: int) -> float:
    """<u, psi_ij> via the sine transform in time of the stored mode j.

    The interior-node rectangle rule is the discrete sine transform here and
    is exact for trajectories band-limited below the grid Nyquist index.
    """
    if j < 1 or j > path.n_modes:
        raise ValueError(f"space mode {j} outside 1..{path.n_modes}")
    if i < 1:
        raise ValueError("time mode must be >= 1")
    T = path.times[-1]
    dt = path.times[1] - path.times[0]
    tb = math.sqrt(2.0 / T) * np.sin(i * math.pi * path.times / T)
    traj = path.modes[:, j - 1]
    w = np.full_like(path.times, dt)
    w[0] = w[-1] = 0.5 * dt
    return float(np.sum(w * tb * traj))


def space_time_parseval(path: FieldPath, i_max: int | None = None) -> tuple[float, float]:
    """(sum_{ij} <u, psi_ij>^2, ||u||_{L^2}^2) under the shared grid quadrature."""
    T = path.times[-1]
    N = len(path.times) - 1
    if i_max is None:
        i_max = N - 1
    dt = path.times[1] - path.times[0]
    ivals = np.arange(1, i_max + 1)
    tb = math.sqrt(2.0 / T) * np.sin(np.outer(ivals, math.pi * path.times / T))
    w = np.full(len(path.times), dt)
    w[0] = w[-1] = 0.5 * dt
    coefs = tb @ (w[:, None] * path.modes)      # (i_max, K)
    lhs = float(np.sum(coefs**2))
    rhs = float(np.sum(w[:, None] * path.modes**2))
    return lhs, rhs


# ---------------------------------------------------------------------------
# smooth bump library
# ---------------------------------------------------------------------------

class SmoothBump:
    """C_c^infty bump exp(1 - 1/(1 - s^2)), s = (x - center)/width, sup = 1.

    Sine coefficients are computed once by high-resolution quadrature and
    cached; second-derivative coefficients follow from integration by parts
    (<phi'', phi_k> = -k^2 <phi, phi_k>, boundary terms vanish).
    """

    def __init__(self, center: float = math.pi / 2, width: float = 1.0):
        if not (0.0 < center - width and center + width < math.pi):
            raise ValueError("bump support must be compactly contained in (0, pi)")
        self.center = center
        self.width = width

    def __call__(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.width
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    @lru_cache(maxsize=8)
    def _coeff_cache(self, n_modes: int) -> tuple[float, ...]:
        k = np.arange(1, n_modes + 1)
        xs, ws = np.polynomial.legendre.leggauss(2000)
        lo, hi = self.center - self.width, self.center + self.width
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        pts = mid + half * xs
        vals = self(pts)
        basis = phi_values(k, pts)              # (K, nodes)
        return tuple(float(v) for v in half * (basis * vals) @ ws)

    def sine_coefficients(self, n_modes: int) -> np.ndarray:
        return np.array(self._coeff_cache(n_modes))

    def second_derivative_coefficients(self, n_modes: int) -> np.ndarray:
        k = np.arange(1, n_modes + 1, dtype=float)
        return -(k * k) * self.sine_coefficients(n_modes)

    def __hash__(self):
        return hash((self.center, self.width))

    def __eq__(self, other):
        return isinstance(other, SmoothBump) and (self.center, self.width) == (other.center, other.width)

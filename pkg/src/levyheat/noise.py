"""Realizations of the driving noises on [0, T] x [0, pi].

The compensated Levy noise is simulated by drop-with-compensation: jumps
with |z| <= eta are removed together with their compensator (mean preserved,
variance reduced by an exactly known fraction reported as metadata), never
replaced by a Gaussian surrogate. Atom times/positions are uniform, marks
come from the tabulated inverse CDF of the normalized restriction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AtomCapExceededError,
    BudgetExceededError,
    EmptyRestrictionError,
    InfiniteActivityError,
)
from . import measures

__all__ = [
    "LevyNoiseRealization",
    "GaussianNoiseRealization",
    "simulate_levy_noise",
    "simulate_gaussian_noise",
    "auto_inner_cutoff",
    "eta_for_atom_budget",
    "dump_atoms",
    "load_atoms",
]


@dataclass
class LevyNoiseRealization:
    """Compensated Poisson atoms plus drift metadata, sorted by time."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    T: float
    eps: float
    eta: float
    sigma: float                      # sigma(eps) of the model
    sigma_retained: float             # sqrt int_{|z|>eta} z^2 Q_eps
    m_restricted: float               # int_{|z|>eta} z Q_eps
    dropped_variance_fraction: float
    intensity: float                  # lambda = Q_eps({|z| > eta})
    model_name: str = ""

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class GaussianNoiseRealization:
    """Grid of independent centered normals with variance dt * dx."""

    increments: np.ndarray            # (time_steps, space_cells)
    T: float

    @property
    def dt(self) -> float:
        return self.T / self.increments.shape[0]

    @property
    def dx(self) -> float:
        return math.pi / self.increments.shape[1]


def simulate_levy_noise(
    model: measures.LevyModel,
    eps: float,
    eta: float,
    T: float,
    rng: np.random.Generator,
    *,
    rho_budget: float = 1e-3,
    atom_cap: float = 1e8,
) -> LevyNoiseRealization:
    """One realization of the restricted compensated noise; deterministic per stream."""
    if T <= 0:
        raise ValueError("horizon must be positive")
    if eta < 0:
        raise ValueError("inner cutoff must be nonnegative")
    var = measures.variance(model, eps)
    lam = measures.restricted_mass(model, eps, eta)
    if math.isinf(lam):
        raise InfiniteActivityError(
            f"restriction above eta={eta} has infinite mass; raise eta",
            operation="simulate_levy_noise",
        )
    retained2 = measures.restricted_moment2(model, eps, eta)
    dropped = max(0.0, 1.0 - retained2 / var)
    if dropped > rho_budget:
        raise BudgetExceededError(
            f"dropped variance fraction {dropped:.3g} exceeds budget {rho_budget:.3g}; "
            "use a smaller eta",
            operation="simulate_levy_noise",
        )
    expected = lam * T * math.pi
    if expected > atom_cap:
        raise AtomCapExceededError(
            f"expected atom count {expected:.3g} exceeds cap {atom_cap:.3g}; "
            "use a larger eta",
            operation="simulate_levy_noise",
        )
    if lam <= 0.0:
        raise EmptyRestrictionError(
            f"restriction above eta={eta} carries no mass", operation="simulate_levy_noise"
        )
    n = int(rng.poisson(expected))
    t = rng.uniform(0.0, T, size=n)
    x = rng.uniform(0.0, math.pi, size=n)
    z = measures.sample_marks(model, eps, eta, n, rng) if n else np.empty(0)
    order = np.argsort(t, kind="stable")
    return LevyNoiseRealization(
        t=t[order],
        x=x[order],
        z=np.asarray(z)[order],
        T=T,
        eps=eps,
        eta=eta,
        sigma=math.sqrt(var),
        sigma_retained=math.sqrt(retained2),
        m_restricted=measures.restricted_mean(model, eps, eta),
        dropped_variance_fraction=dropped,
        intensity=lam,
        model_name=model.name,
    )


def auto_inner_cutoff(
    model: measures.LevyModel,
    eps: float,
    T: float,
    *,
    rho_budget: float = 1e-3,
    atom_cap: float = 1e8,
) -> float:
    """Largest eta whose dropped-variance fraction stays within budget.

    Bisects on log eta; raises AtomCapExceeded when even that eta implies
    more expected atoms than the cap (budget and cap incompatible).
    """
    if not 0.0 < rho_budget < 1.0:
        raise ValueError("auto selection needs a dropped-variance budget in (0, 1)")
    var = measures.variance(model, eps)
    sup = model.view(eps).support_sup

    def dropped(eta: float) -> float:
        return max(0.0, 1.0 - measures.restricted_moment2(model, eps, eta) / var)

    hi = sup if math.isfinite(sup) else max(eps, 1.0)
    lo = hi * 1e-18
    if dropped(lo) > rho_budget:
        raise BudgetExceededError(
            f"even eta={lo:.3g} drops more variance than the budget {rho_budget:.3g}",
            operation="auto_inner_cutoff",
        )
    if dropped(hi) <= rho_budget:
        eta = hi
    else:
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if dropped(mid) <= rho_budget:
                lo = mid
            else:
                hi = mid
        eta = lo
    lam = measures.restricted_mass(model, eps, eta)
    if lam * T * math.pi > atom_cap:
        raise AtomCapExceededError(
            f"meeting the variance budget needs ~{lam * T * math.pi:.3g} atoms "
            f"(cap {atom_cap:.3g}); loosen rho_budget or the cap",
            operation="auto_inner_cutoff",
        )
    return eta


def eta_for_atom_budget(
    model: measures.LevyModel, eps: float, T: float, expected_atoms: float
) -> float:
    """Smallest inner cutoff whose expected atom count stays within a budget.

    Used by experiments that trade a documented dropped-variance fraction for
    a bounded simulation cost (infinite-activity families at small eps).
    """
    if expected_atoms <= 0:
        raise ValueError("atom budget must be positive")
    target = expected_atoms / (T * math.pi)

    def lam(eta: float) -> float:
        return measures.restricted_mass(model, eps, eta)

    if math.isfinite(lam(0.0)) and lam(0.0) <= target:
        return 0.0
    sup = model.view(eps).support_sup
    hi = sup if math.isfinite(sup) else max(eps, 1.0)
    lo = hi * 1e-18
    if lam(lo) <= target:
        return lo
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if lam(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def simulate_gaussian_noise(
    T: float, time_steps: int, space_cells: int, rng: np.random.Generator
) -> GaussianNoiseRealization:
    """Grid of i.i.d. N(0, dt*dx) cell increments of space-time white noise."""
    if time_steps < 1 or space_cells < 1:
        raise ValueError("grid dimensions must be positive")
    if T <= 0:
        raise ValueError("horizon must be positive")
    sd = math.sqrt((T / time_steps) * (math.pi / space_cells))
    inc = rng.normal(0.0, sd, size=(time_steps, space_cells))
    return GaussianNoiseRealization(increments=inc, T=T)


def dump_atoms(realization: LevyNoiseRealization, path: str) -> None:
    """Write atoms as consecutive (t, x, z) little-endian float64 triplets."""
    arr = np.column_stack([realization.t, realization.x, realization.z]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(arr.tobytes())


def load_atoms(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back (t, x, z) arrays written by `dump_atoms`."""
    raw = np.fromfile(path, dtype="<f8")
    if raw.size % 3:
        raise ValueError(f"atom replay file {path} is not a whole number of triplets")
    arr = raw.reshape(-1, 3)
    return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()

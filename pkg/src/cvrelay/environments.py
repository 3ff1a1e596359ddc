"""The two correlated-noise Gaussian environment families.

A correlated-thermal environment injects thermal noise of variance omega
through a beam splitter of transmissivity tau on each of the two links, with
cross-link correlations (g, g') between the two injected modes.  Its
additive-noise limit (tau -> 1, omega -> inf at fixed n = (1-tau) omega)
displaces the two travelling modes by classically correlated Gaussian noise
with variance n and correlation coefficients (c, c').

Inequalities are evaluated with a ``BOUNDARY_BAND`` guard: parameter points
within the band of an equality are accepted and flagged as boundary cases,
since the interesting region extends right up to the physicality border.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import CovarianceMatrix, ValidationError, entropic_h

BOUNDARY_BAND = 1e-9


@dataclass(frozen=True)
class ThermalEnvironment:
    """Correlated-thermal environment (tau, omega, g, g').

    Physicality requires |g| < omega, |g'| < omega and
    omega |g + g'| <= omega^2 + g g' - 1; the environment is additionally
    separable when omega |g - g'| <= omega^2 - g g' - 1.
    """

    tau: float
    omega: float
    g: float = 0.0
    gp: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"transmissivity must lie in (0, 1), got {self.tau!r}")
        if self.omega < 1.0 - BOUNDARY_BAND:
            raise ValidationError(f"thermal variance must be >= 1, got {self.omega!r}")
        name, slack = min(self._physicality_slacks().items(), key=lambda kv: kv[1])
        if slack < -BOUNDARY_BAND:
            raise ValidationError(f"bona-fide violation: {name} fails by {-slack:.6g}")

    def _physicality_slacks(self) -> dict[str, float]:
        w, g, gp = self.omega, self.g, self.gp
        return {
            "|g| < omega": w - abs(g),
            "|g'| < omega": w - abs(gp),
            "omega|g+g'| <= omega^2 + g g' - 1": w * w + g * gp - 1.0 - w * abs(g + gp),
        }

    @property
    def is_separable(self) -> bool:
        w, g, gp = self.omega, self.g, self.gp
        return w * abs(g - gp) <= w * w - g * gp - 1.0 + BOUNDARY_BAND

    @property
    def is_boundary(self) -> bool:
        """True when any physicality or separability inequality is saturated."""
        w, g, gp = self.omega, self.g, self.gp
        slacks = list(self._physicality_slacks().values())
        slacks.append(w * w - g * gp - 1.0 - w * abs(g - gp))
        return any(abs(s) <= BOUNDARY_BAND for s in slacks)

    def mirrored(self) -> "ThermalEnvironment":
        """Correlation-sign flip, the view seen by the conjugate Bell detection.

        Detecting (q_plus, p_minus) instead of (q_minus, p_plus) inverts the
        correlation plane through the origin.
        """
        return ThermalEnvironment(self.tau, self.omega, -self.g, -self.gp)


@dataclass(frozen=True)
class AdditiveEnvironment:
    """Correlated-additive classical noise (n, c, c')."""

    n: float
    c: float = 0.0
    cp: float = 0.0

    def __post_init__(self):
        if self.n < -BOUNDARY_BAND:
            raise ValidationError(f"additive noise variance must be >= 0, got {self.n!r}")
        for name, value in (("c", self.c), ("cp", self.cp)):
            if abs(value) > 1.0 + BOUNDARY_BAND:
                raise ValidationError(f"correlation coefficient {name}={value!r} outside [-1, 1]")

    def mirrored(self) -> "AdditiveEnvironment":
        return AdditiveEnvironment(self.n, -self.c, -self.cp)


def thermal_env_cm(env: ThermalEnvironment) -> CovarianceMatrix:
    """Two-mode covariance matrix [[omega I, G], [G, omega I]], G = diag(g, g')."""
    i2 = np.eye(2)
    gmat = np.diag([env.g, env.gp])
    m = np.block([[env.omega * i2, gmat], [gmat, env.omega * i2]])
    try:
        return CovarianceMatrix(m)
    except ValidationError as exc:
        raise ValidationError(
            f"environment sits on the physicality boundary: {exc}"
        ) from None


def is_separable_env(env: ThermalEnvironment) -> bool:
    return env.is_separable


def kappa_params(env) -> tuple[float, float]:
    """Effective relay noise parameters (kappa, kappa') of an environment.

    Thermal family: kappa = (1/tau - 1)(omega - g), kappa' = (1/tau - 1)(omega + g').
    Additive family: kappa = (1 - c) n, kappa' = (1 + c') n.  Both are >= 0;
    boundary rounding is clamped at zero.
    """
    if isinstance(env, ThermalEnvironment):
        f = 1.0 / env.tau - 1.0
        k, kp = f * (env.omega - env.g), f * (env.omega + env.gp)
    elif isinstance(env, AdditiveEnvironment):
        k, kp = (1.0 - env.c) * env.n, (1.0 + env.cp) * env.n
    else:
        raise ValidationError(f"unsupported environment type {type(env).__name__}")
    return max(k, 0.0), max(kp, 0.0)


def entanglement_breaking_threshold(tau: float) -> float:
    """Thermal variance (1 + tau) / (1 - tau) above which each link breaks entanglement."""
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"transmissivity must lie in (0, 1), got {tau!r}")
    return (1.0 + tau) / (1.0 - tau)


def _env_spectrum(env: ThermalEnvironment) -> tuple[float, float]:
    # closed two-mode form; avoids building the (possibly boundary-singular) CM
    w, g, gp = env.omega, env.g, env.gp
    det_v = (w * w - g * g) * (w * w - gp * gp)
    delta = 2.0 * w * w + 2.0 * g * gp
    disc = max(delta * delta - 4.0 * det_v, 0.0)
    lo = math.sqrt(max((delta - math.sqrt(disc)) / 2.0, 0.0))
    hi = math.sqrt((delta + math.sqrt(disc)) / 2.0)
    return lo, hi


def env_mutual_information(env: ThermalEnvironment) -> float:
    """Quantum mutual information (bits) between the two environment modes.

    Quantifies the amount of (separable) correlation the environment offers:
    2 h(omega) minus the joint entropy.  Zero iff g = g' = 0.
    """
    lo, hi = _env_spectrum(env)
    return 2.0 * entropic_h(env.omega) - entropic_h(lo) - entropic_h(hi)


def env_discord(env: ThermalEnvironment):
    """Quantum discord of the environment pair. Not provided by this package."""
    raise NotImplementedError(
        "discord is not implemented; use env_mutual_information for the "
        "total correlation content"
    )


def additive_limit(env: ThermalEnvironment) -> AdditiveEnvironment:
    """Map a thermal environment to its additive-noise limit parameters.

    n = (1 - tau) omega, c = g / (omega - 1), c' = g' / (omega - 1).  The map
    is undefined at omega = 1 and the resulting coefficients must lie in
    [-1, 1] to describe a valid additive environment.
    """
    if env.omega <= 1.0 + BOUNDARY_BAND:
        raise ValidationError("additive limit is undefined at omega = 1")
    scale = env.omega - 1.0
    return AdditiveEnvironment((1.0 - env.tau) * env.omega, env.g / scale, env.gp / scale)


def additive_env_classical_cm(env: AdditiveEnvironment) -> np.ndarray:
    """Classical 4x4 covariance of the displacement noise (xi_1, ..., xi_4).

    Equal to n [[I, C], [C, I]] with C = diag(c, c'); positive semidefinite
    for all admissible parameters, and singular at |c| = 1 or |c'| = 1.
    """
    i2 = np.eye(2)
    cmat = np.diag([env.c, env.cp])
    return env.n * np.block([[i2, cmat], [cmat, i2]])


def additive_link_cm(mu: float, n: float) -> CovarianceMatrix:
    """Joint covariance of a kept TMSV arm and its additively degraded twin.

    The smallest PTS eigenvalue of this matrix reaches 1 exactly at n = 2,
    the entanglement-breaking point of the additive family.
    """
    if mu < 1.0:
        raise ValidationError("TMSV variance must be >= 1")
    i2 = np.eye(2)
    z = np.diag([1.0, -1.0])
    c = math.sqrt(mu * mu - 1.0)
    return CovarianceMatrix(np.block([[mu * i2, c * z], [c * z, (mu + n) * i2]]))

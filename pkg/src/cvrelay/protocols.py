"""Closed-form analyzers for the relay protocols.

Covers entanglement swapping, coherent-state teleportation, one-way
entanglement/key distillation and practical relay QKD, each for finite
resource variance mu and in the asymptotic large-mu limit, plus the
single-repeater secret-key bound for additive-noise links.

Everything funnels through the pair (kappa, kappa') delivered by
``environments.kappa_params``, so the correlated-thermal and the
correlated-additive families share one code path.  The kappa-level helpers
accept numpy arrays and broadcast, which is what the scan layer relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    CovarianceMatrix,
    ValidationError,
    _h_arr,
    two_mode_spectrum,
)
from .environments import (
    AdditiveEnvironment,
    ThermalEnvironment,
    entanglement_breaking_threshold,
    kappa_params,
)

FLAG_GUARD = 1e-12  # open-inequality guard band for protocol success flags

_I2 = np.eye(2)
_Z2 = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class SwapInput:
    """Resources fed to the relay: Bob's TMSV variance mu, optionally a
    different Alice variance phi, and the environment of the two links."""

    mu: float
    env: ThermalEnvironment | AdditiveEnvironment
    phi: float | None = None

    def __post_init__(self):
        if self.mu < 1.0:
            raise ValidationError(f"mu must be >= 1, got {self.mu!r}")
        if self.phi is not None and self.phi < 1.0:
            raise ValidationError(f"phi must be >= 1, got {self.phi!r}")

    @property
    def phi_value(self) -> float:
        return self.mu if self.phi is None else self.phi

    @property
    def symmetric(self) -> bool:
        return self.phi is None or self.phi == self.mu


@dataclass(frozen=True)
class TeleportCorrection:
    """Receiver-side correction: squeezer scale and amplifier gain, with the
    intermediate theta parameters and the corrected output covariance."""

    squeeze_r: float
    gain_eta: float
    theta1: float
    theta1_prime: float
    output_cm: np.ndarray


@dataclass(frozen=True)
class ProtocolReport:
    """All analyzer outputs at one parameter point.

    ``flags`` holds swap_ok / tele_quantum / distill_ok / qkd_ok, each True,
    False or "marginal" when the defining inequality sits inside the guard
    band.  Asymptotic reports carry mu = inf and infinite raw mutual
    information / Holevo terms whose difference (the rate) stays finite.
    """

    epsilon: float
    log_neg: float
    fidelity: float
    coherent_info: float
    mutual_info_ab: float
    holevo_eve: float
    key_rate: float
    flags: dict
    kappa: float
    kappa_prime: float
    mu: float
    xi: float
    key_rate_lb: float | None = None

    def to_dict(self) -> dict:
        out = {
            "mu": self.mu,
            "xi": self.xi,
            "kappa": self.kappa,
            "kappa_prime": self.kappa_prime,
            "epsilon": self.epsilon,
            "log_neg": self.log_neg,
            "fidelity": self.fidelity,
            "coherent_info": self.coherent_info,
            "mutual_info_ab": self.mutual_info_ab,
            "holevo_eve": self.holevo_eve,
            "key_rate": self.key_rate,
            "flags": dict(self.flags),
        }
        if self.key_rate_lb is not None:
            out["key_rate_lb"] = self.key_rate_lb
        return out


def _flag(value: float, threshold: float, want_greater: bool):
    gap = (value - threshold) if want_greater else (threshold - value)
    if abs(gap) <= FLAG_GUARD:
        return "marginal"
    return bool(gap > 0.0)


# ---------------------------------------------------------------------------
# pre-measurement four-mode state


def evolved_cm(inp: SwapInput) -> CovarianceMatrix:
    """Covariance matrix of modes (a, b, A', B') after the noisy links.

    Mode a is Alice's kept arm (variance phi), b is Bob's kept arm
    (variance mu); A' and B' are the transmitted arms arriving at the relay.
    """
    phi, mu = inp.phi_value, inp.mu
    tphi = math.sqrt(phi * phi - 1.0)
    tmu = math.sqrt(mu * mu - 1.0)
    z = np.zeros((2, 2))
    if isinstance(inp.env, ThermalEnvironment):
        env = inp.env
        st = math.sqrt(env.tau)
        y = env.tau * phi + (1.0 - env.tau) * env.omega
        x = env.tau * mu + (1.0 - env.tau) * env.omega
        gmat = (1.0 - env.tau) * np.diag([env.g, env.gp])
        ca, cb = tphi * st * _Z2, tmu * st * _Z2
    else:
        env = inp.env
        y = phi + env.n
        x = mu + env.n
        gmat = env.n * np.diag([env.c, env.cp])
        ca, cb = tphi * _Z2, tmu * _Z2
    m = np.block(
        [
            [phi * _I2, z, ca, z],
            [z, mu * _I2, z, cb],
            [ca, z, y * _I2, gmat],
            [z, cb, gmat, x * _I2],
        ]
    )
    return CovarianceMatrix(m)


def additive_evolved_cm(mu: float, env: AdditiveEnvironment) -> CovarianceMatrix:
    """Four-mode pre-measurement state for the additive family."""
    return evolved_cm(SwapInput(mu, env))


# ---------------------------------------------------------------------------
# swapping


def swapped_cm(inp: SwapInput) -> CovarianceMatrix:
    """Conditional covariance of the remote pair (a, b) after Bell detection.

    Independent of the broadcast outcome, which only shifts the mean.  The
    q sector is damped by theta_q = (phi + mu)/2 + kappa and the p sector by
    theta_p = (phi + mu)/2 + kappa'.
    """
    phi, mu = inp.phi_value, inp.mu
    k, kp = kappa_params(inp.env)
    tphi = math.sqrt(phi * phi - 1.0)
    tmu = math.sqrt(mu * mu - 1.0)
    tq = (phi + mu) / 2.0 + k
    tp = (phi + mu) / 2.0 + kp
    m = np.array(
        [
            [phi - tphi * tphi / (2 * tq), 0.0, tphi * tmu / (2 * tq), 0.0],
            [0.0, phi - tphi * tphi / (2 * tp), 0.0, -tphi * tmu / (2 * tp)],
            [tphi * tmu / (2 * tq), 0.0, mu - tmu * tmu / (2 * tq), 0.0],
            [0.0, -tphi * tmu / (2 * tp), 0.0, mu - tmu * tmu / (2 * tp)],
        ]
    )
    return CovarianceMatrix(m)


def additive_swapped_cm(mu: float, env: AdditiveEnvironment) -> CovarianceMatrix:
    return swapped_cm(SwapInput(mu, env))


def epsilon_from_kappas(mu, k, kp):
    """Smallest PTS eigenvalue of the symmetric swapped state (array-friendly).

    sqrt[(1 + mu k)(1 + mu k') / ((mu + k)(mu + k'))]; equals 1 at mu = 1 and
    drops below 1, for any mu > 1, exactly when k k' < 1.
    """
    mu, k, kp = np.asarray(mu, float), np.asarray(k, float), np.asarray(kp, float)
    return np.sqrt((1.0 + mu * k) * (1.0 + mu * kp) / ((mu + k) * (mu + kp)))


def swap_epsilon(inp: SwapInput) -> float:
    if not inp.symmetric:
        raise ValidationError("the closed epsilon form assumes identical sources; set phi = mu")
    k, kp = kappa_params(inp.env)
    return float(epsilon_from_kappas(inp.mu, k, kp))


def swap_epsilon_asymptotic(env) -> float:
    """Large-mu optimum sqrt(kappa kappa')."""
    k, kp = kappa_params(env)
    return math.sqrt(k * kp)


def swap_log_negativity(inp: SwapInput) -> float:
    return max(0.0, -math.log2(swap_epsilon(inp)))


def swapped_spectrum(inp: SwapInput) -> tuple[float, float]:
    """Symplectic spectrum (nu_minus, nu_plus) of the swapped state."""
    if not inp.symmetric:
        return two_mode_spectrum(swapped_cm(inp))
    k, kp = kappa_params(inp.env)
    mu = inp.mu
    pair = sorted(
        (
            math.sqrt(mu * (1.0 + mu * k) / (mu + k)),
            math.sqrt(mu * (1.0 + mu * kp) / (mu + kp)),
        )
    )
    return pair[0], pair[1]


def swapped_reduced_eigenvalue(inp: SwapInput) -> float:
    """Symplectic eigenvalue of Bob's reduced conditional state."""
    k, kp = kappa_params(inp.env)
    mu = inp.mu
    return 0.5 * math.sqrt(
        (1.0 + 2.0 * mu * k + mu * mu)
        * (1.0 + 2.0 * mu * kp + mu * mu)
        / ((mu + k) * (mu + kp))
    )


def thermal_reactivation_g(tau: float, gp, omega: float | None = None):
    """Swapping-reactivation threshold g(g') where kappa kappa' = 1.

    Defaults to the entanglement-breaking noise omega_EB(tau); points below
    the returned g reactivate nothing, points above swap entanglement for
    every mu > 1.  Array-friendly in g'.
    """
    if omega is None:
        omega = entanglement_breaking_threshold(tau)
    gp = np.asarray(gp, float)
    f = 1.0 / tau - 1.0
    return omega - 1.0 / (f * f * (omega + gp))


def additive_reactivation_c(n: float, cp):
    """Additive-family threshold c(c') where (1 - c)(1 + c') = 1/n^2."""
    if n <= 0.0:
        raise ValidationError("threshold curve requires n > 0")
    cp = np.asarray(cp, float)
    return 1.0 - 1.0 / (n * n * (1.0 + cp))


# ---------------------------------------------------------------------------
# teleportation


def _thetas(inp: SwapInput) -> tuple[float, float]:
    k, kp = kappa_params(inp.env)
    half = (inp.mu + 1.0) / 2.0
    return half + k, half + kp


def teleport_correction(inp: SwapInput) -> TeleportCorrection:
    """Receiver correction restoring the input mean of the teleported state.

    A squeezer balances the q/p damping and a quantum-limited amplifier with
    gain >= 1 rescales the mean back to the input amplitude.  Undefined at
    mu = 1 where there is no entanglement resource and the gain diverges.
    """
    if inp.mu <= 1.0:
        raise ValidationError("no entanglement resource: teleportation needs mu > 1")
    t1, t1p = _thetas(inp)
    tmu2 = inp.mu * inp.mu - 1.0
    r = math.sqrt(t1 / t1p)
    eta = 4.0 * t1 * t1p / tmu2
    mu = inp.mu
    v_out = (
        (4.0 * mu / tmu2) * np.diag([t1 * t1, t1p * t1p])
        - 2.0 * np.diag([t1, t1p])
        + (eta - 1.0) * _I2
    )
    return TeleportCorrection(r, eta, t1, t1p, v_out)


def fidelity_from_kappas(mu, k, kp):
    """Average coherent-state teleportation fidelity (array-friendly)."""
    mu, k, kp = np.asarray(mu, float), np.asarray(k, float), np.asarray(kp, float)
    tmu2 = mu * mu - 1.0
    n = (
        (2.0 / tmu2)
        * np.sqrt((1.0 + mu + 2.0 * k) * (1.0 + mu + 2.0 * kp))
        * np.sqrt(1.0 + kp + mu * (1.0 + k))
        * np.sqrt(1.0 + k + mu * (1.0 + kp))
    )
    return 2.0 / n


def teleport_fidelity(inp: SwapInput) -> float:
    """Outcome-independent average fidelity; > 1/2 certifies quantum operation."""
    if inp.mu <= 1.0:
        raise ValidationError("no entanglement resource: teleportation needs mu > 1")
    k, kp = kappa_params(inp.env)
    return float(fidelity_from_kappas(inp.mu, k, kp))


def fidelity_asymptotic_from_kappas(k, kp):
    k, kp = np.asarray(k, float), np.asarray(kp, float)
    return 1.0 / np.sqrt((1.0 + k) * (1.0 + kp))


def teleport_fidelity_asymptotic(env) -> float:
    """Large-mu fidelity [(1+kappa)(1+kappa')]^(-1/2).

    Never exceeds 1/(1 + sqrt(kappa kappa')), with equality under
    antisymmetric correlations (kappa = kappa').
    """
    k, kp = kappa_params(env)
    return float(fidelity_asymptotic_from_kappas(k, kp))


# ---------------------------------------------------------------------------
# distillation (coherent information)


def coherent_info_from_kappas(mu, k, kp):
    """One-way distillation lower bound h(nu_b) - h(nu_-) - h(nu_+) in bits."""
    mu, k, kp = np.asarray(mu, float), np.asarray(k, float), np.asarray(kp, float)
    nb = 0.5 * np.sqrt(
        (1.0 + 2.0 * mu * k + mu * mu) * (1.0 + 2.0 * mu * kp + mu * mu) / ((mu + k) * (mu + kp))
    )
    nlo = np.sqrt(mu * (1.0 + mu * k) / (mu + k))
    nhi = np.sqrt(mu * (1.0 + mu * kp) / (mu + kp))
    return _h_arr(nb) - _h_arr(nlo) - _h_arr(nhi)


def coherent_information(inp: SwapInput) -> float:
    if not inp.symmetric:
        raise ValidationError("coherent information is defined for the symmetric protocol")
    k, kp = kappa_params(inp.env)
    return float(coherent_info_from_kappas(inp.mu, k, kp))


def coherent_information_asymptotic(env) -> float:
    """Large-mu limit -log2(e * sqrt(kappa kappa')); +inf for noiseless links."""
    eps = swap_epsilon_asymptotic(env)
    if eps == 0.0:
        return math.inf
    return -math.log2(math.e * eps)


# ---------------------------------------------------------------------------
# practical QKD


def qkd_mutual_information_from_kappas(mu, k, kp):
    """Alice-Bob mutual information (bits) of the heterodyne protocol."""
    mu, k, kp = np.asarray(mu, float), np.asarray(k, float), np.asarray(kp, float)
    sigma = ((1.0 + mu + 2.0 * k) ** 2 * (1.0 + mu + 2.0 * kp) ** 2) / (
        16.0 * (1.0 + k) * (1.0 + kp) * (mu + k) * (mu + kp)
    )
    return 0.5 * np.log2(sigma)


def qkd_holevo_from_kappas(mu, k, kp):
    """Eavesdropper Holevo bound h(nu_-) + h(nu_+) - h(nu_c) in bits."""
    mu, k, kp = np.asarray(mu, float), np.asarray(k, float), np.asarray(kp, float)
    nlo = np.sqrt(mu * (1.0 + mu * k) / (mu + k))
    nhi = np.sqrt(mu * (1.0 + mu * kp) / (mu + kp))
    nc = np.sqrt(
        (1.0 + mu + 2.0 * mu * k) * (1.0 + mu + 2.0 * mu * kp)
        / ((1.0 + mu + 2.0 * k) * (1.0 + mu + 2.0 * kp))
    )
    return _h_arr(nlo) + _h_arr(nhi) - _h_arr(nc)


def rate_from_kappas(xi, mu, k, kp):
    return xi * qkd_mutual_information_from_kappas(mu, k, kp) - qkd_holevo_from_kappas(mu, k, kp)


def _check_xi(xi: float):
    if not 0.0 < xi <= 1.0:
        raise ValidationError(f"reconciliation efficiency must lie in (0, 1], got {xi!r}")


def qkd_mutual_information(inp: SwapInput) -> float:
    k, kp = kappa_params(inp.env)
    return float(qkd_mutual_information_from_kappas(inp.mu, k, kp))


def qkd_holevo_bound(inp: SwapInput) -> float:
    k, kp = kappa_params(inp.env)
    return float(qkd_holevo_from_kappas(inp.mu, k, kp))


def qkd_rate(inp: SwapInput, xi: float = 1.0) -> float:
    """Secret-key rate xi * I_AB - chi_E in bits per relay use.

    Non-positive results are returned as such (mu = 1 gives exactly zero
    mutual information and zero rate).
    """
    _check_xi(xi)
    k, kp = kappa_params(inp.env)
    return float(rate_from_kappas(xi, inp.mu, k, kp))


def additive_qkd_rate(mu: float, env: AdditiveEnvironment, xi: float = 1.0) -> float:
    return qkd_rate(SwapInput(mu, env), xi)


def asymptotic_rates_from_kappas(k, kp):
    """Large-mu ideal-reconciliation rate and its epsilon-only lower bound."""
    k, kp = np.asarray(k, float), np.asarray(kp, float)
    eps = np.sqrt(k * kp)
    with np.errstate(divide="ignore"):
        r_opt = np.where(
            eps > 0.0,
            np.log2(1.0 / (math.e**2 * np.sqrt((1.0 + k) * (1.0 + kp) * k * kp)))
            + _h_arr(np.sqrt((1.0 + 2.0 * k) * (1.0 + 2.0 * kp))),
            np.inf,
        )
        f_opt = 1.0 / np.sqrt((1.0 + k) * (1.0 + kp))
        r_lb = np.where(
            eps > 0.0,
            np.log2(f_opt) - np.log2(math.e**2 * eps) + _h_arr(1.0 + 2.0 * eps),
            np.inf,
        )
    return r_opt, r_lb


def qkd_rate_asymptotic(env) -> tuple[float, float]:
    """(R_opt, R_LB) for large mu and ideal reconciliation.

    R_LB never exceeds R_opt and the two coincide under antisymmetric
    correlations; R_LB can only be positive below epsilon_opt ~ 0.192.
    Both are +inf when kappa kappa' = 0.
    """
    k, kp = kappa_params(env)
    r_opt, r_lb = asymptotic_rates_from_kappas(k, kp)
    return float(r_opt), float(r_lb)


def key_rate_from_cm(cm, xi: float = 1.0) -> dict:
    """Secret-key metrics of an arbitrary two-mode conditional state.

    Generic path used both as the independent oracle for the closed-form
    rate and for experimentally reconstructed covariance matrices: Alice
    heterodynes mode 0, Bob mode 1, the eavesdropper holds the full
    purification.  Symplectic eigenvalues of estimated matrices may dip
    below 1 by statistical noise and are clamped at 1.

    Returns a dict with mutual_info, holevo, rate and nu_c.
    """
    _check_xi(xi)
    m = cm.m if isinstance(cm, CovarianceMatrix) else np.asarray(cm, dtype=float)
    if m.shape != (4, 4):
        raise ValidationError("key-rate evaluation requires a two-mode covariance matrix")
    a, b, c = m[:2, :2], m[2:, 2:], m[:2, 2:]
    b_cond = b - c.T @ np.linalg.solve(a + _I2, c)
    denom = 1.0 + np.linalg.det(b_cond) + np.trace(b_cond)
    numer = 1.0 + np.linalg.det(b) + np.trace(b)
    if denom <= 0.0 or numer <= 0.0:
        raise ValidationError("conditional state is unphysical; more samples needed")
    mutual = 0.5 * math.log2(numer / denom)
    nlo, nhi = two_mode_spectrum(m)
    nc = math.sqrt(max(np.linalg.det(b_cond), 0.0))
    holevo = float(_h_arr(nlo) + _h_arr(nhi) - _h_arr(nc))
    return {
        "mutual_info": mutual,
        "holevo": holevo,
        "rate": xi * mutual - holevo,
        "nu_c": nc,
    }


# ---------------------------------------------------------------------------
# repeater bound


def repeater_bound_phi(n: float) -> float:
    """Single-repeater secret-key bound for additive-noise Gaussian links.

    Phi(n) = (n/2 - 1)/ln 2 - log2(n/2) for 0 < n <= 2 and 0 beyond; it
    diverges as n -> 0 (noiseless links).
    """
    if n < 0.0:
        raise ValidationError("additive noise must be >= 0")
    if n == 0.0:
        return math.inf
    if n > 2.0:
        return 0.0
    return (n / 2.0 - 1.0) / math.log(2.0) - math.log2(n / 2.0)


# ---------------------------------------------------------------------------
# per-point reports


def protocol_report(inp: SwapInput, xi: float = 1.0) -> ProtocolReport:
    """Run every finite-mu analyzer at one parameter point."""
    _check_xi(xi)
    k, kp = kappa_params(inp.env)
    eps = swap_epsilon(inp)
    fid = teleport_fidelity(inp) if inp.mu > 1.0 else 0.5
    coh = coherent_information(inp)
    mutual = qkd_mutual_information(inp)
    holevo = qkd_holevo_bound(inp)
    rate = xi * mutual - holevo
    return ProtocolReport(
        epsilon=eps,
        log_neg=max(0.0, -math.log2(eps)),
        fidelity=fid,
        coherent_info=coh,
        mutual_info_ab=mutual,
        holevo_eve=holevo,
        key_rate=rate,
        flags={
            "swap_ok": _flag(eps, 1.0, want_greater=False),
            "tele_quantum": _flag(fid, 0.5, want_greater=True),
            "distill_ok": _flag(coh, 0.0, want_greater=True),
            "qkd_ok": _flag(rate, 0.0, want_greater=True),
        },
        kappa=k,
        kappa_prime=kp,
        mu=inp.mu,
        xi=xi,
    )


def protocol_report_asymptotic(env) -> ProtocolReport:
    """Large-mu report: optimal swapping, teleportation, distillation and QKD."""
    k, kp = kappa_params(env)
    eps = math.sqrt(k * kp)
    fid = teleport_fidelity_asymptotic(env)
    coh = coherent_information_asymptotic(env)
    r_opt, r_lb = qkd_rate_asymptotic(env)
    return ProtocolReport(
        epsilon=eps,
        log_neg=math.inf if eps == 0.0 else max(0.0, -math.log2(eps)),
        fidelity=fid,
        coherent_info=coh,
        mutual_info_ab=math.inf,
        holevo_eve=math.inf,
        key_rate=r_opt,
        flags={
            "swap_ok": _flag(eps, 1.0, want_greater=False),
            "tele_quantum": _flag(fid, 0.5, want_greater=True),
            "distill_ok": True if coh == math.inf else _flag(coh, 0.0, want_greater=True),
            "qkd_ok": True if r_opt == math.inf else _flag(r_opt, 0.0, want_greater=True),
        },
        kappa=k,
        kappa_prime=kp,
        mu=math.inf,
        xi=1.0,
        key_rate_lb=r_lb,
    )

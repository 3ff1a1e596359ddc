"""Covariance-matrix algebra for multimode Gaussian states.

Quadrature ordering is (q1, p1, ..., qn, pn) and everything is expressed in
shot-noise units: the vacuum state has variance 1 in each quadrature, so a
physical covariance matrix has all symplectic eigenvalues >= 1.

The module provides the covariance-matrix container, symplectic spectra and
entropies, partial transposition / log-negativity, Gaussian unitaries, and a
general Schur-complement oracle for conditioning on heterodyne and CV Bell
measurements.  All functions are pure; none of them mutates its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Structural tolerances are tighter than physics tolerances: conditioning
# involves one matrix inversion, so physics checks get an order of headroom.
SYMMETRY_RTOL = 1e-12
UNCERTAINTY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10
_PAIR_RTOL = 1e-8  # pairing tolerance for the moduli of eig(i*Omega*V)
_COND_LIMIT = 1e13  # conditioning blocks beyond this are treated as singular


class ValidationError(ValueError):
    """A domain object or an operation input violates its contract."""


class NumericDegeneracyError(ArithmeticError):
    """A conditioning or estimation block is singular to working precision."""


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form, one [[0, 1], [-1, 0]] block per mode."""
    if n_modes < 1:
        raise ValidationError("n_modes must be a positive integer")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_matrix(cm) -> np.ndarray:
    return cm.m if isinstance(cm, CovarianceMatrix) else np.asarray(cm, dtype=float)


def _spectrum_of(m: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a symmetric positive-definite matrix.

    Computed as the moduli of the eigenvalues of i*Omega*m, which come in
    +/- pairs; the pairs are collapsed to n values, ascending.
    """
    n = m.shape[0] // 2
    ev = np.linalg.eigvals(1j * symplectic_form(n) @ m)
    mods = np.sort(np.abs(ev)).reshape(n, 2)
    gap = mods[:, 1] - mods[:, 0]
    if np.any(gap > _PAIR_RTOL * np.maximum(mods[:, 1], 1.0)):
        raise NumericDegeneracyError("eigenvalue moduli of i*Omega*V did not pair up")
    return mods.mean(axis=1)


class CovarianceMatrix:
    """A 2n x 2n quadrature covariance matrix in shot-noise units.

    Construction validates symmetry, positive definiteness and the
    uncertainty principle (smallest symplectic eigenvalue >= 1 within
    ``UNCERTAINTY_TOL``).  The stored array is read-only.
    """

    __slots__ = ("m", "n_modes")

    def __init__(self, entries):
        m = np.array(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0 or m.shape[0] % 2:
            raise ValidationError(f"covariance matrix must be 2n x 2n, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.T).max()) > SYMMETRY_RTOL * scale:
            raise ValidationError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValidationError("covariance matrix is not positive definite") from None
        nu_min = float(_spectrum_of(m).min())
        if nu_min < 1.0 - UNCERTAINTY_TOL:
            raise ValidationError(
                f"uncertainty principle violated: smallest symplectic eigenvalue {nu_min:.12g} < 1"
            )
        m.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_modes", m.shape[0] // 2)

    def __setattr__(self, name, value):
        raise AttributeError("CovarianceMatrix is immutable")

    def __repr__(self):
        return f"CovarianceMatrix(n_modes={self.n_modes})"

    def reduced(self, modes) -> "CovarianceMatrix":
        """Covariance matrix of a subset of modes (partial trace of the rest)."""
        idx = _quad_indices(self.n_modes, modes)
        return CovarianceMatrix(self.m[np.ix_(idx, idx)])

    def block(self, i: int, j: int) -> np.ndarray:
        """The 2x2 block coupling mode i to mode j."""
        return self.m[2 * i : 2 * i + 2, 2 * j : 2 * j + 2].copy()


def _quad_indices(n_modes: int, modes) -> list[int]:
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValidationError("duplicate mode indices")
    for k in modes:
        if not 0 <= k < n_modes:
            raise ValidationError(f"mode index {k} out of range for {n_modes} modes")
    return [q for k in modes for q in (2 * k, 2 * k + 1)]


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state: mean quadrature vector, covariance matrix, mode labels."""

    mean: np.ndarray
    cm: CovarianceMatrix
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        mean.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        if mean.shape != (2 * self.cm.n_modes,):
            raise ValidationError(
                f"mean has length {mean.shape}, expected {2 * self.cm.n_modes}"
            )
        labels = tuple(self.labels) or tuple(f"m{k}" for k in range(self.cm.n_modes))
        if len(labels) != self.cm.n_modes:
            raise ValidationError("one label per mode required")
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.cm.n_modes

    def reduced(self, modes) -> "GaussianState":
        idx = _quad_indices(self.n_modes, modes)
        return GaussianState(
            self.mean[idx], self.cm.reduced(modes), tuple(self.labels[k] for k in modes)
        )


class SymplecticMatrix:
    """A real matrix S with S Omega S^T = Omega (checked entrywise)."""

    __slots__ = ("m", "n_modes")

    def __init__(self, entries):
        m = np.array(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValidationError(f"symplectic matrix must be 2n x 2n, got {m.shape}")
        n = m.shape[0] // 2
        omega = symplectic_form(n)
        if float(np.abs(m @ omega @ m.T - omega).max()) > SYMPLECTIC_TOL:
            raise ValidationError("matrix does not preserve the symplectic form")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_modes", n)

    def __setattr__(self, name, value):
        raise AttributeError("SymplecticMatrix is immutable")

    def transposed(self) -> "SymplecticMatrix":
        return SymplecticMatrix(self.m.T)

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.m @ other.m)


# ---------------------------------------------------------------------------
# constructors


def vacuum_cm(n_modes: int = 1) -> CovarianceMatrix:
    return CovarianceMatrix(np.eye(2 * n_modes))


def thermal_cm(variance: float, n_modes: int = 1) -> CovarianceMatrix:
    """Thermal state of the given quadrature variance (vacuum at 1)."""
    if variance < 1.0 - UNCERTAINTY_TOL:
        raise ValidationError("thermal variance must be >= 1 in shot-noise units")
    return CovarianceMatrix(variance * np.eye(2 * n_modes))


def tmsv_cm(mu: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with quadrature variance mu >= 1."""
    if mu < 1.0:
        raise ValidationError("TMSV variance must be >= 1")
    i2 = np.eye(2)
    z = np.diag([1.0, -1.0])
    c = math.sqrt(mu * mu - 1.0)
    return CovarianceMatrix(np.block([[mu * i2, c * z], [c * z, mu * i2]]))


def direct_sum(*cms) -> CovarianceMatrix:
    mats = [_as_matrix(c) for c in cms]
    total = sum(m.shape[0] for m in mats)
    out = np.zeros((total, total))
    at = 0
    for m in mats:
        out[at : at + m.shape[0], at : at + m.shape[0]] = m
        at += m.shape[0]
    return CovarianceMatrix(out)


def beam_splitter(tau: float) -> SymplecticMatrix:
    """Two-mode beam splitter of transmissivity tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValidationError("transmissivity must lie in [0, 1]")
    i2 = np.eye(2)
    t, r = math.sqrt(tau), math.sqrt(1.0 - tau)
    return SymplecticMatrix(np.block([[t * i2, r * i2], [-r * i2, t * i2]]))


def quadrature_squeezer(s: float) -> SymplecticMatrix:
    """Single-mode squeezer diag(s, 1/s) rescaling q by s and p by 1/s."""
    if s <= 0.0:
        raise ValidationError("squeezing scale must be positive")
    return SymplecticMatrix(np.diag([s, 1.0 / s]))


def rotation(theta: float) -> SymplecticMatrix:
    c, s = math.cos(theta), math.sin(theta)
    return SymplecticMatrix(np.array([[c, s], [-s, c]]))


def expand_symplectic(s: SymplecticMatrix, modes, n_total: int) -> SymplecticMatrix:
    """Embed a k-mode symplectic matrix into n_total modes, identity elsewhere."""
    modes = list(modes)
    if len(modes) != s.n_modes:
        raise ValidationError("mode list does not match the symplectic matrix size")
    idx = _quad_indices(n_total, modes)
    out = np.eye(2 * n_total)
    out[np.ix_(idx, idx)] = s.m
    return SymplecticMatrix(out)


def permute_modes(state: GaussianState, order) -> GaussianState:
    """Reorder the modes of a state; `order` lists old indices in new order."""
    order = list(order)
    if sorted(order) != list(range(state.n_modes)):
        raise ValidationError("order must be a permutation of all mode indices")
    idx = _quad_indices(state.n_modes, order)
    return GaussianState(
        state.mean[idx],
        CovarianceMatrix(state.cm.m[np.ix_(idx, idx)]),
        tuple(state.labels[k] for k in order),
    )


# ---------------------------------------------------------------------------
# spectra, entropies, entanglement


def symplectic_spectrum(cm) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, ascending.

    Raw arrays are accepted but must be symmetric positive definite.
    """
    m = _as_matrix(cm)
    if not isinstance(cm, CovarianceMatrix):
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.T).max()) > SYMMETRY_RTOL * scale:
            raise ValidationError("matrix is not symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValidationError("matrix is not positive definite") from None
    return _spectrum_of(m)


def two_mode_spectrum(cm, transposed: bool = False) -> tuple[float, float]:
    """Closed-form symplectic spectrum of a two-mode covariance matrix.

    With ``transposed=True`` the invariant det A + det B + 2 det C is replaced
    by det A + det B - 2 det C, which yields the spectrum of the partial
    transpose.  Returns (nu_minus, nu_plus).
    """
    m = _as_matrix(cm)
    if m.shape != (4, 4):
        raise ValidationError("closed form requires a two-mode (4x4) matrix")
    det_a = float(np.linalg.det(m[:2, :2]))
    det_b = float(np.linalg.det(m[2:, 2:]))
    det_c = float(np.linalg.det(m[:2, 2:]))
    det_v = float(np.linalg.det(m))
    delta = det_a + det_b + (-2.0 if transposed else 2.0) * det_c
    disc = max(delta * delta - 4.0 * det_v, 0.0)
    hi_sq = (delta + math.sqrt(disc)) / 2.0
    if hi_sq <= 0.0:
        raise ValidationError("matrix has no real symplectic spectrum")
    # small root via the product form: avoids cancellation when hi >> lo
    return math.sqrt(max(det_v, 0.0) / hi_sq), math.sqrt(hi_sq)


def entropic_h(x: float) -> float:
    """Entropy (bits) of a single symplectic eigenvalue x >= 1.

    h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2); h(1) = 0.
    """
    if x < 1.0 - UNCERTAINTY_TOL:
        raise ValidationError(f"entropic function requires x >= 1, got {x!r}")
    if x <= 1.0:
        return 0.0
    a = (x + 1.0) / 2.0
    b = (x - 1.0) / 2.0
    return a * math.log2(a) - b * math.log2(b)


def _h_arr(x):
    # vectorised entropic function without domain checks; clamps x below 1
    x = np.maximum(np.asarray(x, dtype=float), 1.0)
    a = (x + 1.0) / 2.0
    b = (x - 1.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a * np.log2(a) - np.where(b > 0.0, b * np.log2(b), 0.0)
    return out


def von_neumann_entropy(cm) -> float:
    """Von Neumann entropy in bits, summed over the symplectic spectrum."""
    return float(sum(entropic_h(nu) for nu in symplectic_spectrum(cm)))


def pt_reflection(n_modes: int, modes) -> np.ndarray:
    """Diagonal of the partial-transposition matrix: p -> -p on given modes."""
    d = np.ones(2 * n_modes)
    for k in set(modes):
        if not 0 <= k < n_modes:
            raise ValidationError(f"mode index {k} out of range")
        d[2 * k + 1] = -1.0
    return d


def partial_transpose(cm, modes) -> np.ndarray:
    """Partial transpose of a covariance matrix on the given modes.

    Returns a plain array: the result is generally not a physical covariance
    matrix.  An empty mode set is the identity map; applying the operation
    twice restores the input bit-exactly.
    """
    m = _as_matrix(cm)
    d = pt_reflection(m.shape[0] // 2, modes)
    return d[:, None] * m * d[None, :]


def smallest_pts_eigenvalue(cm, modes) -> float:
    """Smallest symplectic eigenvalue of the partial transpose.

    A value < 1 certifies entanglement across the chosen bipartition.  The
    two-mode single-mode-transpose case uses the closed form; otherwise the
    spectrum of the transposed matrix is computed numerically.
    """
    m = _as_matrix(cm)
    modes = list(modes)
    if m.shape == (4, 4) and len(modes) == 1:
        return two_mode_spectrum(m, transposed=True)[0]
    return float(_spectrum_of(partial_transpose(m, modes)).min())


def log_negativity(cm, modes) -> float:
    """Entanglement monotone max{0, -log2(smallest PTS eigenvalue)} in bits."""
    eps = smallest_pts_eigenvalue(cm, modes)
    return max(0.0, -math.log2(eps))


# ---------------------------------------------------------------------------
# Gaussian unitaries and measurements


def apply_symplectic(state: GaussianState, s: SymplecticMatrix, d=None) -> GaussianState:
    """Gaussian unitary: mean -> S mean + d, V -> S V S^T."""
    if s.n_modes != state.n_modes:
        raise ValidationError("symplectic matrix and state have different mode counts")
    d = np.zeros(2 * state.n_modes) if d is None else np.asarray(d, dtype=float)
    if d.shape != (2 * state.n_modes,):
        raise ValidationError("displacement vector has the wrong length")
    return GaussianState(
        s.m @ state.mean + d, CovarianceMatrix(s.m @ state.cm.m @ s.m.T), state.labels
    )


def displace(state: GaussianState, d) -> GaussianState:
    d = np.asarray(d, dtype=float)
    return GaussianState(state.mean + d, state.cm, state.labels)


def _condition_quadrature(mean, v, j, z):
    # Condition a joint Gaussian on quadrature j taking value z (homodyne).
    vjj = v[j, j]
    if vjj <= 1e-13 * max(1.0, float(np.abs(np.diag(v)).max())):
        raise NumericDegeneracyError("homodyne conditioning block is singular")
    col = v[:, j].copy()
    mean = mean + col * ((z - mean[j]) / vjj)
    v = v - np.outer(col, col) / vjj
    return mean, v


def condition_on_gaussian_measurement(
    state: GaussianState, measured_modes, kind: str, outcome=None
) -> GaussianState:
    """Conditional state of the unmeasured modes after a Gaussian measurement.

    ``kind`` is "heterodyne" (projection onto coherent states, one per
    measured mode) or "bell" (balanced beam splitter over exactly two
    measured modes followed by homodyne of (q1-q2)/sqrt(2) and
    (p1+p2)/sqrt(2)).  ``outcome`` holds the measured values: two per mode
    for heterodyne, the pair (q_minus, p_plus) for bell; it defaults to
    zeros.  The conditional covariance matrix never depends on the outcome.
    """
    measured = list(measured_modes)
    n = state.n_modes
    _quad_indices(n, measured)  # validates range and duplicates
    if len(measured) == n:
        raise ValidationError("at least one mode must be retained")
    kept = [k for k in range(n) if k not in set(measured)]

    if kind == "heterodyne":
        z = np.zeros(2 * len(measured)) if outcome is None else np.asarray(outcome, float)
        if z.shape != (2 * len(measured),):
            raise ValidationError("heterodyne outcome needs two entries per measured mode")
        mi = _quad_indices(n, measured)
        ki = _quad_indices(n, kept)
        v = state.cm.m
        theta = v[np.ix_(mi, mi)] + np.eye(len(mi))
        if np.linalg.cond(theta) > _COND_LIMIT:
            raise NumericDegeneracyError("heterodyne conditioning block is singular")
        cross = v[np.ix_(ki, mi)]
        gain = np.linalg.solve(theta, cross.T).T
        mean = state.mean[ki] + gain @ (z - state.mean[mi])
        cond = v[np.ix_(ki, ki)] - gain @ cross.T
        cond = 0.5 * (cond + cond.T)
        return GaussianState(mean, CovarianceMatrix(cond), tuple(state.labels[k] for k in kept))

    if kind == "bell":
        if len(measured) != 2:
            raise ValidationError("bell measurement requires exactly two measured modes")
        z = np.zeros(2) if outcome is None else np.asarray(outcome, float)
        if z.shape != (2,):
            raise ValidationError("bell outcome is the pair (q_minus, p_plus)")
        i, j = measured
        # mode i -> (i - j)/sqrt(2), mode j -> (i + j)/sqrt(2)
        half = np.eye(2) / math.sqrt(2.0)
        mix = expand_symplectic(
            SymplecticMatrix(np.block([[half, -half], [half, half]])), [i, j], n
        )
        rotated = apply_symplectic(state, mix)
        mean, v = rotated.mean.copy(), rotated.cm.m.copy()
        mean, v = _condition_quadrature(mean, v, 2 * i, z[0])  # q of difference mode
        mean, v = _condition_quadrature(mean, v, 2 * j + 1, z[1])  # p of sum mode
        ki = _quad_indices(n, kept)
        cond = 0.5 * (v[np.ix_(ki, ki)] + v[np.ix_(ki, ki)].T)
        return GaussianState(
            mean[ki], CovarianceMatrix(cond), tuple(state.labels[k] for k in kept)
        )

    raise ValidationError(f"unknown measurement kind {kind!r}")

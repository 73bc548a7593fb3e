"""Average-case stability: Fisher information under additive Gaussian noise.

Observations are ``Y = A(theta) + Z`` with ``A`` the intensity map and ``Z``
i.i.d. ``N(0, sigma^2)``.  A complex parameter is handled in the real
coordinates ``(Re theta, Im theta)``; since the last entry of a canonical
``theta`` is real, the last imaginary coordinate is frozen and the reduced
matrix drops it.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import null_space
from .ensemble import MeasurementEnsemble, canonicalize, intensity_map

INTERIOR_RTOL = 1e-8
INTERIOR_IMAG_RTOL = 1e-12
COND_LIMIT = 1e12


class InteriorError(ValueError):
    """Raised when a complex parameter is not an interior point of the canonical set."""


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"noise sigma must be positive and finite, got {self.sigma}")


def _as_noise(noise):
    return noise if isinstance(noise, NoiseModel) else NoiseModel(float(noise))


def _prepare_theta(theta, Phi):
    theta = np.asarray(theta)
    if theta.shape != (Phi.M,):
        raise ValueError(f"theta must have shape ({Phi.M},), got {theta.shape}")
    if not np.any(theta):
        raise ValueError("theta must be nonzero")
    if not Phi.is_complex:
        if np.iscomplexobj(theta) and np.any(theta.imag != 0):
            raise ValueError("complex theta supplied for a real ensemble")
        return np.real(theta).astype(float)
    return theta.astype(complex)


def check_interior(theta):
    """Raise :class:`InteriorError` unless the last entry is real and strictly positive."""
    nrm = np.linalg.norm(theta)
    last = theta[-1]
    if not (last.real > INTERIOR_RTOL * nrm and abs(last.imag) <= INTERIOR_IMAG_RTOL * nrm):
        raise InteriorError(
            f"theta is not an interior point: last entry {last!r} must be real and strictly positive"
        )


def to_real_coordinates(theta):
    theta = np.asarray(theta)
    return np.concatenate([theta.real, theta.imag]) if np.iscomplexobj(theta) else theta


def from_real_coordinates(t, M):
    t = np.asarray(t, dtype=float)
    return t[:M] + 1j * t[M:] if t.size == 2 * M else t


def psi_matrix(theta, Phi):
    """Columns ``<theta, phi_n> phi_n``; complex columns are split into stacked real and imaginary parts.

    Returns an ``M x N`` array in the real case and ``2M x N`` in the complex case.
    """
    theta = _prepare_theta(theta, Phi)
    A = Phi.matrix
    if not Phi.is_complex:
        return A * (A.T @ theta)[None, :]
    cols = A * (A.conj().T @ theta)[None, :]
    return np.vstack([cols.real, cols.imag])


@dataclass(frozen=True)
class FisherReport:
    theta: np.ndarray
    J: np.ndarray
    J_reduced: np.ndarray
    crlb_trace: float
    positive_definite: bool
    min_eigenvalue: float
    max_eigenvalue: float
    condition_number: float
    reason: str = None
    noise_sigma: float = 1.0

    @property
    def applicable(self):
        return self.J if self.J_reduced is None else self.J_reduced

    def crlb_diagonal(self):
        if self.crlb_trace is None:
            return None
        return np.diag(np.linalg.inv(self.applicable))

    def to_dict(self):
        cond = self.condition_number
        return {
            "theta": to_real_coordinates(self.theta).tolist(),
            "field": "complex" if np.iscomplexobj(self.theta) else "real",
            "noise_sigma": self.noise_sigma,
            "J": self.J.tolist(),
            "J_reduced": None if self.J_reduced is None else self.J_reduced.tolist(),
            "crlb_trace": self.crlb_trace,
            "positive_definite": self.positive_definite,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "condition_number": cond if math.isfinite(cond) else None,
            "reason": self.reason,
        }


def fisher_matrix(theta, Phi, noise=NoiseModel()):
    """Closed-form Fisher information ``J = (4 / sigma^2) Psi Psi^T``.

    In the complex case ``theta`` is canonicalized, must lie in the interior
    of the canonical set, and the reduced matrix ``J_reduced`` (last row and
    column removed) is the one whose inverse bounds estimator covariance.
    The CRLB trace is reported only when that matrix is numerically positive
    definite with condition number at most ``1e12``.
    """
    noise = _as_noise(noise)
    theta = _prepare_theta(theta, Phi)
    if Phi.is_complex:
        theta = canonicalize(theta)
        check_interior(theta)
    Psi = psi_matrix(theta, Phi)
    J = (4 / noise.sigma**2) * (Psi @ Psi.T)
    J = (J + J.T) / 2
    Jr = J[:-1, :-1].copy() if Phi.is_complex else None
    K = J if Jr is None else Jr
    ev = np.linalg.eigvalsh(K)
    lo, hi = float(ev[0]), float(ev[-1])
    pd = hi > 0 and lo > 1e-12 * hi
    cond = hi / lo if pd else math.inf
    trace, reason = None, None
    if not pd:
        reason = "Fisher matrix is singular"
    elif cond > COND_LIMIT:
        reason = f"condition number {cond:.3g} exceeds {COND_LIMIT:.0e}; bound unreliable"
    else:
        trace = float(np.trace(np.linalg.inv(K)))
    return FisherReport(theta, J, Jr, trace, bool(pd), lo, hi, cond, reason, noise.sigma)


def crlb_trace(report):
    """Trace of the inverse of the applicable Fisher matrix.

    Raises
    ------
    numpy.linalg.LinAlgError
        When the matrix is singular.
    """
    K = report.applicable
    if not report.positive_definite:
        raise np.linalg.LinAlgError("Fisher matrix is singular; no Cramer-Rao bound")
    return float(np.trace(np.linalg.inv(K)))


def _check_y(y, Phi):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != Phi.N:
        raise ValueError(f"observation must have length N={Phi.N}, got {y.shape[-1]}")
    return y


def score_vector(y, theta, Phi, noise=NoiseModel()):
    """Gradient of ``log f(y; theta)`` in the real coordinates of ``theta``.

    ``y`` may be a single observation of length ``N`` or a stack of shape
    ``(T, N)``, in which case one score per row is returned.  The complex
    case returns all ``2M`` coordinates, including the frozen one.
    """
    noise = _as_noise(noise)
    theta = _prepare_theta(theta, Phi)
    y = _check_y(y, Phi)
    resid = y - intensity_map(theta, Phi)
    # d A_n / d theta_i = 2 Psi[i, n] in both fields
    return (2 / noise.sigma**2) * resid @ psi_matrix(theta, Phi).T


def log_likelihood(y, theta, Phi, noise=NoiseModel()):
    noise = _as_noise(noise)
    y = _check_y(y, Phi)
    r = y - intensity_map(_prepare_theta(theta, Phi), Phi)
    N = Phi.N
    return float(-0.5 * (r @ r) / noise.sigma**2 - N * math.log(math.sqrt(2 * math.pi) * noise.sigma))


def monte_carlo_fisher(theta, Phi, noise=NoiseModel(), trials=100_000, seed=0, batch=10_000):
    """Mean outer product of simulated scores.

    Noise is drawn from ``numpy.random.default_rng(seed)`` in fixed-size
    batches, so the result is deterministic per seed.
    """
    noise = _as_noise(noise)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    theta = _prepare_theta(theta, Phi)
    if Phi.is_complex:
        theta = canonicalize(theta)
    mean = intensity_map(theta, Phi)
    dim = 2 * Phi.M if Phi.is_complex else Phi.M
    rng = np.random.default_rng(seed)
    acc = np.zeros((dim, dim))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        Y = mean + noise.sigma * rng.standard_normal((b, Phi.N))
        s = score_vector(Y, theta, Phi, noise)
        acc += s.T @ s
        done += b
    return acc / trials


def degenerate_theta(Phi, S):
    """A real ``theta`` orthogonal to every ``phi_n`` with ``n`` in ``S``.

    When ``{phi_n : n in S}`` does not span, such a nonzero ``theta`` exists
    and the Fisher matrix at ``theta`` is singular whenever the complement
    does not span either.
    """
    if Phi.is_complex:
        raise ValueError("degenerate_theta expects a real ensemble")
    B, _ = null_space(Phi.matrix[:, list(S)].T)
    if B.shape[1] == 0:
        raise ValueError("the selected vectors span R^M; no orthogonal theta exists")
    return B[:, 0]

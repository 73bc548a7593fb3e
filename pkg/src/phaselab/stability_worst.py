"""Worst-case stability of real phase retrieval.

The root-intensity map ``x -> |Phi^T x|`` is bilipschitz with respect to the
sign-invariant metric ``d(x, y) = min(||x - y||, ||x + y||)``.  Its upper
constant is the spectral norm of ``Phi`` and its lower constant ``alpha`` is
sandwiched as ``sigma <= alpha <= sqrt(2) sigma`` by the largest ``sigma`` for
which every complementary pair ``{S, S^c}`` has a side whose frame operator
has smallest eigenvalue at least ``sigma**2``.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.optimize

from ._linalg import DEFAULT_ATOL, numerical_rank
from ._parallel import check_budget, map_pair_chunks, pair_masks, resolve_workers
from .ensemble import COMPLEX, REAL, MeasurementEnsemble, projective_distance

SCP_BUDGET = 24
EIG_CLAMP = 1e-12
GRID_POINTS = 720

POINTS_HEADER = ("M", "R", "trial", "log10_value")
SUMMARY_HEADER = ("M", "R", "mean", "curve_a", "curve_b", "N", "excluded")


def operator_norm(Phi):
    """Largest singular value of the M x N synthesis matrix (``||Phi^*||_2``)."""
    return float(np.linalg.norm(_matrix(Phi), 2))


def _matrix(Phi):
    return Phi.matrix if isinstance(Phi, MeasurementEnsemble) else np.asarray(Phi)


@dataclass(frozen=True)
class SCPReport:
    """Outcome of the strong complement property search.

    Attributes
    ----------
    sigma : float
        Largest ``sigma`` such that the ensemble is ``sigma``-SCP.  When
        ``exact`` is false this is only an upper bound.
    witness_subset : tuple of int
        The subset ``S`` attaining the minimum (its complement is implied).
    lambda_S, lambda_Sc : float
        Smallest eigenvalues of the two frame operators at the witness.
    subsets_examined : int
        Number of complementary pairs evaluated.
    method : str
        ``"enumeration"``, ``"rank-deficient"`` or ``"subset-bound"``.
    """

    sigma: float
    witness_subset: tuple
    lambda_S: float
    lambda_Sc: float
    subsets_examined: int
    method: str = "enumeration"

    @property
    def exact(self):
        return self.method != "subset-bound"

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "sigma_squared": self.sigma**2,
            "witness_subset": list(self.witness_subset),
            "lambda_S": self.lambda_S,
            "lambda_Sc": self.lambda_Sc,
            "subsets_examined": self.subsets_examined,
            "method": self.method,
            "exact": self.exact,
        }


def _outer_products(A):
    # (N, M*M): row n is phi_n phi_n^H flattened
    return np.einsum("mn,ln->nml", A, A.conj()).reshape(A.shape[1], -1)


def _lambda_min(grams):
    ev = np.linalg.eigvalsh(grams)
    lam = ev[:, 0]
    # round-off around an exact zero (rank-deficient side) is reported as 0
    noise = grams.shape[-1] * np.finfo(float).eps * np.abs(ev[:, -1])
    zero = ((lam < 0) & (lam > -EIG_CLAMP)) | (np.abs(lam) <= noise)
    return np.where(zero, 0.0, lam)


def _side_minima(A, masks):
    """Smallest eigenvalues of ``Phi_S Phi_S^*`` and ``Phi_Sc Phi_Sc^*`` for each mask."""
    M = A.shape[0]
    P = _outer_products(A)
    dtype = P.dtype
    GS = (masks.astype(dtype) @ P).reshape(-1, M, M)
    GC = ((~masks).astype(dtype) @ P).reshape(-1, M, M)
    return _lambda_min(GS), _lambda_min(GC)


def scp_bound_at_subset(Phi, S):
    """Evaluate ``max(lambda_min(S), lambda_min(S^c))`` for one subset.

    This is an upper bound on ``sigma**2``; the returned report carries
    ``method="subset-bound"``.
    """
    A = _matrix(Phi)
    N = A.shape[1]
    mask = np.zeros((1, N), dtype=bool)
    idx = sorted({int(i) for i in S})
    if any(i < 0 or i >= N for i in idx):
        raise ValueError(f"subset indices must lie in [0, {N})")
    mask[0, idx] = True
    lS, lC = _side_minima(A, mask)
    val = max(lS[0], lC[0])
    return SCPReport(math.sqrt(max(val, 0.0)), tuple(idx), float(lS[0]), float(lC[0]), 1, "subset-bound")


def scp_sigma(Phi, budget=SCP_BUDGET, workers=None, atol=DEFAULT_ATOL):
    """Exhaustive search for the largest ``sigma`` with the ``sigma``-SCP.

    Every complementary pair is visited once.  The witness is the first
    minimizer in enumeration order, so it does not depend on ``workers``.

    If ``Phi`` does not span, ``S = {0, ..., N-1}`` already gives
    ``sigma = 0`` and no enumeration is needed.

    Raises
    ------
    BudgetExceeded
        When ``N > budget`` and the shortcut above does not apply.
    """
    A = _matrix(Phi)
    M, N = A.shape
    if numerical_rank(A, atol) < M:
        lam = _lambda_min((A @ A.conj().T)[None])[0]
        return SCPReport(0.0, tuple(range(N)), float(lam), 0.0, 1, "rank-deficient")
    check_budget(N, budget, "scp_sigma")

    def chunk(masks, offset):
        lS, lC = _side_minima(A, masks)
        val = np.maximum(lS, lC)
        k = int(np.argmin(val))
        return val[k], offset + k, lS[k], lC[k], len(masks)

    results = map_pair_chunks(chunk, N, workers)
    best = min(results, key=lambda r: (r[0], r[1]))
    val, k, lS, lC = best[:4]
    S = tuple(int(i) for i in np.flatnonzero(pair_masks(N, k, k + 1)[0]))
    return SCPReport(
        math.sqrt(max(float(val), 0.0)), S, float(lS), float(lC), sum(r[4] for r in results)
    )


def alpha_bounds(report):
    """Certified interval ``(sigma, sqrt(2) sigma)`` for the lower Lipschitz constant."""
    s = report.sigma if isinstance(report, SCPReport) else float(report)
    return s, math.sqrt(2) * s


@dataclass(frozen=True)
class LipschitzReport:
    beta: float
    sigma: float
    alpha_lower: float
    alpha_upper: float
    stability_constant_upper: float
    sampled_min_ratio: float
    sampled_max_ratio: float
    samples: int
    seed: int
    scp: SCPReport = dc_field(repr=False, default=None)

    def to_dict(self):
        c = self.stability_constant_upper
        return {
            "beta": self.beta,
            "sigma": self.sigma,
            "alpha_lower": self.alpha_lower,
            "alpha_upper": self.alpha_upper,
            "stability_constant_upper": c if math.isfinite(c) else None,
            "stability_constant_infinite": not math.isfinite(c),
            "sampled_min_ratio": self.sampled_min_ratio,
            "sampled_max_ratio": self.sampled_max_ratio,
            "samples": self.samples,
            "seed": self.seed,
            "scp": self.scp.to_dict() if self.scp is not None else None,
        }


def _require_real(Phi):
    if not isinstance(Phi, MeasurementEnsemble):
        Phi = MeasurementEnsemble(np.asarray(Phi))
    if Phi.field != REAL:
        raise ValueError("Lipschitz analysis is only defined for real ensembles")
    return Phi


def _pair_ratios(A, X, Y):
    """Ratios ``||sqrt A(x) - sqrt A(y)|| / d(x, y)`` for rows of ``X`` and ``Y``."""
    num = np.linalg.norm(np.abs(X @ A) - np.abs(Y @ A), axis=1)
    d = np.minimum(np.linalg.norm(X - Y, axis=1), np.linalg.norm(X + Y, axis=1))
    return num, d


def sample_lipschitz_ratios(Phi, pairs=10_000, seed=0):
    """Extremes of the root-intensity difference quotient over random pairs.

    ``x`` and ``y`` are independent, uniform on the unit sphere and scaled by
    ``|g|`` with ``g`` standard normal.  Pairs closer than ``1e-9`` are
    skipped.  The pair ``(v, 0)`` with ``v`` the top right-singular vector of
    ``Phi^T`` is always included, so the maximum equals ``beta``.

    Returns
    -------
    min_ratio, max_ratio : float
    argmin : tuple of ndarray
        The pair ``(x, y)`` attaining ``min_ratio``.
    """
    Phi = _require_real(Phi)
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    A = Phi.matrix
    rng = np.random.default_rng(seed)

    def draw():
        g = rng.standard_normal((pairs, Phi.M))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * np.abs(rng.standard_normal((pairs, 1)))

    X, Y = draw(), draw()
    v = np.linalg.svd(A.T)[2][0]
    X = np.vstack([X, v])
    Y = np.vstack([Y, np.zeros(Phi.M)])
    num, d = _pair_ratios(A, X, Y)
    keep = d >= 1e-9
    r = np.full(len(d), np.nan)
    r[keep] = num[keep] / d[keep]
    k = int(np.nanargmin(r))
    return float(np.nanmin(r)), float(np.nanmax(r)), (X[k], Y[k])


def lipschitz_report(Phi, pairs=10_000, seed=0, budget=SCP_BUDGET, workers=None):
    Phi = _require_real(Phi)
    scp = scp_sigma(Phi, budget=budget, workers=workers)
    beta = operator_norm(Phi)
    lo, hi = alpha_bounds(scp)
    rmin, rmax, _ = sample_lipschitz_ratios(Phi, pairs, seed)
    c = 2 * beta / scp.sigma if scp.sigma > 0 else math.inf
    return LipschitzReport(beta, scp.sigma, lo, hi, c, rmin, rmax, pairs, seed, scp)


def _min_ratio_sq(A, U, V):
    # with x = u + v, y = u - v and ||u|| = ||v||: ratio^2 = sum_n min(<u,phi>^2, <v,phi>^2)
    return np.minimum((U @ A) ** 2, (V @ A) ** 2).sum(axis=1)


def grid_infimum_ratio(Phi, points=GRID_POINTS, refine=True, scp=None):
    """Search for the lower Lipschitz constant of a real 2-D ensemble.

    Every pair is written as ``x = u + v``, ``y = u - v``; for fixed
    directions the quotient is minimized at ``||u|| = ||v||``, leaving a
    search over two angles.  Candidates are the ``points x points`` angular
    grid, the pair built from the smallest eigenvectors at the SCP witness,
    and (optionally) a Nelder-Mead refinement of the best candidate.

    Returns
    -------
    ratio : float
        Smallest quotient found (an upper estimate of ``alpha``).
    pair : tuple of ndarray
        ``(x, y)`` attaining it.
    """
    Phi = _require_real(Phi)
    if Phi.M != 2:
        raise ValueError("grid_infimum_ratio is defined for ensembles in R^2")
    A = Phi.matrix
    t = np.pi * np.arange(points) / points
    D = np.column_stack([np.cos(t), np.sin(t)])
    vals = np.minimum((D @ A)[:, None, :] ** 2, (D @ A)[None, :, :] ** 2).sum(axis=2)
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    best_val, u, v = float(vals[i, j]), D[i], D[j]

    scp = scp if scp is not None else scp_sigma(Phi)
    S = np.zeros(Phi.N, dtype=bool)
    S[list(scp.witness_subset)] = True
    us = np.linalg.eigh(A[:, S] @ A[:, S].T)[1][:, 0]
    vs = np.linalg.eigh(A[:, ~S] @ A[:, ~S].T)[1][:, 0]
    w = float(_min_ratio_sq(A, us[None], vs[None])[0])
    if w < best_val:
        best_val, u, v = w, us, vs

    if refine:
        def f(ab):
            a, b = ab
            return float(_min_ratio_sq(A, np.array([[np.cos(a), np.sin(a)]]), np.array([[np.cos(b), np.sin(b)]]))[0])

        start = [math.atan2(u[1], u[0]), math.atan2(v[1], v[0])]
        res = scipy.optimize.minimize(f, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16})
        if res.fun < best_val:
            best_val = float(res.fun)
            u = np.array([np.cos(res.x[0]), np.sin(res.x[0])])
            v = np.array([np.cos(res.x[1]), np.sin(res.x[1])])
    x, y = u + v, u - v
    num, d = _pair_ratios(A, x[None], y[None])
    return float(num[0] / d[0]), (x, y)


def holder_divergence_probe(Phi, n, C_values):
    """Difference quotients of the intensity map along the ray through ``phi_n``.

    For ``x = (C + 1) phi_n`` and ``y = phi_n`` the quotient equals
    ``((C + 1)**2 - 1) / C * ||A(phi_n)|| / ||phi_n||``, which is unbounded
    in ``C``: the intensity map is not Lipschitz (nor Holder) in ``d``.
    """
    A = _matrix(Phi)
    phi = A[:, n]
    nrm = np.linalg.norm(phi)
    if nrm == 0:
        raise ValueError(f"measurement vector {n} is zero")
    Aphi = np.abs(A.conj().T @ phi) ** 2
    out = []
    for C in C_values:
        if C <= 0:
            raise ValueError("C values must be positive")
        x = (C + 1) * phi
        Ax = np.abs(A.conj().T @ x) ** 2
        if np.iscomplexobj(A):
            d = math.sqrt(max(np.linalg.norm(x) ** 2 + nrm**2 - 2 * abs(np.vdot(phi, x)), 0.0))
        else:
            d = projective_distance(x, phi)
        out.append(float(np.linalg.norm(Ax - Aphi) / d))
    return out


def localized_fourier_frame(M, N):
    """Self-localized real frame built from the first ``M/2`` rows of the ``N x N`` DFT.

    Real parts are stacked above imaginary parts and every column is scaled
    by ``sqrt(2 / M)`` so that it has unit norm.
    """
    if M < 2 or N < 2 or M % 2 or N % 2:
        raise ValueError(f"M and N must be even and positive, got M={M}, N={N}")
    if N < M:
        raise ValueError(f"need N >= M, got M={M}, N={N}")
    m = np.arange(M // 2)[:, None]
    n = np.arange(N)[None, :]
    F = np.exp(2j * np.pi * m * n / N)
    return MeasurementEnsemble(np.vstack([F.real, F.imag]) * math.sqrt(2 / M), REAL)


def localized_witness_subset(N):
    """``S = {n : N/4 <= n < 3N/4}``, separating ``phi_0`` from ``phi_{N/2}``."""
    return tuple(n for n in range(N) if N <= 4 * n < 3 * N)


def gaussian_ensemble(M, N, seed=0, field=REAL):
    """``M x N`` matrix with i.i.d. standard normal entries (complex: independent real and imaginary parts)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if field == COMPLEX:
        a = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
        return MeasurementEnsemble(a, COMPLEX)
    return MeasurementEnsemble(rng.standard_normal((M, N)), REAL)


def _check_R(R):
    if not R > 2:
        raise ValueError(f"redundancy R = N/M must exceed 2, got {R}")


def theorem_sigma(M, N, eps):
    """``sigma`` guaranteed with probability ``>= 1 - exp(-eps M)`` for a Gaussian ``M x N`` ensemble."""
    R = N / M
    _check_R(R)
    if N % 2:
        warnings.warn("the guarantee is proved for even N", stacklevel=2)
    return (
        (N - 2 * M + 2)
        / (math.sqrt(2) * math.exp(1 + eps / (R - 2)) * 2 ** (R / (R - 2)) * math.sqrt(N))
    )


def curve_a(R, M):
    """High-probability bound ``a(R, M)`` on ``2 beta / sigma`` with ``N = R M``."""
    _check_R(R)
    N = R * M
    return (
        2 * (math.sqrt(N) + math.sqrt(M)) * math.sqrt(2) * math.e * 2 ** (R / (R - 2)) * math.sqrt(N)
        / (N - 2 * M + 2)
    )


def curve_b(R):
    """Large-``M`` limit of :func:`curve_a`."""
    _check_R(R)
    return 2 * math.sqrt(2) * math.e * (R + math.sqrt(R)) / (R - 2) * 2 ** (R / (R - 2))


def measurements_for(R, M):
    """``N = ceil(R M)``, rounded up to the next even integer."""
    N = math.ceil(round(R * M, 9))
    return N + (N % 2)


@dataclass(frozen=True)
class GaussianExperimentConfig:
    M: int
    R_values: tuple
    trials: int = 30
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "R_values", tuple(float(r) for r in self.R_values))
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.R_values or any(r <= 0 for r in self.R_values):
            raise ValueError("R values must be positive")


@dataclass(frozen=True)
class GaussianExperimentResult:
    config: GaussianExperimentConfig
    points: list
    N_values: list
    means: list
    excluded: list
    curve_a: list
    curve_b: list

    def points_csv(self):
        return _csv(POINTS_HEADER, self.points)

    def summary_csv(self):
        rows = [
            (self.config.M, R, m, a, b, N, e)
            for R, m, a, b, N, e in zip(
                self.config.R_values, self.means, self.curve_a, self.curve_b, self.N_values, self.excluded
            )
        ]
        return _csv(SUMMARY_HEADER, rows)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trial_seed(base_seed, r_index, trial):
    """Per-trial generator; a pure function of its three arguments."""
    return np.random.default_rng([base_seed, r_index, trial])


def run_gaussian_experiment(cfg, budget=SCP_BUDGET, workers=None):
    """Draw Gaussian ensembles and record ``log10(2 beta / sigma)`` per trial.

    Trials run in parallel; each trial's ensemble depends only on
    ``(base_seed, R index, trial index)``.  Trials with ``sigma = 0`` are
    recorded as ``+inf`` and left out of the means.  The ``curve_a`` and
    ``curve_b`` entries are base-10 logarithms, like the trial values.
    """
    M = cfg.M
    Ns = [measurements_for(R, M) for R in cfg.R_values]
    for N in Ns:
        check_budget(N, budget, "run_gaussian_experiment")
    jobs = [(ri, t) for ri in range(len(cfg.R_values)) for t in range(cfg.trials)]

    def run(job):
        ri, t = job
        Phi = gaussian_ensemble(M, Ns[ri], trial_seed(cfg.base_seed, ri, t))
        s = scp_sigma(Phi, budget=budget, workers=1).sigma
        return math.log10(2 * operator_norm(Phi) / s) if s > 0 else math.inf

    workers = resolve_workers(workers)
    if workers == 1:
        values = [run(j) for j in jobs]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, jobs))

    points, means, excluded, ca, cb = [], [], [], [], []
    for ri, R in enumerate(cfg.R_values):
        vals = values[ri * cfg.trials : (ri + 1) * cfg.trials]
        points.extend((M, R, t, v) for t, v in enumerate(vals))
        finite = [v for v in vals if math.isfinite(v)]
        # math.fsum is exact, so the mean does not depend on summation order
        means.append(math.fsum(finite) / len(finite) if finite else math.nan)
        excluded.append(len(vals) - len(finite))
        ca.append(math.log10(curve_a(R, M)) if R > 2 else math.nan)
        cb.append(math.log10(curve_b(R)) if R > 2 else math.nan)
    return GaussianExperimentResult(cfg, points, Ns, means, excluded, ca, cb)

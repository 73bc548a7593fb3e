"""Deciding (or bounding) injectivity of intensity measurements.

Real ensembles are decided exactly by the complement property.  Complex
ensembles are decided through the null space of the super analysis operator:
the intensity map fails to be injective exactly when that null space contains
a nonzero self-adjoint matrix of rank at most two.  For M = 3 this reduces to
the HMW test; for larger M with a null space of dimension two or more no
decision procedure is known and the verdict is ``indeterminate``.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from ._linalg import DEFAULT_ATOL, batched_ranks, null_space, numerical_rank
from ._parallel import BudgetExceeded, check_budget, lexicographic_min, map_pair_chunks
from .ensemble import canonicalize, intensity_map, super_analysis_operator

INJECTIVE = "injective"
NOT_INJECTIVE = "not_injective"
INDETERMINATE = "indeterminate"

CP_BUDGET = 26
SPARK_BUDGET = 2_000_000
DET_TOL = 1e-10


@dataclass(frozen=True)
class SubsetWitness:
    """A subset ``S`` together with whether ``S`` and its complement span."""

    S: tuple
    spanned_S: bool
    spanned_complement: bool


@dataclass
class InjectivityVerdict:
    status: str
    method: str
    witness: tuple = None
    nullity: int = None
    subset: SubsetWitness = None
    reason: str = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def injective(self):
        return self.status == INJECTIVE

    def to_dict(self):
        d = {"status": self.status, "method": self.method, "nullity": self.nullity}
        if self.witness is not None:
            d["witness"] = {"x": _vec_to_json(self.witness[0]), "y": _vec_to_json(self.witness[1])}
        if self.subset is not None:
            d["subset"] = {
                "S": [int(i) for i in self.subset.S],
                "spanned_S": self.subset.spanned_S,
                "spanned_complement": self.subset.spanned_complement,
            }
        if self.reason is not None:
            d["reason"] = self.reason
        d["diagnostics"] = {k: _jsonable(v) for k, v in self.diagnostics.items()}
        return d


def _vec_to_json(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return [[float(z.real), float(z.imag)] for z in v]
    return [float(t) for t in v]


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(t) for t in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(t) for t in v]
    return v


# -- witnesses ----------------------------------------------------------------


def _normalize_pair(x, y):
    """Canonical representatives, jointly scaled so that the last nonzero entry of ``x`` is 1."""
    x = np.asarray(x)
    y = np.asarray(y)
    if not np.any(x):
        x, y = y, x
    x = canonicalize(x)
    if np.any(y):
        y = canonicalize(y)
    c = x[np.flatnonzero(x)[-1]].real
    return x / c, y / c


def witness_is_sound(Phi, x, y, rtol=1e-8, sep=1e-6):
    """Check that ``A(x) = A(y)`` while ``x`` and ``y`` are not identified."""
    ax, ay = intensity_map(x, Phi), intensity_map(y, Phi)
    if np.linalg.norm(ax - ay) > rtol * (1 + np.linalg.norm(ax)):
        return False
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if abs(nx - ny) > sep * max(nx, ny):
        return True
    if not (np.iscomplexobj(x) or np.iscomplexobj(y)) and not Phi.is_complex:
        return min(np.linalg.norm(x - y), np.linalg.norm(x + y)) > sep * max(nx, ny)
    return abs(np.vdot(x, y)) < (1 - sep) * nx * ny


def witness_from_null_matrix(H, atol=DEFAULT_ATOL):
    """Colliding pair from a rank <= 2 self-adjoint matrix in the operator's null space.

    With ``H = l1 u1 u1^H + l2 u2 u2^H``: opposite signs give ``A(x) = A(y)`` for
    ``x = sqrt|l1| u1``, ``y = sqrt|l2| u2``; equal signs force both to zero
    intensities; rank one gives ``A(x) = A(0)``.
    """
    lam, U = np.linalg.eigh(H)
    scale = np.abs(lam).max()
    if scale == 0:
        raise ValueError("null matrix is zero")
    big = np.abs(lam) > max(H.shape[0] * np.finfo(float).eps * scale, atol * scale)
    order = np.argsort(-np.abs(lam))
    i1 = order[0]
    if big.sum() < 2:
        return np.sqrt(abs(lam[i1])) * U[:, i1], np.zeros(H.shape[0], U.dtype)
    if lam.max() > 0 and lam.min() < 0 and big[np.argmax(lam)] and big[np.argmin(lam)]:
        ip, im = int(np.argmax(lam)), int(np.argmin(lam))
    else:
        ip, im = order[0], order[1]
    return np.sqrt(abs(lam[ip])) * U[:, ip], np.sqrt(abs(lam[im])) * U[:, im]


def _null_matrix_verdict(Phi, H, method, nullity, diagnostics, atol):
    x, y = _normalize_pair(*witness_from_null_matrix(H, atol))
    if not witness_is_sound(Phi, x, y):
        return InjectivityVerdict(
            INDETERMINATE, method, nullity=nullity, diagnostics=diagnostics,
            reason="rank <= 2 null matrix found but the extracted witness failed verification",
        )
    return InjectivityVerdict(NOT_INJECTIVE, method, witness=(x, y), nullity=nullity, diagnostics=diagnostics)


# -- complement property -----------------------------------------------------


def _spans(A, masks, atol):
    """For each mask row, whether the selected columns of ``A`` span the ambient space."""
    M = A.shape[0]
    sizes = masks.sum(axis=1)
    out = np.zeros(len(masks), dtype=bool)
    idx = np.flatnonzero(sizes >= M)
    if idx.size:
        sub = A[None, :, :] * masks[idx, None, :]
        out[idx] = batched_ranks(sub, atol, ncols=sizes[idx]) >= M
    return out


def complement_property(Phi, budget=CP_BUDGET, atol=DEFAULT_ATOL, workers=None):
    """Exhaustively test the complement property.

    Every unordered pair ``{S, S^c}`` is visited once.  On failure the
    lexicographically smallest violating ``S`` (as a sorted index tuple, always
    containing index 0) is returned.

    Returns
    -------
    holds : bool
    witness : SubsetWitness or None
    """
    N = Phi.N
    check_budget(N, budget, "complement_property")
    A = Phi.matrix

    def chunk(masks, _):
        bad = ~_spans(A, masks, atol) & ~_spans(A, ~masks, atol)
        if not bad.any():
            return None
        cand = masks[bad]
        return cand[lexicographic_min(cand)]

    found = [m for m in map_pair_chunks(chunk, N, workers) if m is not None]
    if not found:
        return True, None
    best = found[lexicographic_min(found)]
    return False, SubsetWitness(tuple(int(i) for i in np.flatnonzero(best)), False, False)


def full_spark(Phi, budget=SPARK_BUDGET, atol=DEFAULT_ATOL):
    """Whether every M-subset of the measurement vectors is a basis."""
    M, N = Phi.M, Phi.N
    if N < M:
        return False
    from math import comb

    if comb(N, M) > budget:
        raise BudgetExceeded(f"full_spark needs C({N},{M}) = {comb(N, M)} checks; budget is {budget}")
    A = Phi.matrix
    combos = itertools.combinations(range(N), M)
    while True:
        batch = list(itertools.islice(combos, 4096))
        if not batch:
            return True
        sub = A[:, np.array(batch)].transpose(1, 0, 2)
        if np.any(batched_ranks(sub, atol) < M):
            return False


def _orthogonal_complement(A, cols, M, dtype, atol):
    """Basis (columns) of vectors orthogonal to the selected columns of ``A``."""
    if len(cols) == 0:
        return np.eye(M, dtype=dtype)
    basis, _ = null_space(A[:, cols].conj().T, atol)
    return basis


def real_injectivity(Phi, budget=CP_BUDGET, atol=DEFAULT_ATOL, workers=None):
    """Decide injectivity of real intensity measurements via the complement property.

    A violating ``S`` yields nonzero ``u`` orthogonal to the vectors in ``S`` and
    ``v`` orthogonal to those in ``S^c``; then ``A(u + v) = A(u - v)``.
    """
    if Phi.is_complex:
        raise ValueError("real_injectivity requires a real ensemble")
    holds, w = complement_property(Phi, budget, atol, workers)
    if holds:
        return InjectivityVerdict(INJECTIVE, "complement_property", diagnostics={"atol": atol})
    S = list(w.S)
    Sc = [n for n in range(Phi.N) if n not in w.S]
    u = _orthogonal_complement(Phi.matrix, S, Phi.M, float, atol)[:, 0]
    v = _orthogonal_complement(Phi.matrix, Sc, Phi.M, float, atol)[:, 0] if Sc else u
    x, y = canonicalize(u + v), canonicalize(u - v) if np.any(u - v) else u - v
    return InjectivityVerdict(
        NOT_INJECTIVE, "complement_property", witness=(x, y), subset=w, diagnostics={"atol": atol}
    )


# -- complex case --------------------------------------------------------------


def _null_data(Phi, atol):
    op = super_analysis_operator(Phi)
    mats, s = op.nullspace(atol)
    return op, mats, s


def _det_ratio(H):
    return abs(np.linalg.det(H)) / np.linalg.norm(H) ** 3


def hmw_test(Phi, atol=DEFAULT_ATOL, det_tol=DET_TOL):
    """HMW test: exact injectivity decision for complex ensembles in dimension 3.

    * trivial null space: injective;
    * one-dimensional null space spanned by a nonsingular ``H``: injective;
    * otherwise not injective.  With a null space of dimension >= 2 a singular
      member ``A cos t + B sin t`` is located by root finding on
      ``t -> det(A cos t + B sin t)``, which changes sign on ``[0, pi]``.

    Nonsingularity is judged scale-free: ``|det H| > det_tol * ||H||_F^3``.
    """
    if not Phi.is_complex or Phi.M != 3:
        raise ValueError("hmw_test requires a complex ensemble with M = 3")
    _, mats, s = _null_data(Phi, atol)
    nullity = len(mats)
    diag = {"singular_values": s, "atol": atol, "det_tol": det_tol}
    if nullity == 0:
        return InjectivityVerdict(INJECTIVE, "hmw", nullity=0, diagnostics=diag)
    A = mats[0]
    ratio = _det_ratio(A)
    diag["det_ratio"] = ratio
    if nullity == 1:
        if ratio > det_tol:
            return InjectivityVerdict(INJECTIVE, "hmw", nullity=1, diagnostics=diag)
        return _null_matrix_verdict(Phi, A, "hmw", 1, diag, atol)
    if ratio <= det_tol:
        return _null_matrix_verdict(Phi, A, "hmw", nullity, diag, atol)
    B = mats[1]

    def f(t):
        return np.linalg.det(A * np.cos(t) + B * np.sin(t)).real

    t0 = scipy.optimize.brentq(f, 0.0, np.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    diag["t0"] = t0
    H = A * np.cos(t0) + B * np.sin(t0)
    return _null_matrix_verdict(Phi, H, "hmw", nullity, diag, atol)


def nullspace_classifier(Phi, atol=DEFAULT_ATOL, det_tol=DET_TOL):
    """Classify a complex ensemble by the null space of its super analysis operator."""
    if not Phi.is_complex:
        raise ValueError("nullspace_classifier requires a complex ensemble; use real_injectivity")
    _, mats, s = _null_data(Phi, atol)
    nullity = len(mats)
    diag = {"singular_values": s, "atol": atol}
    if nullity == 0:
        return InjectivityVerdict(INJECTIVE, "nullspace", nullity=0, diagnostics=diag)
    if nullity == 1:
        H = mats[0]
        r = numerical_rank(H / np.linalg.norm(H), atol)
        diag["spanner_rank"] = r
        if r >= 3:
            return InjectivityVerdict(INJECTIVE, "nullspace", nullity=1, diagnostics=diag)
        return _null_matrix_verdict(Phi, H, "nullspace", 1, diag, atol)
    if Phi.M <= 2:
        return _null_matrix_verdict(Phi, mats[0], "nullspace", nullity, diag, atol)
    if Phi.M == 3:
        v = hmw_test(Phi, atol, det_tol)
        v.method = "nullspace->hmw"
        return v
    for H in mats:
        if numerical_rank(H / np.linalg.norm(H), atol) <= 2:
            return _null_matrix_verdict(Phi, H, "nullspace", nullity, diag, atol)
    return InjectivityVerdict(
        INDETERMINATE, "nullspace", nullity=nullity, diagnostics=diag,
        reason=(
            f"null space has dimension {nullity} with M={Phi.M} > 3; the intermediate-value "
            "argument only forces a singular null matrix, which may have rank >= 3"
        ),
    )


def cp_necessity_filter(Phi, budget=CP_BUDGET, atol=DEFAULT_ATOL, workers=None):
    """Early rejection: complex injectivity requires the complement property.

    Returns a ``not_injective`` verdict when the complement property fails and
    ``None`` when it holds (the property is necessary, not sufficient).
    """
    if not Phi.is_complex:
        raise ValueError("cp_necessity_filter requires a complex ensemble")
    holds, w = complement_property(Phi, budget, atol, workers)
    if holds:
        return None
    S = list(w.S)
    Sc = [n for n in range(Phi.N) if n not in w.S]
    U = _orthogonal_complement(Phi.matrix, S, Phi.M, complex, atol)
    V = _orthogonal_complement(Phi.matrix, Sc, Phi.M, complex, atol)
    pair = None
    for u, v in itertools.product(U.T, V.T):
        # u + v and u - v are identified modulo the torus only when v is a multiple of u
        if abs(np.vdot(u, v)) < (1 - 1e-6) * np.linalg.norm(u) * np.linalg.norm(v):
            pair = (u + v, u - v)
            break
    if pair is None:
        # u is orthogonal to every measurement vector, so A(u) = A(0)
        pair = (U[:, 0], np.zeros(Phi.M, complex))
    x, y = _normalize_pair(*pair)
    if not witness_is_sound(Phi, x, y):
        return InjectivityVerdict(
            INDETERMINATE, "cp_necessity", subset=w,
            reason="complement property fails but the constructed pair did not verify",
        )
    return InjectivityVerdict(NOT_INJECTIVE, "cp_necessity", witness=(x, y), subset=w)


def _span_matrix(Phi, u):
    F = Phi.matrix.astype(complex)
    V = F * (F.conj().T @ u)  # column n is phi_n phi_n^H u
    return np.vstack([V.real, V.imag])


def span_condition(Phi, u, atol=DEFAULT_ATOL):
    """Real dimension of ``span{phi_n phi_n^H u}`` inside R^{2M}.

    Never exceeds ``2M - 1``; a value below ``2M - 1`` certifies non-injectivity.
    """
    u = np.asarray(u, dtype=complex)
    if not np.any(u):
        raise ValueError("span_condition needs a nonzero u")
    if u.shape != (Phi.M,):
        raise ValueError(f"u must have length M={Phi.M}")
    R = _span_matrix(Phi, u)
    return numerical_rank(R / max(np.abs(R).max(), 1e-300), atol)


def span_witness(Phi, u, atol=DEFAULT_ATOL):
    """Colliding pair ``(u + v, u - v)`` when ``span_condition(Phi, u) < 2M - 1``, else ``None``."""
    u = np.asarray(u, dtype=complex)
    R = _span_matrix(Phi, u)
    perp, _ = null_space(R.T / max(np.abs(R).max(), 1e-300), atol)
    iu = np.concatenate([(1j * u).real, (1j * u).imag])
    iu /= np.linalg.norm(iu)
    perp = perp - np.outer(iu, iu @ perp)
    norms = np.linalg.norm(perp, axis=0)
    if norms.size == 0 or norms.max() < 1e-6:
        return None
    w = perp[:, np.argmax(norms)]
    v = (w[: Phi.M] + 1j * w[Phi.M:]) * np.linalg.norm(u) / np.linalg.norm(w)
    return _normalize_pair(u + v, u - v)


def hmw_lower_bound(M):
    """Lower bound on the minimal number of injective complex intensity measurements."""
    M = int(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    a = bin(M - 1).count("1")
    if M % 2 == 1 and a % 4 == 2:
        return 4 * M - 2 * a - 2
    if M % 2 == 1 and a % 4 == 3:
        return 4 * M - 2 * a - 1
    return 4 * M - 2 * a - 3


def bounds_summary(M):
    """HMW lower bound, the conjectured 4M - 4 threshold and its status for dimension ``M``."""
    M = int(M)
    if M < 2:
        status = "not_applicable"
    elif M in (2, 3):
        status = "proven"
    else:
        status = "conjectured"
    return {"M": M, "hmw": hmw_lower_bound(M), "conjecture_4m4": 4 * M - 4, "status": status}


def check_injectivity(Phi, method="auto", budget=CP_BUDGET, probes=64, seed=0, atol=DEFAULT_ATOL, workers=None):
    """Route an ensemble to the strongest applicable procedure.

    ``auto``: real -> complement property; complex M = 3 -> HMW test; complex
    M <= 2 or nullity <= 1 -> null-space classifier; otherwise the complement
    property filter, then ``probes`` random span-condition probes, then the
    null-space classifier (which may still return ``indeterminate``).
    """
    if method not in ("auto", "cp", "hmw", "nullspace"):
        raise ValueError(f"unknown method {method!r}")
    if not Phi.is_complex:
        if method in ("hmw", "nullspace"):
            raise ValueError(f"method {method!r} applies to complex ensembles only")
        return real_injectivity(Phi, budget, atol, workers)
    if method == "hmw":
        return hmw_test(Phi, atol)
    if method == "nullspace":
        return nullspace_classifier(Phi, atol)
    if method == "cp":
        v = cp_necessity_filter(Phi, budget, atol, workers)
        return v or InjectivityVerdict(
            INDETERMINATE, "cp_necessity",
            reason="complement property holds; it is necessary but not sufficient in the complex case",
        )
    if Phi.M == 3:
        return hmw_test(Phi, atol)
    if Phi.M <= 2:
        return nullspace_classifier(Phi, atol)
    _, mats, _ = _null_data(Phi, atol)
    if len(mats) <= 1:
        return nullspace_classifier(Phi, atol)
    if Phi.N <= budget:
        v = cp_necessity_filter(Phi, budget, atol, workers)
        if v is not None and v.status == NOT_INJECTIVE:
            return v
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        u = rng.standard_normal(Phi.M) + 1j * rng.standard_normal(Phi.M)
        if span_condition(Phi, u, atol) < 2 * Phi.M - 1:
            pair = span_witness(Phi, u, atol)
            if pair is not None and witness_is_sound(Phi, *pair):
                return InjectivityVerdict(NOT_INJECTIVE, "span_condition", witness=pair, nullity=len(mats))
    return nullspace_classifier(Phi, atol)

"""Measurement ensembles, intensity maps and the lifted (super analysis) picture.

Conventions used throughout the package:

* inner products are linear in the first argument,
  ``<x, y> = sum_m x[m] * conj(y[m])``, so the analysis coefficients of ``x``
  are ``Phi^H x``;
* the lift of ``x`` is ``x x^H``;
* the Hilbert-Schmidt pairing is ``<H, K>_HS = Tr(K^H H)``.
"""

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg

from ._linalg import DEFAULT_ATOL, null_space

REAL = "real"
COMPLEX = "complex"
SIGN = "sign"
TORUS = "torus"


class EnsembleFormatError(ValueError):
    """Malformed ensemble file or payload."""


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """N measurement vectors in R^M or C^M, stored as the columns of an M x N matrix.

    Parameters
    ----------
    matrix : array_like, shape (M, N)
    field : {"real", "complex"}, optional
        Inferred from the dtype of ``matrix`` when omitted.
    """

    matrix: np.ndarray
    field: str = None

    def __post_init__(self):
        a = np.asarray(self.matrix)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"ensemble matrix must be a nonempty M x N array, got shape {a.shape}")
        fld = self.field
        if fld is None:
            fld = COMPLEX if np.iscomplexobj(a) else REAL
        if fld not in (REAL, COMPLEX):
            raise ValueError(f"field must be 'real' or 'complex', got {fld!r}")
        if not np.all(np.isfinite(a)):
            raise ValueError("ensemble entries must be finite")
        if fld == REAL:
            if np.iscomplexobj(a):
                if np.any(a.imag != 0):
                    raise ValueError("real ensemble has entries with nonzero imaginary part")
                a = a.real
            a = a.astype(float)
        else:
            a = a.astype(complex)
        object.__setattr__(self, "matrix", _readonly(a))
        object.__setattr__(self, "field", fld)

    @classmethod
    def from_columns(cls, columns, field=None):
        return cls(np.array(columns).T, field)

    @property
    def M(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    @property
    def is_complex(self):
        return self.field == COMPLEX

    @property
    def columns(self):
        return [self.matrix[:, n] for n in range(self.N)]

    def as_complex(self):
        return MeasurementEnsemble(self.matrix, COMPLEX)

    def scaled(self, c):
        return MeasurementEnsemble(c * self.matrix, self.field)

    def subset(self, S):
        return self.matrix[:, np.asarray(S, dtype=int)]

    def __repr__(self):
        return f"MeasurementEnsemble(field={self.field!r}, M={self.M}, N={self.N})"


def _check_vector(x, Phi, allow_batch=False):
    x = np.asarray(x)
    if x.shape[0] != Phi.M or x.ndim > (2 if allow_batch else 1):
        raise ValueError(f"vector of shape {x.shape} does not match ensemble dimension M={Phi.M}")
    if not Phi.is_complex and np.iscomplexobj(x) and np.any(x.imag != 0):
        raise ValueError("complex vector supplied for a real ensemble")
    return x


def analysis(x, Phi):
    """Coefficients ``<x, phi_n>`` for n = 1..N (batched over trailing axis of ``x``)."""
    x = _check_vector(x, Phi, allow_batch=True)
    if not Phi.is_complex:
        x = x.real if np.iscomplexobj(x) else x
        return Phi.matrix.T @ x
    return Phi.matrix.conj().T @ x


def intensity_map(x, Phi):
    """``|<x, phi_n>|^2`` for every measurement vector."""
    c = analysis(x, Phi)
    return c.real**2 + c.imag**2 if np.iscomplexobj(c) else c**2


def root_intensity_map(x, Phi):
    return np.abs(analysis(x, Phi))


def b_map(x, Phi):
    """Squared (not modulus-squared) analysis coefficients ``<x, phi_n>^2``."""
    c = analysis(np.asarray(x, dtype=complex), Phi.as_complex())
    return c**2


def lift(x):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("lift expects a single vector")
    L = np.outer(x, x.conj())
    if np.iscomplexobj(L):
        # mirror the upper triangle so the result is exactly self-adjoint
        iu = np.triu_indices(len(x), 1)
        L[iu[::-1]] = L[iu].conj()
        L[np.diag_indices(len(x))] = x.real**2 + x.imag**2
    return L


def canonicalize(x):
    """Divide ``x`` by the phase (or sign) of its last nonzero entry.

    The returned vector has its last nonzero entry real and strictly positive.
    """
    x = np.asarray(x)
    nz = np.flatnonzero(x)
    if nz.size == 0:
        raise ValueError("cannot canonicalize the zero vector")
    k = nz[-1]
    if np.iscomplexobj(x):
        mag = abs(x[k])
        out = x * (mag / x[k])
        out[k] = mag
        return out
    return x * np.sign(x[k])


@dataclass(frozen=True, eq=False)
class ProjectiveVector:
    """A vector modulo a multiplicative group of scalars (``"sign"`` or ``"torus"``)."""

    representative: np.ndarray
    group: str = SIGN

    def __post_init__(self):
        r = np.asarray(self.representative)
        if self.group not in (SIGN, TORUS):
            raise ValueError(f"group must be 'sign' or 'torus', got {self.group!r}")
        if self.group == SIGN:
            if np.iscomplexobj(r) and np.any(r.imag != 0):
                raise ValueError("sign group requires a real representative")
            r = np.real(r).astype(float)
        object.__setattr__(self, "representative", _readonly(r))

    def __eq__(self, other):
        if not isinstance(other, ProjectiveVector) or other.group != self.group:
            return NotImplemented
        return equivalent(self.representative, other.representative, self.group)

    __hash__ = None


def equivalent(x, y, group, rtol=1e-12):
    """Whether ``y = c x`` for some scalar ``c`` in the group, up to ``rtol``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        return False
    scale = max(np.linalg.norm(x), np.linalg.norm(y), 1e-300)
    if group == SIGN:
        return min(np.linalg.norm(x - y), np.linalg.norm(x + y)) <= rtol * scale
    # best unit-modulus alignment: c = phase of <y, x>
    ip = np.vdot(x, y)
    c = ip / abs(ip) if ip != 0 else 1.0
    return np.linalg.norm(y - c * x) <= rtol * scale


def projective_distance(x, y):
    """``min(||x - y||, ||x + y||)``, the metric on R^M modulo sign."""
    vecs = []
    for v in (x, y):
        if isinstance(v, ProjectiveVector):
            if v.group != SIGN:
                raise ValueError("projective_distance is only defined modulo sign on real vectors")
            v = v.representative
        v = np.asarray(v)
        if np.iscomplexobj(v) and np.any(v.imag != 0):
            raise ValueError("projective_distance is only defined modulo sign on real vectors")
        vecs.append(np.real(v))
    x, y = vecs
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return min(np.linalg.norm(x - y), np.linalg.norm(x + y))


def _hvec(H):
    """Real coordinates of a self-adjoint matrix: diagonal, Re upper, Im upper."""
    iu = np.triu_indices(H.shape[-1], 1)
    return np.concatenate(
        [np.real(np.diagonal(H, axis1=-2, axis2=-1)), np.real(H[..., iu[0], iu[1]]), np.imag(H[..., iu[0], iu[1]])],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    """A real basis of the M^2-dimensional space of self-adjoint M x M matrices."""

    M: int
    elements: np.ndarray
    change_of_coordinates: np.ndarray
    _lu: tuple = dc_field(repr=False, default=None)

    def coordinates(self, H):
        """Solve ``sum_k c_k B_k = H`` for the real coefficients ``c``."""
        H = np.asarray(H)
        if H.shape[-2:] != (self.M, self.M):
            raise ValueError(f"expected {self.M} x {self.M} matrices, got {H.shape}")
        rhs = _hvec(H)
        return scipy.linalg.lu_solve(self._lu, rhs.T).T

    def to_matrix(self, coords):
        return np.tensordot(np.asarray(coords), self.elements, axes=([-1], [0]))


def hermitian_basis(M):
    """Self-adjoint basis extending the 2 x 2 pattern ``I, diag(0,1), sym, skew``.

    Diagonal elements are the trailing blocks ``sum_{k >= j} E_kk``; each pair
    ``i < j`` contributes ``(E_ij + E_ji)/sqrt(2)`` and ``(i E_ij - i E_ji)/sqrt(2)``.
    """
    M = int(M)
    if M < 1:
        raise ValueError("M must be >= 1")
    elems = []
    for j in range(M):
        D = np.zeros((M, M), complex)
        D[np.arange(j, M), np.arange(j, M)] = 1
        elems.append(D)
    r = 1 / math.sqrt(2)
    for i in range(M):
        for j in range(i + 1, M):
            Sym = np.zeros((M, M), complex)
            Sym[i, j] = Sym[j, i] = r
            Skew = np.zeros((M, M), complex)
            Skew[i, j] = 1j * r
            Skew[j, i] = -1j * r
            elems += [Sym, Skew]
    elems = np.array(elems)
    C = _hvec(elems).T
    return HermitianBasis(M, _readonly(elems), _readonly(C), scipy.linalg.lu_factor(C))


@dataclass(frozen=True, eq=False)
class SuperAnalysisOperator:
    """Matrix of ``H -> (<H, phi_n phi_n^H>_HS)_n`` acting on basis coordinates of ``H``.

    Row ``n`` holds ``<B_k, phi_n phi_n^H>_HS`` for each basis element ``B_k``.
    """

    matrix: np.ndarray
    basis: HermitianBasis
    source: MeasurementEnsemble

    def apply(self, H):
        return self.matrix @ self.basis.coordinates(H)

    def nullspace(self, atol=DEFAULT_ATOL):
        """Self-adjoint matrices spanning the null space, each of unit coordinate norm.

        Returns
        -------
        mats : ndarray, shape (nullity, M, M)
        singular_values : ndarray
        """
        V, s = null_space(self.matrix, atol)
        return self.basis.to_matrix(V.T), s


def super_analysis_operator(Phi, basis=None):
    if basis is None:
        basis = hermitian_basis(Phi.M)
    if basis.M != Phi.M:
        raise ValueError(f"basis dimension {basis.M} does not match ensemble dimension {Phi.M}")
    F = Phi.matrix.astype(complex)
    # <B_k, phi phi^H>_HS = phi^H B_k phi
    rows = np.einsum("mn,kml,ln->nk", F.conj(), basis.elements, F).real
    return SuperAnalysisOperator(_readonly(rows), basis, Phi)


_S3 = math.sqrt(3)
_FRFT3_P0 = np.array(
    [[3 + _S3, _S3, _S3], [_S3, (3 - _S3) / 2, (3 - _S3) / 2], [_S3, (3 - _S3) / 2, (3 - _S3) / 2]]
) / 6
_FRFT3_P2 = np.array(
    [[3 - _S3, -_S3, -_S3], [-_S3, (3 + _S3) / 2, (3 + _S3) / 2], [-_S3, (3 + _S3) / 2, (3 + _S3) / 2]]
) / 6
_FRFT3_P1 = np.array([[0, 0, 0], [0, 1, -1], [0, -1, 1]]) / 2


FRFT_PRINCIPAL = "principal"
FRFT_ALTERNATE = "alternate"


def fractional_dft_3(alpha, branch=FRFT_PRINCIPAL):
    """The 3 x 3 fractional DFT ``F^alpha`` built from its discrete Hermite-Gaussian projectors.

    Parameters
    ----------
    alpha : float
        Fractional order; ``alpha = 0`` gives the identity and ``alpha = 1``
        the (conjugated) unitary DFT.
    branch : {"principal", "alternate"}
        Which logarithm of the ``-1`` eigenvalue is used.  ``"principal"``
        weights the projectors by ``1, e^{i pi alpha}, e^{i pi alpha / 2}``.
        ``"alternate"`` uses ``e^{-i pi alpha}`` on the ``-1`` eigenspace
        instead; both satisfy ``F^a F^b = F^(a+b)`` and agree at integer
        ``alpha``.
    """
    if branch == FRFT_PRINCIPAL:
        w2 = np.exp(1j * np.pi * alpha)
    elif branch == FRFT_ALTERNATE:
        w2 = np.exp(-1j * np.pi * alpha)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return _FRFT3_P0 + w2 * _FRFT3_P2 + np.exp(1j * np.pi * alpha / 2) * _FRFT3_P1


def fractional_dft_stack(alphas=(0.0, 0.5, 1.0, 1.5), branch=FRFT_PRINCIPAL):
    """Ensemble ``[F^a1 F^a2 ...]``; the default is ``[I F^1/2 F F^3/2]`` (3 x 12)."""
    return MeasurementEnsemble(
        np.hstack([fractional_dft_3(a, branch) for a in alphas]), COMPLEX
    )


def injective_3x8_example():
    """A 3 x 8 complex ensemble whose super analysis operator has a 1-D null space
    spanned by a nonsingular matrix (hence injective intensity measurements)."""
    i = 1j
    return MeasurementEnsemble(
        np.array(
            [
                [2, 1, 1, 0, 0, 0, 1, i],
                [-1, 0, 0, 1, 1, -1, -2, 2],
                [0, 1, -1, 1, -1, 2 * i, i, -1],
            ]
        ),
        COMPLEX,
    )


def injective_2x4_example():
    return MeasurementEnsemble(np.array([[1, 0, 1, 1], [0, 1, 1, 1j]]), COMPLEX)


def identity_ensemble(M, field=REAL):
    return MeasurementEnsemble(np.eye(M), field)


# -- JSON I/O ---------------------------------------------------------------


def ensemble_to_dict(Phi):
    if Phi.is_complex:
        cols = [[[float(z.real), float(z.imag)] for z in col] for col in Phi.matrix.T]
    else:
        cols = [[float(v) for v in col] for col in Phi.matrix.T]
    return {"field": Phi.field, "M": Phi.M, "N": Phi.N, "columns": cols}


def _parse_entry(e):
    if isinstance(e, bool):
        raise EnsembleFormatError("boolean is not a valid entry")
    if isinstance(e, (int, float)):
        return complex(e, 0.0)
    if isinstance(e, (list, tuple)) and len(e) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in e
    ):
        return complex(e[0], e[1])
    raise EnsembleFormatError(f"entry must be a number or a [re, im] pair, got {e!r}")


def ensemble_from_dict(d):
    if not isinstance(d, dict):
        raise EnsembleFormatError("ensemble payload must be a JSON object")
    missing = {"field", "M", "N", "columns"} - d.keys()
    if missing:
        raise EnsembleFormatError(f"missing keys: {sorted(missing)}")
    fld, M, N, cols = d["field"], d["M"], d["N"], d["columns"]
    if fld not in (REAL, COMPLEX):
        raise EnsembleFormatError(f"field must be 'real' or 'complex', got {fld!r}")
    for name, v in (("M", M), ("N", N)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise EnsembleFormatError(f"{name} must be a positive integer")
    if not isinstance(cols, list) or not cols:
        raise EnsembleFormatError("columns must be a nonempty list")
    if len(cols) != N:
        raise EnsembleFormatError(f"N={N} but {len(cols)} columns given")
    A = np.empty((M, N), complex)
    for n, col in enumerate(cols):
        if not isinstance(col, list) or len(col) != M:
            raise EnsembleFormatError(f"column {n} must list exactly M={M} entries")
        for m, e in enumerate(col):
            A[m, n] = _parse_entry(e)
    if not np.all(np.isfinite(A)):
        raise EnsembleFormatError("entries must be finite")
    if fld == REAL and np.any(A.imag != 0):
        raise EnsembleFormatError("field is 'real' but some entries have nonzero imaginary part")
    return MeasurementEnsemble(A if fld == COMPLEX else A.real, fld)


def save_ensemble(Phi, path):
    with open(path, "w") as fh:
        json.dump(ensemble_to_dict(Phi), fh)
        fh.write("\n")


def load_ensemble(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"{path}: invalid JSON ({exc})") from exc
    return ensemble_from_dict(d)

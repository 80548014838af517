"""Dense real nonsymmetric eigenvalues and the stability predicate.

The general path is LAPACK ``dgeev`` through :func:`numpy.linalg.eigvals`
(Hessenberg reduction followed by the shifted QR iteration in ``dhseqr``).
Its convergence behaviour is fixed by LAPACK itself:

* a subdiagonal entry is deflated once it falls below unit roundoff relative
  to its neighbouring diagonal entries (``dlahqr`` / ``dlaqr0`` criterion);
* the iteration budget is ``ITMAX = 30 * max(10, n)`` QR sweeps.

Exhausting that budget makes LAPACK return ``info > 0``, which numpy raises as
``LinAlgError``; we surface it as :class:`EigenvalueError`. No silent fallback.

2x2 matrices use a closed form (:func:`eig2x2`), which must agree with the
general path to 1e-10.
"""

from dataclasses import dataclass

import numpy as np

# Named here so callers and tests can refer to the documented LAPACK budget.
LAPACK_QR_SWEEPS_PER_ORDER = 30
LAPACK_QR_MIN_ORDER = 10


class EigenvalueError(ArithmeticError):
    """The eigenvalue iteration failed to converge."""

    def __init__(self, message, draw_index=None):
        super().__init__(message)
        self.draw_index = draw_index


@dataclass(frozen=True)
class Spectrum:
    """All ``n`` eigenvalues of a real matrix, counted with multiplicity."""

    eigenvalues: np.ndarray

    @property
    def order(self):
        return len(self.eigenvalues)

    @property
    def leading_real_part(self):
        return float(np.max(self.eigenvalues.real))

    @property
    def leading_eigenvalue(self):
        return complex(self.eigenvalues[np.argmax(self.eigenvalues.real)])


def as_real_matrix(m):
    """Validate ``m`` as a finite real square matrix and return it as float64."""
    a = np.asarray(m)
    if np.iscomplexobj(a):
        raise ValueError("matrix must be real")
    a = a.astype(float, copy=False)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _as_stack(stack):
    a = np.asarray(stack, dtype=float)
    if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[1] == 0:
        raise ValueError(f"expected a stack of square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = int(np.argmax(~np.all(np.isfinite(a), axis=(1, 2))))
        raise ValueError(f"matrix {bad} has non-finite entries")
    return a


def eig2x2(m):
    """Closed-form eigenvalues of a real 2x2 matrix.

    Uses ``half_trace +/- sqrt(((a - d)/2)**2 + b*c)``, which avoids the
    cancellation in ``tr**2/4 - det`` when the eigenvalues are close. For real
    roots the smaller-magnitude one comes from ``det / larger``.
    """
    (a, b), (c, d) = np.asarray(m, dtype=float)
    half_tr = 0.5 * (a + d)
    half_diff = 0.5 * (a - d)
    disc = half_diff * half_diff + b * c
    if disc >= 0.0:
        root = np.sqrt(disc)
        big = half_tr + np.copysign(root, half_tr) if half_tr != 0.0 else root
        if big == 0.0:
            return np.array([0.0, 0.0], dtype=complex)
        small = (a * d - b * c) / big
        lam = np.sort(np.array([big, small]))[::-1]
        return lam.astype(complex)
    root = np.sqrt(-disc)
    return np.array([complex(half_tr, root), complex(half_tr, -root)])


def eigenvalues(m):
    """Spectrum of a single real square matrix."""
    a = as_real_matrix(m)
    if a.shape[0] == 1:
        return Spectrum(a[0].astype(complex))
    if a.shape[0] == 2:
        return Spectrum(eig2x2(a))
    try:
        lam = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(f"QR iteration did not converge: {exc}") from exc
    return Spectrum(lam.astype(complex, copy=False))


def eigenvalues_batch(stack):
    """Eigenvalues of every matrix in an ``(N, n, n)`` stack, shape ``(N, n)``.

    A convergence failure is localised to its draw index before raising.
    """
    a = _as_stack(stack)
    try:
        lam = np.linalg.eigvals(a)
    except np.linalg.LinAlgError:
        for i, mat in enumerate(a):
            try:
                np.linalg.eigvals(mat)
            except np.linalg.LinAlgError as exc:
                raise EigenvalueError(
                    f"QR iteration did not converge for draw {i}: {exc}", draw_index=i
                ) from exc
        raise
    return lam.astype(complex, copy=False)


def leading_real_parts(stack):
    """Maximum real part of the spectrum of each matrix in the stack."""
    return eigenvalues_batch(stack).real.max(axis=1)


def is_stable(m):
    """True iff every eigenvalue has strictly negative real part."""
    return eigenvalues(m).leading_real_part < 0.0


def stable_mask(stack):
    return leading_real_parts(stack) < 0.0

"""Permanent and multipermanent kernels.

These turn circuit submatrices and internal-state overlap data into
detection probabilities for (partially distinguishable) photons. The
multipermanent is the double-permutation sum

    Perm(W) = sum_{sigma, rho} prod_j W[sigma_j, rho_j, j],
    W[k, l, j] = A[k, j] * conj(A[l, j]) * S[l, k],

where A is photon-major (row k = input photon k, column j = output slot j)
and S is the Gram matrix of the photons' internal states. Two kernels are
provided: a direct double-permutation sum, O(n! ** 2) terms, and a
double inclusion-exclusion variant, O(4 ** n * n), for larger photon
numbers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .fock import AssignmentList, FockState, submatrix

REAL_TOL = 1e-10
PSD_TOL = 1e-9
PROB_TOL = 1e-9

# Above this photon number the inclusion-exclusion kernel takes over by
# default; the factorial-squared sum is kept as the small-n reference.
NAIVE_KERNEL_MAX = 4


def permanent_naive(a: np.ndarray) -> complex:
    """Matrix permanent by direct permutation sum, O(n * n!).

    Reference implementation; use `permanent_ryser` beyond n ~ 8.
    """
    a = _square(a)
    n = a.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for j, p in enumerate(perm):
            term *= a[p, j]
        total += term
    return complex(total)


def permanent_ryser(a: np.ndarray) -> complex:
    """Matrix permanent by Ryser's inclusion-exclusion formula with Gray-code
    subset updates, O(2**n * n)."""
    a = _square(a)
    n = a.shape[0]
    if n == 1:
        return complex(a[0, 0])
    row_sum = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray = 0
    for step in range(1, 1 << n):
        new_gray = step ^ (step >> 1)
        bit = (new_gray ^ gray).bit_length() - 1
        if new_gray & (1 << bit):
            row_sum += a[:, bit]
        else:
            row_sum -= a[:, bit]
        gray = new_gray
        sign = -1.0 if (bin(gray).count("1") & 1) else 1.0
        total += sign * np.prod(row_sum)
    return complex(total * ((-1.0) ** n))


def permanent(a: np.ndarray, method: str = "auto") -> complex:
    """Matrix permanent; `method` is one of auto, naive, ryser."""
    if method == "naive":
        return permanent_naive(a)
    if method == "ryser":
        return permanent_ryser(a)
    if method == "auto":
        a = _square(a)
        return permanent_naive(a) if a.shape[0] <= 5 else permanent_ryser(a)
    raise ValueError(f"unknown permanent method {method!r}")


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class DistinguishabilityMatrix:
    """Hermitian Gram matrix of pairwise internal-state overlaps.

    Unit diagonal, |entries| <= 1, positive semidefinite up to a numerical
    tolerance on the smallest eigenvalue.
    """

    entries: np.ndarray

    def __init__(self, entries):
        s = np.asarray(entries, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.allclose(s, s.conj().T, atol=1e-10):
            raise ValueError("Gram matrix must be Hermitian")
        if not np.allclose(np.diag(s), 1.0, atol=1e-10):
            raise ValueError("Gram matrix must have unit diagonal")
        if np.any(np.abs(s) > 1 + 1e-10):
            raise ValueError("overlap magnitudes cannot exceed 1")
        if s.shape[0] > 1:
            min_eig = float(np.linalg.eigvalsh(s)[0])
            if min_eig < -PSD_TOL:
                raise ValueError(f"Gram matrix is not PSD (min eigenvalue {min_eig:.3e})")
        object.__setattr__(self, "entries", s)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def restrict(self, assignment: AssignmentList) -> np.ndarray:
        """Effective per-photon overlap matrix for an assignment list;
        repeated labels mean identical photons."""
        idx = list(assignment.labels)
        if max(idx, default=-1) >= self.n:
            raise ValueError("assignment label outside the defined internal states")
        eff = self.entries[np.ix_(idx, idx)].copy()
        np.fill_diagonal(eff, 1.0)
        return eff

    def __eq__(self, other):
        return isinstance(other, DistinguishabilityMatrix) and np.array_equal(
            self.entries, other.entries
        )


def _as_gram(s) -> np.ndarray:
    if isinstance(s, DistinguishabilityMatrix):
        return s.entries
    return np.asarray(s, dtype=complex)


@lru_cache(maxsize=None)
def _perm_index_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def _multiperm_naive_batch(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Vectorized double-permutation sum over a stack of photon-major
    matrices. a, s: (batch, n, n)."""
    batch, n, _ = a.shape
    perms = _perm_index_array(n)               # (n!, n)
    cols = np.arange(n)
    amps = np.prod(a[:, perms, cols], axis=2)  # (batch, n!)
    # overlap factor G[b, si, ri] = prod_j s[b, P[ri, j], P[si, j]]
    g = np.prod(s[:, perms[None, :, :], perms[:, None, :]], axis=3)
    return np.einsum("bs,bsr,br->b", amps, g, amps.conj())


def _prod_last_axis(a: np.ndarray) -> np.ndarray:
    """Pairwise-tree product along the last axis (faster than ufunc reduce
    for the short axes that occur here)."""
    while a.shape[-1] > 1:
        k = a.shape[-1]
        half = k // 2
        res = a[..., 0 : 2 * half : 2] * a[..., 1 : 2 * half : 2]
        if k & 1:
            res = res.copy()
            res[..., 0] *= a[..., -1]
        a = res
    return a[..., 0]


def _multiperm_ryser_batch(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Double inclusion-exclusion over row-index subsets of the two
    permutations:

        Perm(W) = sum_{A, B} (-1)^(|A| + |B|) prod_j (1_A^T W_j 1_B).

    a, s: (batch, n, n) photon-major matrix and effective Gram matrix.
    """
    batch, n, _ = a.shape
    nsub = 1 << n
    # T[b, k, j, l] = a[b, k, j] * conj(a[b, l, j]) * s[b, l, k]
    t = (
        a[:, :, :, None]
        * a.conj().transpose(0, 2, 1)[:, None, :, :]
        * s.transpose(0, 2, 1)[:, :, None, :]
    )
    # subset sums over k, sliced by l for contiguous gray-walk updates:
    # v[l, b, A, j] = sum_{k in A} T[b, k, j, l]
    v = np.zeros((n, batch, nsub, n), dtype=complex)
    for sub in range(1, nsub):
        low = sub & -sub
        v[:, :, sub] = v[:, :, sub ^ low] + t[:, low.bit_length() - 1].transpose(2, 0, 1)
    sign_a = np.where(
        np.array([bin(m).count("1") & 1 for m in range(nsub)], dtype=bool), -1.0, 1.0
    )
    acc = np.zeros(batch, dtype=complex)
    s_mat = np.zeros((batch, nsub, n), dtype=complex)
    gray = 0
    for step in range(1, nsub):
        new_gray = step ^ (step >> 1)
        bit = (new_gray ^ gray).bit_length() - 1
        if new_gray & (1 << bit):
            s_mat += v[bit]
        else:
            s_mat -= v[bit]
        gray = new_gray
        sign_b = -1.0 if (bin(gray).count("1") & 1) else 1.0
        acc += sign_b * (_prod_last_axis(s_mat) @ sign_a)
    return acc


def multipermanent_batch(bs: np.ndarray, ss: np.ndarray, kernel: str = "auto") -> np.ndarray:
    """Multipermanents of a stack of equal-size submatrices.

    `bs` holds submatrices in the fock.submatrix orientation (rows = output
    slots, columns = input photons); `ss` the matching effective Gram
    matrices. Returns real values after checking the imaginary residue.
    """
    bs = np.asarray(bs, dtype=complex)
    ss = np.asarray(ss, dtype=complex)
    if bs.ndim != 3 or bs.shape[1] != bs.shape[2]:
        raise ValueError("expected a stack of square matrices")
    if ss.shape != bs.shape:
        raise ValueError("Gram stack must match matrix stack")
    a = bs.transpose(0, 2, 1)  # photon-major: rows = input photons
    n = a.shape[1]
    if kernel == "auto":
        kernel = "naive" if n <= NAIVE_KERNEL_MAX else "ryser"
    if kernel == "naive":
        vals = _multiperm_naive_batch(a, ss)
    elif kernel == "ryser":
        vals = _multiperm_ryser_batch(a, ss)
    else:
        raise ValueError(f"unknown multipermanent kernel {kernel!r}")
    scale = np.maximum(np.abs(vals), 1.0)
    if np.any(np.abs(vals.imag) > REAL_TOL * scale):
        raise ValueError(
            "multipermanent has a non-real value; the overlap matrix likely "
            "violates its Hermiticity/PSD invariants"
        )
    return vals.real


def multipermanent(b: np.ndarray, s, kernel: str = "auto") -> float:
    """Perm(W) for one submatrix `b` (fock.submatrix orientation) and one
    effective Gram matrix `s` of the participating photons."""
    b = _square(b)
    s_arr = _as_gram(s)
    if s_arr.shape != b.shape:
        raise ValueError(
            f"Gram matrix shape {s_arr.shape} does not match submatrix {b.shape}"
        )
    return float(multipermanent_batch(b[None], s_arr[None], kernel=kernel)[0])


def _occupation_factorial(state: FockState) -> int:
    out = 1
    for k in state.occupations:
        out *= factorial(k)
    return out


def output_probability(
    matrix,
    input_state: FockState,
    output_state: FockState,
    s,
    assignment: AssignmentList | None = None,
    kernel: str = "auto",
) -> float:
    """Detection probability of `output_state` given `input_state` through a
    linear circuit: Perm(W) / (prod_i n_i! * prod_j m_j!).

    `matrix` is a raw transfer matrix or anything exposing `.matrix`
    (columns index input modes). `s` is the internal-state Gram matrix,
    indexed by photon when `assignment` is None, by internal state otherwise.
    """
    m = np.asarray(getattr(matrix, "matrix", matrix), dtype=complex)
    n = input_state.n_photons
    s_arr = _as_gram(s)
    if assignment is not None:
        if len(assignment) != n:
            raise ValueError("assignment length must equal the photon number")
        if isinstance(s, DistinguishabilityMatrix):
            s_eff = s.restrict(assignment)
        else:
            idx = list(assignment.labels)
            s_eff = s_arr[np.ix_(idx, idx)].copy()
            np.fill_diagonal(s_eff, 1.0)
    else:
        s_eff = s_arr
    if s_eff.shape != (n, n):
        raise ValueError(f"need a {n} x {n} effective Gram matrix, got {s_eff.shape}")
    b = submatrix(m, input_state, output_state)
    norm = _occupation_factorial(input_state) * _occupation_factorial(output_state)
    p = multipermanent(b, s_eff, kernel=kernel) / norm
    if p < -PROB_TOL or p > 1 + PROB_TOL:
        raise ValueError(f"probability {p} outside [0, 1]; inconsistent inputs")
    return float(min(max(p, 0.0), 1.0))

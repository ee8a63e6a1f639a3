"""Transmission amplitude, scattering matrix and transmission zeros.

Two routes to the same amplitude: the pole sum over eigenstates of
``H_eff`` and a direct linear solve with ``E - H_eff``. The resolvent route
stays valid at exceptional points where the pole sum breaks down. It works
in the site basis, where the lead self-energies sit on the dot levels and
parts of the device that are cut off from each other stay exactly block
diagonal. The parity-adapted closed eigenbasis mixes the two dots, so a
very narrow resonance on one side and a broad one on the other would share
rows there and lose digits in the solve.

Normalization: with ``W = [V_L, V_R]`` built from the energy-normalized
lead amplitude ``sqrt(sin k / 2 pi)``, the anti-Hermitian part of ``H_eff``
equals ``-2 pi i W W^T``. Unitarity of ``S = 1 - 2i W'^T G W'`` with
``W' = sqrt(2 pi) W`` then fixes the prefactor ``4 pi i`` used below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DefectiveDecomposition, NoZeros, NotApplicable, SingularResolvent
from .model import (
    DoubleDotSpec,
    build_effective_hamiltonian,
    channel_from_energy,
    closed_spectrum,
    coupling_vectors,
)
from .spectral import eigendecompose

__all__ = [
    "AMPLITUDE_PREFACTOR",
    "TransmissionPoint",
    "ScatteringMatrix",
    "TransmissionZeros",
    "transmission_spectral",
    "transmission_resolvent",
    "transmission",
    "scattering_matrix",
    "predict_transmission_zeros",
    "transmission_curve",
]

AMPLITUDE_PREFACTOR = -4j * math.pi


@dataclass(frozen=True)
class TransmissionPoint:
    energy: float
    amplitude: complex
    method: str

    @property
    def probability(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass(frozen=True)
class ScatteringMatrix:
    entries: np.ndarray
    energy: float

    @property
    def r(self) -> complex:
        return complex(self.entries[0, 0])

    @property
    def t(self) -> complex:
        return complex(self.entries[1, 0])

    def unitarity_defect(self) -> float:
        S = self.entries
        return float(np.abs(S @ S.conj().T - np.eye(2)).max())


@dataclass(frozen=True)
class TransmissionZeros:
    energies: np.ndarray
    multiplicities: np.ndarray


def _setup(spec: DoubleDotSpec, E: float, closed=None):
    ch = channel_from_energy(E)
    closed = closed or closed_spectrum(spec)
    H = build_effective_hamiltonian(spec, ch, closed)
    VL, VR = coupling_vectors(spec, ch, closed)
    return H, VL, VR


def transmission_spectral(spec: DoubleDotSpec, E: float, closed=None) -> TransmissionPoint:
    """Pole sum ``t = -4 pi i sum_l <L|V|l)(l|V|R> / (E - z_l)``.

    Raises ``DefectiveDecomposition`` when an eigenvector's transpose norm has
    collapsed; callers should fall back to :func:`transmission_resolvent`.
    """
    H, VL, VR = _setup(spec, E, closed)
    es = eigendecompose(H)
    if es.any_defective:
        raise DefectiveDecomposition(f"defective eigenvectors at E={E}")
    left = VL @ es.right_vectors
    right = es.right_vectors.T @ VR
    amp = AMPLITUDE_PREFACTOR * np.sum(left * right / (E - es.eigenvalues))
    return TransmissionPoint(float(E), complex(amp), "spectral")


def _reachable_basis(M: np.ndarray, W: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the smallest ``M``-invariant subspace containing ``W``.

    Directions outside it are never populated by the leads and never read
    out, so they cannot affect ``W^T (E - M)^{-1} W``.
    """
    n = M.shape[0]
    basis: list[np.ndarray] = []
    pending = [W[:, j].astype(complex) for j in range(W.shape[1])]
    while pending and len(basis) < n:
        x = pending.pop(0)
        size = np.linalg.norm(x)
        if size == 0.0:
            continue
        for _ in range(2):  # re-orthogonalize once for stability
            for q in basis:
                x = x - np.vdot(q, x) * q
        if np.linalg.norm(x) <= rtol * size:
            continue
        q = x / np.linalg.norm(x)
        basis.append(q)
        pending.append(M @ q)
    return np.column_stack(basis) if basis else np.zeros((n, 0), dtype=complex)


LEVEL_MERGE_TOL = 1e-12


def _merged_levels(levels, tol: float = LEVEL_MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Distinct levels of one dot (equal within ``tol``) and their multiplicities."""
    uniq: list[list[float]] = []
    for x in np.sort(np.asarray(levels, dtype=float)):
        if uniq and abs(x - uniq[-1][-1]) <= tol * max(1.0, abs(x)):
            uniq[-1].append(float(x))
        else:
            uniq.append([float(x)])
    return np.array([np.mean(g) for g in uniq]), np.array([len(g) for g in uniq])


def _site_setup(spec: DoubleDotSpec, E: float) -> tuple[np.ndarray, np.ndarray]:
    """Site-basis ``H_eff`` and lead vectors ``W = [V_L, V_R]``.

    The lead and the wire couple to every level of a dot with the same
    amplitude, so ``m`` equal levels act as one site of weight ``sqrt(m)``;
    their antisymmetric combinations are exact eigenstates that neither
    lead can reach. Merging them is exact and removes a singular direction
    when ``E`` sits on the repeated level. Levels closer than
    ``LEVEL_MERGE_TOL`` (relative) are merged too: the state they would
    trap has a width far below double precision, and the merge changes
    ``T`` only within that distance of the level.
    """
    ch = channel_from_energy(E)
    lv, lm = _merged_levels(spec.left_levels)
    rv, rm = _merged_levels(spec.right_levels)
    lw, rw = np.sqrt(lm), np.sqrt(rm)
    c = lv.size
    n = c + 1 + rv.size
    left = np.zeros(n)
    left[:c] = lw
    right = np.zeros(n)
    right[c + 1:] = rw
    M = np.diag(np.concatenate([lv, [spec.wire_energy], rv])).astype(complex)
    M[c, :] += spec.u * (left + right)
    M[:, c] += spec.u * (left + right)
    M -= ch.phase * (spec.v ** 2 * np.outer(left, left)
                     + spec.right_coupling ** 2 * np.outer(right, right))
    amp = math.sqrt(ch.sin_k / (2.0 * math.pi))
    return M, np.column_stack([spec.v * amp * left, spec.right_coupling * amp * right])


def _reachable_sites(M: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Sites connected to a lead through nonzero matrix elements."""
    from scipy.sparse.csgraph import breadth_first_order

    adjacency = (M != 0) | (M.T != 0)
    seen = np.zeros(M.shape[0], dtype=bool)
    for start in np.flatnonzero(np.any(W != 0, axis=1)):
        if not seen[start]:
            seen[breadth_first_order(adjacency.astype(np.int8), start, return_predecessors=False)] = True
    return np.flatnonzero(seen)


def _projected_solve(M, E, rhs, W, Q):
    A = E * np.eye(Q.shape[1]) - Q.conj().T @ M @ Q
    y = np.linalg.solve(A, Q.conj().T @ rhs)
    return Q @ y


def _resolvent_solve(M: np.ndarray, E: float, rhs: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``(E - M)^{-1} rhs`` restricted to the part of the device the leads reach.

    Sites with no path to a lead (a dot at ``v = 0`` and ``u = 0``) never
    enter the amplitude and are dropped first; this keeps the solve in the
    site basis and so keeps weakly and strongly coupled parts apart. If the
    remaining system is still exactly singular, which happens when ``E``
    sits on a state that the leads cannot excite (degenerate levels within
    one dot), the solve falls back to the smallest ``M``-invariant subspace
    containing the lead vectors.
    """
    idx = _reachable_sites(M, W)
    x = np.zeros(rhs.shape, dtype=complex)
    if idx.size == 0:
        return x
    sub = M[np.ix_(idx, idx)]
    try:
        x[idx] = np.linalg.solve(E * np.eye(idx.size) - sub, rhs[idx])
    except np.linalg.LinAlgError:
        Q = _reachable_basis(sub, W[idx])
        try:
            x[idx] = _projected_solve(sub, E, rhs[idx], W[idx], Q)
        except np.linalg.LinAlgError as exc:
            raise SingularResolvent(f"E - H_eff is singular at E={E}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularResolvent(f"E - H_eff is singular at E={E}")
    return x


def transmission_resolvent(spec: DoubleDotSpec, E: float, closed=None) -> TransmissionPoint:
    """``t = -4 pi i V_L^T (E - H_eff)^{-1} V_R`` by a direct solve.

    ``closed`` is accepted for symmetry with :func:`transmission_spectral`;
    the site-basis solve does not need the closed eigenstates.
    """
    M, W = _site_setup(spec, E)
    x = _resolvent_solve(M, E, W[:, 1].astype(complex), W)
    return TransmissionPoint(float(E), complex(AMPLITUDE_PREFACTOR * (W[:, 0] @ x)), "resolvent")


transmission = transmission_resolvent


def scattering_matrix(spec: DoubleDotSpec, E: float, closed=None) -> ScatteringMatrix:
    """``S = 1 - 4 pi i W^T (E - H_eff)^{-1} W`` with ``W = [V_L, V_R]``.

    Row/column 0 is the left lead, 1 the right lead.
    """
    M, W = _site_setup(spec, E)
    X = _resolvent_solve(M, E, W.astype(complex), W)
    S = np.eye(2) + AMPLITUDE_PREFACTOR * (W.T @ X)
    return ScatteringMatrix(S, float(E))


def transmission_curve(spec: DoubleDotSpec, energies) -> np.ndarray:
    """``T(E)`` on an energy grid (resolvent route)."""
    return np.array([transmission_resolvent(spec, E).probability for E in energies])


def predict_transmission_zeros(spec: DoubleDotSpec, tol: float = LEVEL_MERGE_TOL) -> TransmissionZeros:
    """Zeros of ``sum_i 1/(E - eps_i)`` over the levels of one dot.

    The lead reaches the wire through every level of a dot at once; the
    pole sum vanishing cuts that path for any ``v`` and ``L``. There is
    exactly one simple root between consecutive distinct levels.

    Levels equal within ``tol`` are merged into one pole of weight ``m``.
    They contribute no zero of their own: near degeneracy the zero sits
    between the two levels, but at exact degeneracy the antisymmetric
    combination decouples and its pole cancels the zero.
    """
    if not spec.mirror_symmetric:
        raise NotApplicable("zero prediction assumes identical left/right dot spectra")
    uniq, counts = _merged_levels(spec.left_levels, tol)
    if len(uniq) < 2:
        raise NoZeros("dots with a single distinct level have no transmission zeros")

    def pole_sum(E):
        return sum(m / (E - a) for a, m in zip(uniq, counts))

    energies = []
    for a, b in zip(uniq[:-1], uniq[1:]):
        h = 1e-14 * max(1.0, abs(a), abs(b))
        energies.append(brentq(pole_sum, a + h, b - h, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return TransmissionZeros(np.asarray(energies), np.ones(len(energies), dtype=int))

"""Eigenvalues and eigenvectors of the complex symmetric effective Hamiltonian.

Eigenvectors ``|k)`` are normalized with the transpose (non-conjugating)
product ``(k|l) = sum_j k_j l_j``. Close to an exceptional point this norm
collapses; such vectors are flagged instead of normalized.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NoRootInBand, NotApplicable, NumericalFailure, ZeroVector
from .model import (
    Channel,
    DoubleDotSpec,
    EffectiveHamiltonian,
    build_effective_hamiltonian,
    channel_from_energy,
    closed_spectrum,
)

__all__ = [
    "DEFECTIVE_THRESHOLD",
    "AMBIGUOUS_OVERLAP",
    "EigenSet",
    "AnalyticThreeState",
    "ResonanceState",
    "Trajectories",
    "eigendecompose",
    "phase_rigidity",
    "analytic_three_state",
    "track_trajectories",
    "eigen_sweep",
    "solve_fixed_points",
    "resonance_states",
]

DEFECTIVE_THRESHOLD = 1e-10
AMBIGUOUS_OVERLAP = 0.5
_DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class EigenSet:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray  # columns
    norms: np.ndarray  # (k|k) of the unit-2-norm vector, before normalization
    phase_rigidities: np.ndarray
    defective_flags: np.ndarray
    label_order: str = "ascending-real"
    param: float | None = None
    # closed eigenvectors (columns) the vectors are expressed in, if not the site basis
    basis: np.ndarray | None = field(default=None, repr=False)

    def site_vectors(self) -> np.ndarray:
        return self.right_vectors if self.basis is None else self.basis @ self.right_vectors

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def min_rigidity(self) -> float:
        return float(self.phase_rigidities.min())

    @property
    def any_defective(self) -> bool:
        return bool(self.defective_flags.any())


def phase_rigidity(vector) -> float:
    """``|sum v_j^2| / sum |v_j|^2``: 1 for real vectors, 0 at coalescence."""
    vec = np.asarray(vector, dtype=complex)
    denom = float(np.vdot(vec, vec).real)
    if denom == 0.0:
        raise ZeroVector("phase rigidity of a zero vector")
    return min(1.0, abs(np.sum(vec * vec)) / denom)


def _orthogonalize_cluster(vecs: np.ndarray) -> np.ndarray:
    # bilinear Gram-Schmidt inside a degenerate, non-defective eigenspace
    out = []
    for j in range(vecs.shape[1]):
        x = vecs[:, j].copy()
        for q in out:
            x = x - (q @ x) * q
        s = x @ x
        if abs(s) < DEFECTIVE_THRESHOLD * np.vdot(x, x).real:
            return vecs
        out.append(x / cmath.sqrt(s))
    return np.column_stack(out)


def eigendecompose(H: EffectiveHamiltonian | np.ndarray) -> EigenSet:
    """Full eigensystem of a complex symmetric matrix, biorthonormalized.

    Sign convention: the largest-magnitude component of every vector has a
    non-negative real part. Eigenvalues are ordered by real part, then
    imaginary part.
    """
    M = np.asarray(H.matrix if isinstance(H, EffectiveHamiltonian) else H, dtype=complex)
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(vecs))):
        raise NumericalFailure("eigensolver returned non-finite values")

    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    vecs = vecs[:, order]

    scale = max(1.0, float(np.abs(M).max()))
    n = len(vals)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(vals[stop] - vals[start]) < _DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _orthogonalize_cluster(vecs[:, start:stop])
        start = stop

    norms = np.empty(n, dtype=complex)
    rigid = np.empty(n)
    defective = np.zeros(n, dtype=bool)
    for j in range(n):
        x = vecs[:, j] / np.linalg.norm(vecs[:, j])
        s = complex(x @ x)
        norms[j] = s
        rigid[j] = min(1.0, abs(s))
        if abs(s) < DEFECTIVE_THRESHOLD:
            defective[j] = True
        else:
            x = x / cmath.sqrt(s)
        pivot = int(np.argmax(np.abs(x)))
        if x[pivot].real < 0:
            x = -x
        vecs[:, j] = x
    basis = H.closed.eigenvectors if isinstance(H, EffectiveHamiltonian) else None
    return EigenSet(vals, vecs, norms, rigid, defective, basis=basis)


@dataclass(frozen=True)
class AnalyticThreeState:
    """Closed-form eigensystem of the symmetric three-state ``H_eff``.

    ``z1, z3 = m -/+ xi`` with ``m = (eps1 + eps(L) - v^2 e^{ik})/2``;
    vectors ``|1) = (a, 0, b)``, ``|2) = (0, 1, 0)``, ``|3) = (b, 0, -a)``
    in the closed eigenbasis.
    """

    z1: complex
    z2: complex
    z3: complex
    a: complex
    b: complex
    f: complex
    omega: complex
    xi: complex

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3])

    def vectors(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, 0, b], [0, 1, 0], [b, 0, -a]], dtype=complex)


def analytic_three_state(spec: DoubleDotSpec, ch: Channel) -> AnalyticThreeState:
    if not spec.three_state or spec.v != spec.right_coupling:
        raise NotApplicable("closed forms need one level per dot and v == w")
    eps1 = spec.left_levels[0]
    wire = spec.wire_energy
    u = spec.u
    g = spec.v ** 2 * ch.phase
    delta = 0.5 * (eps1 - wire)
    eta = math.sqrt(delta * delta + 2.0 * u * u)
    z2 = eps1 - g
    mean = 0.5 * (eps1 + wire - g)
    disc = (0.5 * (wire - eps1 + g)) ** 2 + 2.0 * u * u
    xi = cmath.sqrt(disc)
    if eta > 0.0:
        f = g * u / (math.sqrt(2.0) * eta)
        omega = -eta + delta * g / (2.0 * eta)
    else:
        f = 0j
        omega = 0.5 * g
    # (a, b) from whichever of the two equivalent eigenvector forms is better conditioned
    p = xi + omega
    q = xi - omega
    if abs(p) >= abs(q):
        if p == 0:
            a, b = complex(math.inf), complex(math.inf)
        else:
            a = -f / cmath.sqrt(2.0 * xi * p) if xi != 0 else complex(math.inf)
            b = cmath.sqrt(p / (2.0 * xi)) if xi != 0 else complex(math.inf)
    else:
        a0, b0 = q, -f
        nrm = cmath.sqrt(a0 * a0 + b0 * b0)
        a, b = (a0 / nrm, b0 / nrm) if nrm != 0 else (complex(math.inf), complex(math.inf))
    return AnalyticThreeState(mean - xi, z2, mean + xi, complex(a), complex(b), complex(f), complex(omega), xi)


def _overlaps(prev: EigenSet, cur: EigenSet) -> np.ndarray:
    # the closed eigenbasis moves with u and L; compare in the site basis then.
    # The basis is real orthogonal, so transpose products are unchanged.
    if prev.basis is not None and cur.basis is not None:
        A, B = prev.site_vectors(), cur.site_vectors()
    else:
        A, B = prev.right_vectors, cur.right_vectors
    bil = np.abs(A.T @ B)
    na = np.sqrt(np.abs(np.sum(A * A, axis=0)))
    nb = np.sqrt(np.abs(np.sum(B * B, axis=0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = bil / np.outer(na, nb)
    herm = np.abs(A.conj().T @ B) / np.outer(np.linalg.norm(A, axis=0), np.linalg.norm(B, axis=0))
    bad = prev.defective_flags[:, None] | cur.defective_flags[None, :] | ~np.isfinite(out)
    # a collapsed transpose norm carries no matching information
    return np.where(bad, herm * np.sqrt(prev.phase_rigidities[:, None] * cur.phase_rigidities[None, :]), out)


@dataclass
class Trajectories:
    """Eigenvalues of a sweep relabeled into continuous branches.

    ``index[i, k]`` is the position in step ``i``'s EigenSet carrying label
    ``k``; ``z``/``rigidity`` are already permuted into label order.
    """

    params: np.ndarray
    z: np.ndarray
    rigidity: np.ndarray
    ambiguous: np.ndarray
    index: np.ndarray
    param_name: str = "param"
    vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_labels(self) -> int:
        return self.z.shape[1]

    def to_records(self) -> list[dict]:
        series = []
        for k in range(self.n_labels):
            records = [
                {
                    "param": float(p),
                    "re_z": float(self.z[i, k].real),
                    "im_z": float(self.z[i, k].imag),
                    "rigidity": float(self.rigidity[i, k]),
                    "flag": bool(self.ambiguous[i]),
                }
                for i, p in enumerate(self.params)
            ]
            series.append({"label": k, "param_name": self.param_name, "records": records})
        return series


def _initial_labels(es: EigenSet, initial: str) -> np.ndarray:
    n = len(es)
    if initial == "order":
        return np.arange(n)
    # label k = eigenvector dominated by closed state k
    weight = np.abs(es.right_vectors) ** 2
    weight = weight / weight.sum(axis=0, keepdims=True)
    rows, cols = linear_sum_assignment(-weight)
    labels = np.empty(n, dtype=int)
    labels[rows] = cols
    return labels


def _match(prev: EigenSet, prev_z_pred: np.ndarray, cur: EigenSet) -> tuple[np.ndarray, bool]:
    """Permutation p with p[label] = index in ``cur``; ``prev`` is in label order."""
    O = _overlaps(prev, cur)
    dist = np.abs(prev_z_pred[:, None] - cur.eigenvalues[None, :])
    rows, cols = linear_sum_assignment(-O + 1e-6 * dist)
    perm = np.empty(len(cur), dtype=int)
    perm[rows] = cols
    if np.min(O[rows, cols]) >= AMBIGUOUS_OVERLAP:
        return perm, False
    rows, cols = linear_sum_assignment(dist)
    perm[rows] = cols
    return perm, True


def _permuted(es: EigenSet, perm: np.ndarray) -> EigenSet:
    return EigenSet(
        es.eigenvalues[perm],
        es.right_vectors[:, perm],
        es.norms[perm],
        es.phase_rigidities[perm],
        es.defective_flags[perm],
        label_order="trajectory",
        param=es.param,
        basis=es.basis,
    )


def track_trajectories(
    sweep: Sequence[EigenSet],
    params: Sequence[float] | None = None,
    *,
    param_name: str = "param",
    initial: str = "basis",
    keep_vectors: bool = False,
) -> Trajectories:
    """Continue eigenvalue labels along an ordered sweep.

    Consecutive steps are matched by the normalized transpose overlap
    ``|(k|l)| / sqrt(|(k|k)| |(l|l)|)``. If any matched overlap drops below
    0.5 the step is flagged ambiguous and matched by distance to the
    linearly extrapolated eigenvalues instead.

    ``initial="basis"`` assigns label k at the first step to the vector
    dominated by closed state k; ``"order"`` keeps the EigenSet order.
    """
    if not sweep:
        raise ValueError("empty sweep")
    steps = len(sweep)
    n = len(sweep[0])
    if params is None:
        params = [es.param if es.param is not None else i for i, es in enumerate(sweep)]
    z = np.empty((steps, n), dtype=complex)
    rig = np.empty((steps, n))
    idx = np.empty((steps, n), dtype=int)
    amb = np.zeros(steps, dtype=bool)
    vecs = np.empty((steps, n, n), dtype=complex) if keep_vectors else None

    perm = _initial_labels(sweep[0], initial)
    current = _permuted(sweep[0], perm)
    for i in range(steps):
        if i > 0:
            pred = z[i - 1]
            if i > 1:
                pred = 2 * z[i - 1] - z[i - 2]
            perm, amb[i] = _match(current, pred, sweep[i])
            current = _permuted(sweep[i], perm)
        idx[i] = perm
        z[i] = current.eigenvalues
        rig[i] = current.phase_rigidities
        if keep_vectors:
            vecs[i] = current.right_vectors
    return Trajectories(np.asarray(params, dtype=float), z, rig, amb, idx, param_name, vecs)


def eigen_sweep(spec: DoubleDotSpec, param: str, values: Sequence[float], energy: float | None = None) -> list[EigenSet]:
    """EigenSets of ``H_eff`` along one parameter (``v, w, u, L`` or ``E``)."""
    out = []
    closed = None
    for x in values:
        if param == "E":
            if closed is None:
                closed = closed_spectrum(spec)
            H = build_effective_hamiltonian(spec, channel_from_energy(x), closed)
        else:
            if energy is None:
                raise ValueError("energy required unless sweeping E")
            s = spec.with_params(**{param: x})
            H = build_effective_hamiltonian(s, channel_from_energy(energy))
        es = eigendecompose(H)
        out.append(replace(es, param=float(x)))
    return out


@dataclass(frozen=True)
class ResonanceState:
    """Self-consistent position and width of one resonance.

    ``width_paper = 2 Im z`` keeps the sign of the eigenvalue (non-positive
    for outgoing waves); ``width_decay`` is its positive counterpart.
    """

    index: int
    position: float
    width_paper: float
    width_decay: float
    z: complex
    residual: float


def _select(es: EigenSet, ref_vec: np.ndarray, ref_z: complex) -> int:
    one = EigenSet(np.array([ref_z]), ref_vec[:, None], np.array([ref_vec @ ref_vec]),
                   np.array([phase_rigidity(ref_vec)]), np.array([False]))
    O = _overlaps(one, es)[0]
    best = int(np.argmax(O))
    if O[best] >= AMBIGUOUS_OVERLAP:
        return best
    return int(np.argmin(np.abs(es.eigenvalues - ref_z)))


def _candidates(es: EigenSet, refs: Sequence[complex]) -> list[int]:
    return sorted({int(np.argmin(np.abs(es.eigenvalues - z))) for z in refs})


def _cusp_root(eig_at, lo: float, hi: float, refs: Sequence[complex]):
    """Minimize ``min_j |E - Re z_j(E)|`` over the branches near ``refs``.

    At an exceptional point two branches touch ``E = Re z`` with a square-root
    cusp and labels are ill-defined, so the branch-free minimum is used.
    """

    def f(E):
        es = eig_at(E)
        js = _candidates(es, refs)
        gs = [abs(E - es.eigenvalues[j].real) for j in js]
        j = js[int(np.argmin(gs))]
        return min(gs), es.eigenvalues[j]

    grid = np.linspace(lo, hi, 33)
    vals = [f(E)[0] for E in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c)[0], f(d)[0]
    for _ in range(120):
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(a)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)[0]
    E = 0.5 * (a + b)
    res, z = f(E)
    return E, z, res


def solve_fixed_points(
    spec: DoubleDotSpec,
    label: int,
    *,
    n_scan: int = 400,
    delta: float = 1e-6,
    initial: str = "basis",
    cusp_tol: float = 1e-7,
) -> list[ResonanceState]:
    """Roots of ``E - Re z_label(E)`` inside the band.

    Labels follow ``track_trajectories`` along a 400-point energy scan; each
    sign change is refined by bisection, continuing the label by overlap.
    Brackets that end on a label jump instead of a root are dropped. Around
    near-EP (ambiguous) scan steps the branch-free cusp minimum is also
    tried and kept when its residual is below ``cusp_tol``.

    Raises ``NoRootInBand`` if the trajectory never meets ``E = Re z``.
    """
    n = spec.dim
    if not 0 <= label < n:
        raise ValueError(f"label {label} out of range for {n} states")
    energies = np.linspace(-2.0 + delta, 2.0 - delta, n_scan)
    closed = closed_spectrum(spec)

    def eig_at(E):
        return eigendecompose(build_effective_hamiltonian(spec, channel_from_energy(E), closed))

    traj = track_trajectories([eig_at(E) for E in energies], energies, param_name="E",
                              initial=initial, keep_vectors=True)
    zk = traj.z[:, label]
    g = energies - zk.real
    scale = max(1.0, float(np.abs(traj.z).max()))
    roots: list[tuple[float, complex, float]] = []
    jumps: list[int] = []
    for i in range(n_scan - 1):
        if g[i] == 0.0:
            roots.append((energies[i], zk[i], 0.0))
            continue
        if g[i] * g[i + 1] >= 0.0:
            continue
        lo, hi = energies[i], energies[i + 1]
        g_lo = g[i]
        vec_lo, z_lo = traj.vectors[i][:, label], zk[i]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            es = eig_at(mid)
            j = _select(es, vec_lo, z_lo)
            g_mid = mid - es.eigenvalues[j].real
            if g_mid == 0.0:
                lo = hi = mid
                break
            if (g_mid < 0) == (g_lo < 0):
                lo, g_lo, vec_lo, z_lo = mid, g_mid, es.right_vectors[:, j], es.eigenvalues[j]
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        es = eig_at(root)
        z = es.eigenvalues[_select(es, vec_lo, z_lo)]
        res = abs(root - z.real)
        if res <= 1e-6 * scale:
            roots.append((root, z, res))
        else:
            jumps.append(i)

    windows = set(jumps) | {i - 1 for i in np.flatnonzero(traj.ambiguous)}
    for i in sorted(windows):
        lo_i, hi_i = max(i - 1, 0), min(i + 2, n_scan - 1)
        lo, hi = energies[lo_i], energies[hi_i]
        if any(lo <= r[0] <= hi for r in roots):
            continue
        E, z, res = _cusp_root(eig_at, lo, hi, zk[lo_i:hi_i + 1])
        if res < cusp_tol:
            roots.append((E, z, res))

    roots.sort(key=lambda r: r[0])
    states = []
    for root, z, res in roots:
        if states and abs(root - states[-1].position) < 1e-8:
            continue
        states.append(ResonanceState(
            index=label,
            position=float(root),
            width_paper=float(2.0 * z.imag),
            width_decay=float(-2.0 * z.imag),
            z=complex(z),
            residual=float(res),
        ))
    if not states:
        raise NoRootInBand(f"no fixed point for label {label} in (-2, 2)")
    return states


def resonance_states(spec: DoubleDotSpec, **kwargs) -> dict[int, list[ResonanceState]]:
    """Fixed points for every label; labels without roots map to ``[]``."""
    out = {}
    for k in range(spec.dim):
        try:
            out[k] = solve_fixed_points(spec, k, **kwargs)
        except NoRootInBand:
            out[k] = []
    return out

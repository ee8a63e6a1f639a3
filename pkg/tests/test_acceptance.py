"""Acceptance criteria AC1-AC10, each at its stated tolerance.

Every test appends one ``ACn PASS/FAIL: ...`` line that the terminal summary
prints under "acceptance criteria", then asserts.
"""

import math

import numpy as np

from doubledot import (
    DoubleDotSpec,
    analytic_three_state,
    build_effective_hamiltonian,
    channel_from_energy,
    closed_spectrum,
    critical_coupling,
    critical_lengths,
    critical_u_double_coincidence,
    eigendecompose,
    find_ep_numeric,
    predict_transmission_zeros,
    scattering_matrix,
    solve_fixed_points,
    transmission_curve,
    transmission_resolvent,
    transmission_spectral,
)
from doubledot.branchpoints import pair_gap

from conftest import ACCEPTANCE_LINES

FIG1 = DoubleDotSpec((1.0,), (1.0,), 2.0, -0.2, 3.0, 0.25, 0.5)
FIG3 = DoubleDotSpec((0.0,), (0.0,), 2.0, -0.2, 10.0, 0.25, 0.5)
TWO = (0.5, 1.0)
FIVE = (0.25, 1 / 3, 0.5, 0.75, 1.0)


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"AC{n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _coalescing_pair(spec, E):
    """The two eigenvalues of the symmetric 3-state model other than ``z2``."""
    ch = channel_from_energy(E)
    z = np.linalg.eigvals(build_effective_hamiltonian(spec, ch).matrix)
    z2 = spec.left_levels[0] - spec.v ** 2 * ch.phase
    rest = np.delete(z, np.argmin(np.abs(z - z2)))
    return rest[np.argsort(rest.real)]


def test_ac1_critical_coupling():
    bp = critical_coupling(FIG1)
    v, E = bp.critical_params["v"], bp.E_c
    rounded = pair_gap(FIG1, {"v": v, "E": E}, (E, E))
    ok = abs(v - 0.90135) <= 5e-4 and abs(E - 0.98473) <= 5e-4 and bp.residual < 1e-8
    record(1, ok, f"v_c={v:.6f} E_c={E:.6f}; |z1-z3| at the critical point {bp.residual:.1e} "
                  f"(at double-rounded params {rounded:.1e})")


def test_ac2_double_coincidence():
    bp = critical_u_double_coincidence(FIG1)
    u, v = bp.critical_params["u"], bp.critical_params["v"]
    spec = FIG1.with_params(u=u, v=v)
    positions = []
    for label in (0, 2):
        states = solve_fixed_points(spec, label)
        positions.append(min((s.position for s in states), key=lambda p: abs(p - 1.4)))
    dev = max(abs(p - 1.4) for p in positions)
    ok = abs(u - 0.14434) <= 5e-4 and bp.E_c == 1.4 and dev <= 1e-6
    record(2, ok, f"u_c={u:.6f} E_c={bp.E_c!r}; fixed points {positions[0]:.9f}, "
                  f"{positions[1]:.9f} (max dev {dev:.1e})")


def test_ac3_symmetric_resonant_ep():
    bp = critical_coupling(FIG3)
    v_c = bp.critical_params["v"]
    below = _coalescing_pair(FIG3.with_params(v=0.5), 0.0)
    above = _coalescing_pair(FIG3.with_params(v=1.2), 0.0)
    d_im = abs(below[0].imag - below[1].imag)
    d_re = abs(above[0].real - above[1].real)
    ok = abs(v_c - 0.84090) <= 5e-4 and bp.E_c == 0.0 and d_im < 1e-10 and d_re < 1e-10
    record(3, ok, f"v_c={v_c:.6f} E_c={bp.E_c}; v=0.5 |dIm|={d_im:.1e}; v=1.2 |dRe|={d_re:.1e}")


def test_ac4_critical_lengths():
    bps = critical_lengths(FIG1.with_params(v=1.0))
    got = [(b.critical_params["L"], b.E_c) for b in bps]
    want = [(1.4645, math.sqrt(2)), (8.5355, -math.sqrt(2))]
    ok = len(got) == 2 and all(
        abs(L - Lw) <= 5e-4 and abs(E - Ew) <= 5e-4 for (L, E), (Lw, Ew) in zip(got, want))
    record(4, ok, "; ".join(f"L_c={L:.6f} E_c={E:+.6f}" for L, E in got))


def test_ac5_perfect_filter():
    E = np.linspace(-1.5, 1.5, 3001)[1:-1]
    T = transmission_curve(FIG3.with_params(v=0.53), E)
    best = 0.0
    run_start = None
    for e, t in zip(E, T):
        if t >= 0.9:
            run_start = e if run_start is None else run_start
            best = max(best, e - run_start)
        else:
            run_start = None
    ok = T.max() >= 0.99 and best >= 0.5
    record(5, ok, f"max T={T.max():.6f}; widest T>=0.9 window {best:.3f} (grid step 1e-3)")


def test_ac6_transmission_zeros():
    worst2 = 0.0
    for L in (2.0, 5.0):
        for v in (0.25, 0.5, 0.75, 1.0):
            spec = DoubleDotSpec(TWO, TWO, 2.0, -0.25, L, 0.25, v)
            worst2 = max(worst2, transmission_resolvent(spec, 0.75).probability)
    five = DoubleDotSpec(FIVE, FIVE, 1.0, -0.125, 1.5, 0.2, 0.3)
    roots = predict_transmission_zeros(five).energies
    worst5 = max(
        transmission_resolvent(five.with_params(v=v), E).probability
        for v in (0.3, 0.8) for E in roots
    )
    ok = worst2 < 1e-8 and worst5 < 1e-8 and len(roots) == 4
    record(6, ok, f"2-level max T(3/4)={worst2:.1e}; 5-level roots "
                  f"{', '.join(f'{r:.5f}' for r in roots)} max T={worst5:.1e}")


def test_ac7_oracle_equivalence():
    specs = {
        "fig1": FIG1,
        "fig9": DoubleDotSpec(TWO, TWO, 1.5, -1 / 7, 5.0, 0.25, 0.5),
        "fig13": DoubleDotSpec(FIVE, FIVE, 1.0, -0.125, 1.5, 0.2, 0.5),
    }
    energies = np.linspace(-1.99, 1.99, 200)
    worst_t, used = 0.0, 0
    for spec in specs.values():
        closed = closed_spectrum(spec)
        for E in energies:
            es = eigendecompose(build_effective_hamiltonian(spec, channel_from_energy(E), closed))
            if es.min_rigidity <= 0.1:
                continue
            ts = transmission_spectral(spec, E, closed).amplitude
            tr = transmission_resolvent(spec, E, closed).amplitude
            worst_t = max(worst_t, abs(ts - tr))
            used += 1
    worst_z = 0.0
    for E in np.linspace(-1.98, 1.98, 50):
        ch = channel_from_energy(E)
        for v in np.linspace(0.0, 1.4, 50):
            s = FIG1.with_params(v=v)
            z = np.linalg.eigvals(build_effective_hamiltonian(s, ch).matrix)
            for za in analytic_three_state(s, ch).eigenvalues:
                worst_z = max(worst_z, np.min(np.abs(z - za)))
    ok = worst_t < 1e-10 and worst_z < 1e-10 and used > 0
    record(7, ok, f"|t_spec-t_res| max {worst_t:.1e} over {used} of 600 points; "
                  f"analytic vs numeric z max {worst_z:.1e} on 50x50")


def _random_spec(rng):
    nl, nr = rng.integers(1, 4, size=2)
    return DoubleDotSpec(
        tuple(rng.uniform(-1.5, 1.5, nl)), tuple(rng.uniform(-1.5, 1.5, nr)),
        rng.uniform(-1.0, 2.5), rng.uniform(-0.3, 0.1), rng.uniform(0.0, 10.0),
        rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5),
    )


def test_ac8_unitarity_and_symmetry():
    rng = np.random.default_rng(20261017)
    worst_s, worst_t = 0.0, 0.0
    for _ in range(1000):
        spec = _random_spec(rng)
        S = scattering_matrix(spec, rng.uniform(-1.99, 1.99))
        worst_s = max(worst_s, S.unitarity_defect())
        worst_t = max(worst_t, abs(S.t) ** 2)
    base = DoubleDotSpec((1.0,), (1.0,), 2.0, -0.2, 4.0, 0.15, 0.0, 0.0)
    grid = np.linspace(0.0, 1.0, 25)
    worst_sym = 0.0
    for E in (1.0, 0.92, 1.26):
        closed = closed_spectrum(base)
        for i, v in enumerate(grid):
            for w in grid[i + 1:]:
                a = transmission_resolvent(base.with_params(v=v, w=w), E, closed).probability
                b = transmission_resolvent(base.with_params(v=w, w=v), E, closed).probability
                worst_sym = max(worst_sym, abs(a - b))
    ok = worst_s < 1e-10 and worst_t <= 1 + 1e-10 and worst_sym < 1e-12
    record(8, ok, f"max |SS^+-I| {worst_s:.1e}, max T {worst_t:.12f} over 1000 draws; "
                  f"max |T(v,w)-T(w,v)| {worst_sym:.1e} on fig8 grids")


def test_ac9_decoupled_state():
    sweeps = []
    for spec in (FIG1, FIG3):
        for v in np.linspace(0.0, 1.4, 60):
            for E in np.linspace(-1.99, 1.99, 60):
                sweeps.append((spec.with_params(v=v), E))
    for L in np.linspace(0.0, 10.0, 100):
        for E in (-math.sqrt(2) - 0.1, -math.sqrt(2), -math.sqrt(2) + 0.1, math.sqrt(2)):
            sweeps.append((FIG1.with_params(v=1.0, L=L), E))
    worst = 0.0
    for spec, E in sweeps:
        ch = channel_from_energy(E)
        z = eigendecompose(build_effective_hamiltonian(spec, ch)).eigenvalues
        z2 = spec.left_levels[0] - spec.v ** 2 * ch.phase
        worst = max(worst, np.min(np.abs(z - z2)))
    ok = worst < 1e-13
    record(9, ok, f"max |z2 - (eps1 - v^2 e^ik)| {worst:.1e} over {len(sweeps)} sweep points")


def test_ac10_numeric_search():
    lines, ok = [], True

    def check(name, bp, expected):
        nonlocal ok
        dev = max(abs(bp.critical_params.get(k, bp.E_c) - x) for k, x in expected.items())
        ok = ok and bp.converged and dev <= 1e-6
        lines.append(f"{name} dev {dev:.1e}")

    ref = critical_coupling(FIG1)
    bp = find_ep_numeric(FIG1, {"v": (0.5, 1.3), "E": (0.3, 1.6)}, seed={"v": 0.85, "E": 0.95})
    check("AC1", bp, {"v": ref.critical_params["v"], "E": ref.E_c})

    ref = critical_u_double_coincidence(FIG1)
    bp = find_ep_numeric(FIG1, {"u": (0.05, 0.3), "v": (0.5, 1.0)}, energy=1.4,
                         seed={"u": 0.12, "v": 0.8})
    check("AC2", bp, {"u": ref.critical_params["u"], "v": ref.critical_params["v"]})

    ref = critical_coupling(FIG3)
    bp = find_ep_numeric(FIG3, {"v": (0.5, 1.2), "E": (-1.0, 1.0)}, seed={"v": 0.8, "E": 0.05})
    check("AC3", bp, {"v": ref.critical_params["v"], "E": ref.E_c})

    spec5 = FIG1.with_params(v=1.0)
    for ref, seed in zip(critical_lengths(spec5), ({"L": 1.3, "E": 1.3}, {"L": 8.7, "E": -1.3})):
        bp = find_ep_numeric(spec5, {"L": (0.0, 10.0), "E": (-1.9, 1.9)}, seed=seed)
        check(f"AC4 L={ref.critical_params['L']:.4f}", bp,
              {"L": ref.critical_params["L"], "E": ref.E_c})

    fig12 = DoubleDotSpec(TWO, TWO, 2.0, -0.25, 3.03, 0.25, 0.7)
    bp = find_ep_numeric(fig12, {"v": (0.6, 0.9), "L": (2.5, 3.5)}, energy=0.75, pair=(0, 4),
                         seed={"v": 0.7, "L": 3.2})
    L = bp.critical_params["L"]
    ok = ok and bp.converged and abs(L - 3.03) <= 0.05
    lines.append(f"fig12 outermost pair L={L:.4f} v={bp.critical_params['v']:.4f} "
                 f"gap {bp.residual:.1e}")
    record(10, ok, "; ".join(lines))

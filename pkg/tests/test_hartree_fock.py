#!/usr/bin/env python3
"""非局所交換演算子と1回解きHF補正、障壁下の裾の解析のテストスクリプト。"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from physics_modules.errors import NearSingularError, RegimeError, ValidationError
from physics_modules.exchange import ExchangeKernel, admixture_bg1, exchange_integral
from physics_modules.grid import Grid, GridFunction, inner_product
from physics_modules.hartree_fock import (ExchangeSource, apply_exchange, exchange_correction,
                                          hf_orbital_energy, nearest_eigenvalue_distance,
                                          solve_inhomogeneous, tail_analysis)
from physics_modules.potentials import (DoubleGaussianWell, GaussianWell, Harmonic, PhysicsParams,
                                        sample_potential)
from physics_modules.spectrum import (assemble_hamiltonian, reference_orbitals, resonant_orbitals,
                                      solve_lowest, symmetric_splitting)


def _harmonic(n=801, half_width=8.0):
    params = PhysicsParams()
    grid = Grid.symmetric(half_width, n)
    u = sample_potential(Harmonic(1.0), params, grid)
    h = assemble_hamiltonian(u, params)
    return u, h, solve_lowest(h, 4)


def test_apply_exchange_matches_dense_formula():
    """K·ψ_b(x) = ψ_q(x)·h·Σ V(x, x′)ψ_q(x′)ψ_b(x′)。"""
    print("[TEST] Testing exchange operator...")
    _, _, states = _harmonic(n=201)
    grid = states[0].grid
    kernel = ExchangeKernel(soft=0.5)
    src = ExchangeSource(states[3], kernel)
    q = states[3].psi.values
    b = states[0].psi.values
    dense = q * (kernel.matrix(grid.x, grid.x) @ (q * b)) * grid.h
    result = apply_exchange(src, states[0].psi)
    assert np.allclose(result.values, dense, rtol=1e-12, atol=1e-15)
    print("[TEST] Exchange operator ✓")


def test_exchange_operator_is_symmetric():
    _, _, states = _harmonic(n=301)
    src = ExchangeSource(states[2], ExchangeKernel())
    f, g = states[0].psi, states[1].psi + states[2].psi
    lhs = inner_product(f, apply_exchange(src, g))
    rhs = inner_product(apply_exchange(src, f), g)
    assert abs(lhs) > 1e-6
    assert abs(lhs - rhs) < 1e-12 * abs(lhs), f"{lhs} vs {rhs}"
    print("[TEST] Exchange operator symmetry ✓")


def test_source_must_be_normalized():
    grid = Grid.symmetric(2.0, 21)

    class Loose:
        psi = GridFunction(grid, np.ones(21))

    try:
        ExchangeSource(Loose(), ExchangeKernel())
        assert False, "Unnormalized source should raise"
    except ValidationError:
        pass
    print("[TEST] Source normalization ✓")


def test_inhomogeneous_solve_and_near_singular():
    """(H − e)δψ = f の残差が小さく、固有値上のシフトは NearSingularError。"""
    print("[TEST] Testing inhomogeneous solve...")
    _, h, states = _harmonic()
    rhs = states[0].psi * states[1].psi
    delta = solve_inhomogeneous(h, 1.2, rhs)
    residual = h.apply(delta) - 1.2 * delta - rhs
    assert np.linalg.norm(residual.values) < 1e-9 * np.linalg.norm(rhs.values)
    distance, nearest = nearest_eigenvalue_distance(h, 1.2)
    assert abs(nearest - states[1].energy) < 1e-12 and abs(distance - (nearest - 1.2)) < 1e-12
    try:
        solve_inhomogeneous(h, states[1].energy, rhs)
        assert False, "Shift on an eigenvalue should raise"
    except NearSingularError as e:
        assert e.distance < 1e-8
    print("[TEST] Inhomogeneous solve ✓")


def test_exchange_correction_projections():
    """δψ₁ は ψ₁ に直交し、固有状態 φ への射影は ⟨φ|K|ψ₁⟩/(E_φ − ε) に一致する。"""
    print("[TEST] Testing first-order exchange correction...")
    _, h, states = _harmonic()
    kernel = ExchangeKernel(soft=0.5)
    src = ExchangeSource(states[3], kernel)
    delta, epsilon = exchange_correction(h, states[0], src)
    assert abs(epsilon - hf_orbital_energy(states[0], src)) == 0.0
    assert epsilon < states[0].energy, "Exchange lowers the orbital energy for a repulsive kernel"
    assert abs(inner_product(states[0].psi, delta)) < 1e-12
    target = states[2]
    measured = inner_product(target.psi, delta)
    g = exchange_integral(states[3], states[0], target, kernel).g
    predicted = g / (target.energy - epsilon)
    assert abs(measured - predicted) <= 1e-6 * abs(predicted), f"{measured} vs {predicted}"
    print(f"[TEST] epsilon={epsilon:.6f}, projection {measured:.4e} ✓")


def test_tail_analysis_on_exact_power_law():
    """δψ = ψ₂/r² をそのまま与えると傾き −2、比は一定。"""
    print("[TEST] Testing tail analysis on a synthetic tail...")
    u, _, states = _harmonic()
    psi2 = states[3]
    r = 0.0 - u.grid.x
    synthetic = GridFunction(u.grid, np.where(r > 0.5, psi2.psi.values / np.maximum(r, 0.5) ** 2, 0.0))
    result = tail_analysis(synthetic, psi2, u, psi2.energy, centre=0.0)
    assert abs(result.slope + 2.0) < 1e-9, f"Slope {result.slope}"
    assert result.flatness < 1.0 + 1e-9
    assert result.window[0] < result.window[1] < -np.sqrt(2 * psi2.energy)
    print(f"[TEST] Synthetic tail window {result.window} ✓")


def test_tail_window_regime_errors():
    u, _, states = _harmonic()
    try:
        tail_analysis(states[0].psi, states[3], u, -1.0, centre=0.0)
        assert False, "Energy below the potential everywhere should raise"
    except RegimeError:
        pass
    try:
        tail_analysis(states[0].psi, states[3], u, states[3].energy, centre=0.0, min_distance=50.0)
        assert False, "Empty window should raise"
    except RegimeError:
        pass
    print("[TEST] Tail regime errors ✓")


def _gaussian_well_tail(n):
    params = PhysicsParams()
    grid = Grid.symmetric(20.0, n)
    u = sample_potential(GaussianWell(depth=8.0, width=1.0), params, grid)
    h = assemble_hamiltonian(u, params)
    states = solve_lowest(h, 4)
    psi1, psi2 = states[0], states[3]
    delta, _ = exchange_correction(h, psi1, ExchangeSource(psi2, ExchangeKernel(soft=0.25)))
    return tail_analysis(delta, psi2, u, psi2.energy, centre=0.0, psi1=psi1)


def test_power_law_tail_under_barrier():
    """深いガウス井戸で交換補正の裾が ψ₂/r² に従い、ψ₁ より遅く減衰する。"""
    print("[TEST] Testing under-barrier power-law tail...")
    coarse = _gaussian_well_tail(4000)
    assert abs(coarse.slope + 2.0) <= 0.3, f"Tail slope {coarse.slope}"
    assert coarse.excess_slope > 0.0, f"ln|dpsi1| - ln|psi1| must grow with r, got {coarse.excess_slope}"
    fine = _gaussian_well_tail(8001)
    assert abs(fine.slope - coarse.slope) <= 0.05, f"Slopes {coarse.slope} vs {fine.slope}"
    print(f"[TEST] Tail slope {coarse.slope:.3f} (refined {fine.slope:.3f}) ✓")


def _double_well_tail(n):
    """深い二重井戸で、二重項の非局在状態 ψ₂ を交換源にした左井戸の裾。"""
    params = PhysicsParams()
    grid = Grid.symmetric(24.0, n)
    pot = DoubleGaussianWell(8.0, 7.99, 1.0, 6.0)
    u = sample_potential(pot, params, grid)
    h = assemble_hamiltonian(u, params)
    refs = reference_orbitals(pot, params, grid)
    psi1 = solve_lowest(h, 1)[0]
    delta, _ = exchange_correction(h, psi1, ExchangeSource(refs.psi_2, ExchangeKernel(soft=0.25)))
    return tail_analysis(delta, refs.psi_2, u, refs.psi_2.energy, pot.left_center, psi1=psi1)


def test_power_law_tail_in_double_well():
    """二重井戸 + ψ₂ の交換源でも裾は ψ₂/r² に従い、刻みを半分にしても傾きは動かない。"""
    print("[TEST] Testing the double-well exchange tail...")
    coarse = _double_well_tail(6000)
    assert abs(coarse.slope + 2.0) <= 0.3, f"Tail slope {coarse.slope}"
    assert coarse.window[0] > -24.0 + 1.0, f"Window {coarse.window} runs into the box wall"
    assert coarse.excess_slope > 0.0
    fine = _double_well_tail(12001)
    assert abs(fine.slope - coarse.slope) <= 0.05, f"Slopes {coarse.slope} vs {fine.slope}"
    print(f"[TEST] Double-well tail slope {coarse.slope:.3f} (refined {fine.slope:.3f}) ✓")


def _resonant_regime():
    params = PhysicsParams()
    grid = Grid.symmetric(11.5, 1201)
    pot = DoubleGaussianWell(8.0, 6.0, 1.0, 7.0)
    return params, grid, pot, resonant_orbitals(pot, params, grid), ExchangeKernel(soft=0.25)


def test_exchange_channel_dominates_tunneling():
    """障壁の深い非対称二重井戸では |B_G1| ≥ 10³·|t1/(e1R − e1L)|。"""
    print("[TEST] Testing exchange dominance over direct tunneling...")
    params, grid, pot, refs, kernel = _resonant_regime()
    g = exchange_integral(refs.psi_2, refs.psi_1L, refs.psi_1R, kernel)
    b_g1 = admixture_bg1(g, refs.e_1L, refs.e_1R).b_g1
    t1 = symmetric_splitting(pot, params, grid).t1
    b_t1 = t1 / (refs.e_1R - refs.e_1L)
    assert abs(b_g1) >= 1e3 * abs(b_t1), f"b_g1={b_g1:.3e}, t1/(e1R-e1L)={b_t1:.3e}"
    print(f"[TEST] b_g1={b_g1:.3e} vs b_t1={b_t1:.3e} ✓")


def test_hf_correction_reproduces_admixture():
    """1回解きの δψ₁ の ψ_1R 成分は、大きさで B_G1 と25%以内で一致する。"""
    print("[TEST] Testing HF admixture against B_G1...")
    params, grid, pot, refs, kernel = _resonant_regime()
    h = assemble_hamiltonian(sample_potential(pot, params, grid), params)
    psi1 = solve_lowest(h, 1)[0]
    delta, _ = exchange_correction(h, psi1, ExchangeSource(refs.psi_2, kernel))
    measured = inner_product(refs.psi_1R.psi, delta)
    b_g1 = admixture_bg1(exchange_integral(refs.psi_2, refs.psi_1L, refs.psi_1R, kernel),
                         refs.e_1L, refs.e_1R).b_g1
    assert abs(abs(measured) - abs(b_g1)) <= 0.25 * abs(b_g1), f"<psi_1R, dpsi1>={measured:.4e} vs {b_g1:.4e}"
    print(f"[TEST] HF admixture {measured:.3e}, B_G1 {b_g1:.3e} ✓")


def main():
    print("=" * 50)
    print("Hartree-Fock Tail Test")
    print("=" * 50)

    try:
        test_apply_exchange_matches_dense_formula()
        test_exchange_operator_is_symmetric()
        test_source_must_be_normalized()
        test_inhomogeneous_solve_and_near_singular()
        test_exchange_correction_projections()
        test_tail_analysis_on_exact_power_law()
        test_tail_window_regime_errors()
        test_power_law_tail_under_barrier()
        test_power_law_tail_in_double_well()
        test_exchange_channel_dominates_tunneling()
        test_hf_correction_reproduces_admixture()

        print("\n" + "=" * 50)
        print("✅ All Hartree-Fock tests passed!")
        print("=" * 50)

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        raise


if __name__ == "__main__":
    main()

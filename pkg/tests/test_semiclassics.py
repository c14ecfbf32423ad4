#!/usr/bin/env python3
"""転回点と作用積分のテストスクリプト。"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from physics_modules.errors import RegimeError, ValidationError
from physics_modules.grid import Grid
from physics_modules.potentials import (DoubleGaussianWell, Harmonic, InvertedParabolaBarrier,
                                        PhysicsParams, sample_potential, well_minima)
from physics_modules.semiclassics import (TurningPoints, action_integral, find_turning_points,
                                          instanton_action)


def test_inverted_parabola_action():
    """逆放物線障壁の作用 S = π(U₀ − E)√(m/k) を相対 1e−3 で再現する。"""
    print("[TEST] Testing inverted parabola action...")
    params = PhysicsParams()
    pot = InvertedParabolaBarrier(u0=1.0, k=1.0)
    grid = Grid.symmetric(12.0, 4000)
    u = sample_potential(pot, params, grid)
    tp = find_turning_points(u, 0.5, (grid.x_min, grid.x_max))
    assert abs(tp.a + 1.0) < grid.h and abs(tp.b - 1.0) < grid.h, f"Turning points {tp}"
    result = action_integral(u, 0.5, tp, params)
    expected = np.pi * 0.5
    assert abs(result.action - expected) / expected < 1e-3, f"S={result.action} vs {expected}"
    assert abs(result.t_estimate - np.exp(-result.action)) < 1e-15
    assert result.log_t_estimate == -result.action
    print(f"[TEST] S={result.action:.6f} ✓")


def test_action_scales_with_mass():
    """質量を4倍にすると作用は2倍になる。"""
    pot = InvertedParabolaBarrier(u0=2.0, k=4.0)
    grid = Grid.symmetric(6.0, 3000)
    heavy = PhysicsParams(mass=4.0)
    u_light = sample_potential(pot, PhysicsParams(), grid)
    s_light = action_integral(u_light, 1.0, find_turning_points(u_light, 1.0, (-6, 6)), PhysicsParams())
    s_heavy = action_integral(u_light, 1.0, find_turning_points(u_light, 1.0, (-6, 6)), heavy)
    assert abs(s_heavy.action / s_light.action - 2.0) < 1e-12
    print("[TEST] Mass scaling ✓")


def test_well_is_not_a_barrier():
    """区間の端で U > E（井戸を囲む区間）なら RegimeError。"""
    print("[TEST] Testing regime detection...")
    params = PhysicsParams()
    grid = Grid.symmetric(6.0, 601)
    u = sample_potential(Harmonic(1.0), params, grid)
    try:
        find_turning_points(u, 0.5, (-5.0, 5.0))
        assert False, "A well bracket should raise"
    except RegimeError:
        pass
    barrier = sample_potential(InvertedParabolaBarrier(1.0, 1.0), params, grid)
    try:
        find_turning_points(barrier, 2.0, (-5.0, 5.0))
        assert False, "Energy above the barrier should raise"
    except RegimeError as e:
        assert "found 0" in str(e), f"Message should carry the count: {e}"
    print("[TEST] Regime detection ✓")


def test_turning_point_order():
    try:
        TurningPoints(a=1.0, b=0.0, energy=0.0)
        assert False, "a > b should raise"
    except ValidationError:
        pass
    print("[TEST] Turning point ordering ✓")


def test_degenerate_turning_points():
    """a == b なら作用は0。"""
    params = PhysicsParams()
    grid = Grid.symmetric(2.0, 101)
    u = sample_potential(InvertedParabolaBarrier(1.0, 1.0), params, grid)
    result = action_integral(u, 1.0, TurningPoints(0.0, 0.0, 1.0), params)
    assert result.action == 0.0 and result.t_estimate == 1.0
    print("[TEST] Degenerate turning points ✓")


def test_instanton_action_converges():
    """井戸の底を結ぶ作用は ħ に依存せず、グリッドを細かくしても変わらない。"""
    print("[TEST] Testing instanton action...")
    pot = DoubleGaussianWell(4.0, 4.0, 1.0, 4.0)
    actions = []
    for n in (2001, 4001):
        grid = Grid.symmetric(10.0, n)
        params = PhysicsParams(hbar=0.5)
        u = sample_potential(pot, params, grid)
        x_l, _, x_r, _ = well_minima(pot, u)
        actions.append(instanton_action(u, params, (x_l, x_r)).action)
    assert actions[0] > 0
    assert abs(actions[0] - actions[1]) / actions[1] < 1e-3, f"Actions {actions}"
    u = sample_potential(pot, PhysicsParams(hbar=0.25), Grid.symmetric(10.0, 4001))
    x_l, _, x_r, _ = well_minima(pot, u)
    other = instanton_action(u, PhysicsParams(hbar=0.25), (x_l, x_r))
    assert other.action == actions[1], "Action must not depend on hbar"
    print(f"[TEST] Instanton action S={actions[1]:.5f} ✓")


def main():
    print("=" * 50)
    print("Semiclassics Test")
    print("=" * 50)

    try:
        test_inverted_parabola_action()
        test_action_scales_with_mass()
        test_well_is_not_a_barrier()
        test_turning_point_order()
        test_degenerate_turning_points()
        test_instanton_action_converges()

        print("\n" + "=" * 50)
        print("✅ All semiclassics tests passed!")
        print("=" * 50)

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        raise


if __name__ == "__main__":
    main()

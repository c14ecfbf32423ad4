#!/usr/bin/env python3
"""グリッド・求積・回帰の数値基盤テストスクリプト。"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from physics_modules.errors import GridMismatchError, ValidationError
from physics_modules.grid import Grid, GridFunction, inner_product, integrate, linear_fit, norm


def test_grid_points_and_spacing():
    """内部点の配置 x_i = x_min + (i+1)h を確認。"""
    print("[TEST] Testing grid layout...")
    grid = Grid(0.0, 1.0, 9)
    assert abs(grid.h - 0.1) < 1e-15, f"Unexpected spacing: {grid.h}"
    assert np.allclose(grid.x, np.linspace(0.1, 0.9, 9)), f"Unexpected points: {grid.x}"
    assert grid.refined().n == 19
    assert abs(grid.refined().h - 0.05) < 1e-15
    print("[TEST] Grid layout ✓")


def test_grid_validation():
    """不正なグリッドは ValidationError。"""
    print("[TEST] Testing grid validation...")
    for args in [(0.0, 1.0, 2), (1.0, 0.0, 10), (0.0, np.inf, 10)]:
        try:
            Grid(*args)
            assert False, f"Grid{args} should be rejected"
        except ValidationError:
            pass
    print("[TEST] Grid validation ✓")


def test_every_other_subsampling():
    """間引いたグリッドの点が元のグリッドの奇数番目と一致する。"""
    print("[TEST] Testing every_other subsampling...")
    grid = Grid(-1.0, 1.0, 21)
    coarse, index = grid.every_other()
    assert coarse.n == 10
    assert abs(coarse.h - 2.0 * grid.h) < 1e-15
    assert np.allclose(coarse.x, grid.x[index]), "Coarse points must sit on fine points"
    restricted = GridFunction(grid, grid.x ** 2).restricted(coarse, index)
    assert restricted.grid == coarse and np.allclose(restricted.values, coarse.x ** 2)
    print("[TEST] every_other ✓")


def test_integrate_constant_and_linear():
    """境界値ゼロの台形則: f ≡ 1 で n·h、f = x on [0,1] で 0.5 − h/2。"""
    print("[TEST] Testing zero-boundary trapezoid rule...")
    grid = Grid(0.0, 1.0, 99)
    ones = GridFunction.from_callable(grid, np.ones_like)
    assert abs(integrate(ones) - grid.n * grid.h) < 1e-14
    linear = GridFunction.from_callable(grid, lambda x: x)
    expected = 0.5 - grid.h / 2.0
    assert abs(integrate(linear) - expected) < 1e-14, f"{integrate(linear)} vs {expected}"
    print("[TEST] Trapezoid rule ✓")


def test_integrate_gaussian():
    """減衰の速い関数では台形則がスペクトル精度を持つ。"""
    print("[TEST] Testing Gaussian quadrature accuracy...")
    grid = Grid.symmetric(10.0, 2001)
    f = GridFunction.from_callable(grid, lambda x: np.exp(-x * x))
    assert abs(integrate(f) - np.sqrt(np.pi)) < 1e-12, f"Gaussian integral {integrate(f)}"
    print("[TEST] Gaussian integral ✓")


def test_inner_product_and_norm():
    print("[TEST] Testing inner products...")
    grid = Grid(0.0, np.pi, 999)
    s1 = GridFunction.from_callable(grid, np.sin)
    s2 = GridFunction.from_callable(grid, lambda x: np.sin(2 * x))
    assert abs(inner_product(s1, s2)) < 1e-12, "sin x and sin 2x must be orthogonal"
    assert abs(norm(s1) ** 2 - np.pi / 2) < 1e-12
    print("[TEST] Inner product ✓")


def test_grid_mismatch():
    """異なるグリッド上の関数の組み合わせは GridMismatchError。"""
    print("[TEST] Testing grid mismatch detection...")
    a = GridFunction.zeros(Grid(0.0, 1.0, 10))
    b = GridFunction.zeros(Grid(0.0, 1.0, 11))
    for op in (lambda: inner_product(a, b), lambda: a + b, lambda: a * b):
        try:
            op()
            assert False, "Mismatched grids should raise"
        except GridMismatchError:
            pass
    print("[TEST] Grid mismatch ✓")


def test_grid_function_is_read_only():
    grid = Grid(0.0, 1.0, 5)
    f = GridFunction.zeros(grid)
    try:
        f.values[0] = 1.0
        assert False, "GridFunction values must be read-only"
    except ValueError:
        pass
    print("[TEST] Read-only values ✓")


def test_linear_fit_exact_line():
    """y = 3x − 2 は傾き3、R² = 1。"""
    print("[TEST] Testing linear fit...")
    xs = np.linspace(0.0, 5.0, 12)
    fit = linear_fit(xs, 3.0 * xs - 2.0)
    assert abs(fit.slope - 3.0) < 1e-12
    assert abs(fit.intercept + 2.0) < 1e-12
    assert fit.r2 > 1.0 - 1e-12
    flat = linear_fit(xs, np.full_like(xs, 4.0))
    assert flat.r2 == 1.0 and abs(flat.slope) < 1e-14
    print("[TEST] Linear fit ✓")


def test_linear_fit_noisy_r2_range():
    rng = np.random.default_rng(7)
    xs = np.linspace(0.0, 1.0, 50)
    fit = linear_fit(xs, rng.normal(size=50))
    assert 0.0 <= fit.r2 <= 1.0
    print("[TEST] R² range ✓")


def test_linear_fit_validation():
    print("[TEST] Testing linear fit validation...")
    cases = [([1.0, 2.0], [1.0, 2.0]), ([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]),
             ([1.0, 2.0, 3.0], [1.0, np.nan, 3.0]), ([1.0, 2.0, 3.0], [1.0, 2.0])]
    for xs, ys in cases:
        try:
            linear_fit(xs, ys)
            assert False, f"linear_fit({xs}, {ys}) should raise"
        except ValidationError:
            pass
    print("[TEST] Linear fit validation ✓")


def main():
    print("=" * 50)
    print("Grid and Quadrature Test")
    print("=" * 50)

    try:
        test_grid_points_and_spacing()
        test_grid_validation()
        test_every_other_subsampling()
        test_integrate_constant_and_linear()
        test_integrate_gaussian()
        test_inner_product_and_norm()
        test_grid_mismatch()
        test_grid_function_is_read_only()
        test_linear_fit_exact_line()
        test_linear_fit_noisy_r2_range()
        test_linear_fit_validation()

        print("\n" + "=" * 50)
        print("✅ All grid tests passed!")
        print("=" * 50)

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        raise


if __name__ == "__main__":
    main()

"""転回点と障壁下の作用積分 S = ∫|p|dx、トンネル振幅の指数評価 exp(−S/ħ)。"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import RegimeError, ValidationError


@dataclass(frozen=True)
class TurningPoints:
    """古典的転回点 a ≤ b（区間 (a, b) で U > E）。"""

    a: float
    b: float
    energy: float

    def __post_init__(self):
        if not self.a <= self.b:
            raise ValidationError(f"turning points must satisfy a <= b, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class WkbResult:
    action: float
    t_estimate: float
    turning: TurningPoints
    hbar: float = 1.0

    def __post_init__(self):
        if self.action < 0:
            raise ValidationError(f"action must be non-negative, got {self.action}")

    @property
    def log_t_estimate(self):
        return -self.action / self.hbar

    def to_dict(self):
        return {'action': self.action, 't_estimate': self.t_estimate,
                'log_t_estimate': self.log_t_estimate,
                'a': self.turning.a, 'b': self.turning.b, 'energy': self.turning.energy}


def find_turning_points(u, e, bracket):
    """区間内で U − E の符号が変わる2点を求める。

    符号変化を挟む隣接グリッド点の間を線形補間して根を求める（誤差は h/2 以内）。

    Args:
        u (GridFunction): ポテンシャル
        e (float): エネルギー
        bracket (tuple): 探索区間 (x_lo, x_hi)

    Returns:
        TurningPoints: 左右の転回点

    Raises:
        RegimeError: 符号変化が2回でない場合（回数を含める）、または区間の内側が障壁でない場合
    """
    index = u.grid.index_range(*bracket)
    if len(index) < 2:
        raise ValidationError(f"bracket {bracket} contains fewer than two grid points")
    x = u.grid.x[index]
    g = u.values[index] - e
    above = g > 0.0
    changes = np.nonzero(above[1:] != above[:-1])[0]
    if len(changes) != 2:
        raise RegimeError(
            f"expected exactly 2 sign changes of U - E in {bracket} at E={e:.6g}, found {len(changes)}")
    if above[0]:
        raise RegimeError("U - E is positive at the bracket edges: bracket encloses a well, not a barrier")

    roots = []
    for i in changes:
        roots.append(x[i] - g[i] * (x[i + 1] - x[i]) / (g[i + 1] - g[i]))
    return TurningPoints(a=float(roots[0]), b=float(roots[1]), energy=float(e))


def _momentum(g, mass):
    return np.sqrt(2.0 * mass * np.maximum(g, 0.0))


def action_integral(u, e, tp, params):
    """障壁下の作用 S = ∫ₐᵇ √(2m(U − E)) dx を求める。

    内部のグリッド点は台形則で積分する。転回点を含む両端のセル [a, x₁], [x_k, b] では
    U − E をゼロから線形に立ち上がるとみなし、解析積分 (2/3)·d·|p(x_端)| を用いる
    （d はセル長）。区間内にグリッド点がない場合は中点での値を使う。

    Args:
        u (GridFunction): ポテンシャル
        e (float): エネルギー
        tp (TurningPoints): 転回点
        params (PhysicsParams): 物理定数

    Returns:
        WkbResult: 作用と exp(−S/ħ)
    """
    grid = u.grid
    x = grid.x
    inside = np.nonzero((x > tp.a) & (x < tp.b))[0]
    if tp.b == tp.a:
        action = 0.0
    elif len(inside) == 0:
        mid = 0.5 * (tp.a + tp.b)
        g_mid = float(np.interp(mid, x, u.values)) - e
        action = (2.0 / 3.0) * (tp.b - tp.a) * float(_momentum(g_mid, params.mass))
    else:
        xs = x[inside]
        p = _momentum(u.values[inside] - e, params.mass)
        action = float(integrate.trapezoid(p, xs)) if len(xs) > 1 else 0.0
        action += (2.0 / 3.0) * (xs[0] - tp.a) * p[0]
        action += (2.0 / 3.0) * (tp.b - xs[-1]) * p[-1]
    action = float(action)
    return WkbResult(action=action, t_estimate=float(np.exp(-action / params.hbar)),
                     turning=tp, hbar=params.hbar)


def instanton_action(u, params, between):
    """2つの井戸の底を結ぶ経路の作用（井戸の底のエネルギーで評価）。

    二重項分裂の ħ → 0 での指数は ħ に依存しないこの値で決まる。
    非対称井戸では浅い方の底をエネルギーとする。

    Args:
        u (GridFunction): ポテンシャル
        params (PhysicsParams): 物理定数
        between (tuple): 左右の井戸の最小点 (x_L, x_R)

    Returns:
        WkbResult: 転回点は井戸の底
    """
    index = u.grid.index_range(*between)
    if len(index) < 3:
        raise ValidationError(f"interval {between} holds fewer than three grid points")
    xs = u.grid.x[index]
    values = u.values[index]
    e = float(max(values[0], values[-1]))
    action = float(integrate.trapezoid(_momentum(values - e, params.mass), xs))
    tp = TurningPoints(a=float(xs[0]), b=float(xs[-1]), energy=e)
    return WkbResult(action=action, t_estimate=float(np.exp(-action / params.hbar)),
                     turning=tp, hbar=params.hbar)

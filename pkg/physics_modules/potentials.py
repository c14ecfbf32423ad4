"""1次元ポテンシャル U(x) の宣言的な定義とグリッドへのサンプリング。

* PhysicsParams: ħ, m, e² の物理定数
* DoubleGaussianWell / GaussianWell / Harmonic / SoftCoulombWell /
  InvertedParabolaBarrier / Zero: ポテンシャルの各バリアント
* sample_potential: ポテンシャルをグリッド上で評価
* single_well_spec: 二重井戸から片側の孤立井戸を取り出す
* barrier_top: 区間内のポテンシャル最大点を探す
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import GridFunction


def _require_positive(owner, **values):
    for name, value in values.items():
        if not (np.isfinite(value) and value > 0):
            raise ValidationError(f"{owner}.{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class PhysicsParams:
    """物理定数。自然単位系の既定値は m = 1, e² = 1 で、ħ が主な走査パラメータ。"""

    hbar: float = 1.0
    mass: float = 1.0
    e2: float = 1.0

    def __post_init__(self):
        _require_positive('physics', hbar=self.hbar, mass=self.mass, e2=self.e2)

    def with_hbar(self, hbar):
        return PhysicsParams(hbar=hbar, mass=self.mass, e2=self.e2)


@dataclass(frozen=True)
class DoubleGaussianWell:
    """左右のガウス井戸 U(x) = −D_L·g(x + l/2) − D_R·g(x − l/2)。"""

    depth_left: float
    depth_right: float
    width: float
    separation: float
    kind = 'double_gaussian'

    def __post_init__(self):
        _require_positive('potential', depth_left=self.depth_left,
                          depth_right=self.depth_right, width=self.width)
        if not (np.isfinite(self.separation) and self.separation >= 0):
            raise ValidationError(
                f"potential.separation must be >= 0, got {self.separation}")

    @property
    def left_center(self):
        return -0.5 * self.separation

    @property
    def right_center(self):
        return 0.5 * self.separation

    def evaluate(self, x, params):
        s2 = 2.0 * self.width ** 2
        return (-self.depth_left * np.exp(-(x - self.left_center) ** 2 / s2)
                - self.depth_right * np.exp(-(x - self.right_center) ** 2 / s2))


@dataclass(frozen=True)
class GaussianWell:
    """孤立した単一ガウス井戸 U(x) = −D·exp(−(x − c)²/(2w²))。"""

    depth: float
    width: float
    center: float = 0.0
    kind = 'gaussian'

    def __post_init__(self):
        _require_positive('potential', depth=self.depth, width=self.width)

    def evaluate(self, x, params):
        return -self.depth * np.exp(-(x - self.center) ** 2 / (2.0 * self.width ** 2))


@dataclass(frozen=True)
class Harmonic:
    omega: float
    center: float = 0.0
    kind = 'harmonic'

    def __post_init__(self):
        _require_positive('potential', omega=self.omega)

    def evaluate(self, x, params):
        return 0.5 * params.mass * self.omega ** 2 * (x - self.center) ** 2


@dataclass(frozen=True)
class SoftCoulombWell:
    """ソフトコアのクーロン井戸 U(x) = −z/√((x − c)² + a²)。

    a → 0 の特異極限はボーア半径 a_B = ħ²/(m·z) を与えるので、
    ケース3の走査ではコアを a_B に比例させる。
    """

    z: float
    core: float
    center: float = 0.0
    kind = 'soft_coulomb'

    def __post_init__(self):
        _require_positive('potential', z=self.z, core=self.core)

    def evaluate(self, x, params):
        return -self.z / np.sqrt((x - self.center) ** 2 + self.core ** 2)

    @staticmethod
    def bohr_radius(z, params):
        return params.hbar ** 2 / (params.mass * z)


@dataclass(frozen=True)
class InvertedParabolaBarrier:
    u0: float
    k: float
    kind = 'inverted_parabola'

    def __post_init__(self):
        _require_positive('potential', k=self.k)
        if not np.isfinite(self.u0):
            raise ValidationError(f"potential.u0 must be finite, got {self.u0}")

    def evaluate(self, x, params):
        return self.u0 - 0.5 * self.k * x ** 2


@dataclass(frozen=True)
class Zero:
    """箱の中の自由粒子（壁はグリッド境界）。"""

    kind = 'zero'

    def evaluate(self, x, params):
        return np.zeros_like(x, dtype=np.float64)


POTENTIAL_KINDS = {
    cls.kind: cls for cls in
    (DoubleGaussianWell, GaussianWell, Harmonic, SoftCoulombWell, InvertedParabolaBarrier, Zero)
}


def sample_potential(spec, params, grid):
    """ポテンシャルを各グリッド点で評価する。

    Args:
        spec: ポテンシャルのバリアント
        params (PhysicsParams): 物理定数
        grid (Grid): 評価するグリッド

    Returns:
        GridFunction: U(x_i)
    """
    return GridFunction(grid, spec.evaluate(grid.x, params))


def single_well_spec(spec, side):
    """二重井戸から片側の井戸だけを残した孤立井戸を返す。

    Args:
        spec (DoubleGaussianWell): 二重井戸
        side (str): 'L' または 'R'

    Returns:
        GaussianWell: 指定側のガウス井戸

    Raises:
        ValidationError: 二重井戸以外、または side が不正な場合
    """
    if not isinstance(spec, DoubleGaussianWell):
        raise ValidationError(
            f"single_well_spec requires a double_gaussian potential, got {getattr(spec, 'kind', spec)}")
    if side == 'L':
        return GaussianWell(depth=spec.depth_left, width=spec.width, center=spec.left_center)
    if side == 'R':
        return GaussianWell(depth=spec.depth_right, width=spec.width, center=spec.right_center)
    raise ValidationError(f"side must be 'L' or 'R', got {side!r}")


def barrier_top(u, between):
    """区間内でポテンシャルが最大となるグリッド点を返す。

    平坦な最大値では最も左の点を採用する。

    Args:
        u (GridFunction): サンプルされたポテンシャル
        between (tuple): (a, b) 探索区間

    Returns:
        tuple: (x_at_max, u_max)

    Raises:
        ValidationError: 区間内にグリッド点がない場合
    """
    a, b = between
    index = u.grid.index_range(a, b)
    if len(index) == 0:
        raise ValidationError(f"barrier search interval [{a}, {b}] contains no grid points")
    local = int(np.argmax(u.values[index]))
    i = int(index[local])
    return float(u.grid.x[i]), float(u.values[i])


def well_minima(spec, u):
    """二重井戸の左右の最小点を (x_L, u_L, x_R, u_R) で返す。"""
    x = u.grid.x
    mid = 0.5 * (spec.left_center + spec.right_center)
    left = np.nonzero(x < mid)[0]
    right = np.nonzero(x >= mid)[0]
    if len(left) == 0 or len(right) == 0:
        raise ValidationError("grid does not cover both wells")
    il = int(left[np.argmin(u.values[left])])
    ir = int(right[np.argmin(u.values[right])])
    return float(x[il]), float(u.values[il]), float(x[ir]), float(u.values[ir])


def default_half_width(spec):
    """箱の半幅の既定値。二重井戸では l/2 + 8w（無限遠での減衰を模す）。"""
    if isinstance(spec, DoubleGaussianWell):
        return 0.5 * spec.separation + 8.0 * spec.width
    if isinstance(spec, (GaussianWell, Harmonic, SoftCoulombWell)):
        return abs(getattr(spec, 'center', 0.0)) + 12.0
    return 12.0

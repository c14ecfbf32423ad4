"""一様グリッド上の実関数と、求積・内積・回帰を提供する数値基盤モジュール。

* Grid: Dirichlet境界を持つ一様1次元メッシュ
* GridFunction: グリッド上でサンプルされた実関数
* FitResult: 線形回帰の結果
* integrate: 境界値ゼロの台形則による積分
* inner_product: 同一グリッド上の2関数の内積
* linear_fit: 最小二乗による直線フィット
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, ValidationError


@dataclass(frozen=True)
class Grid:
    """内部点 n 個からなる一様グリッド。

    x_min と x_max は境界（値ゼロ）で、内部点 i は x_min + (i+1)·h に置かれる。

    Args:
        x_min (float): 左境界
        x_max (float): 右境界
        n (int): 内部点の数
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError(f"grid.n must be an integer >= 3, got {self.n}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValidationError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise ValidationError(
                f"grid.x_max ({self.x_max}) must exceed grid.x_min ({self.x_min})")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'x_min', float(self.x_min))
        object.__setattr__(self, 'x_max', float(self.x_max))

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n + 1)

    @property
    def x(self):
        """内部点の座標配列を返す。"""
        return self.x_min + self.h * np.arange(1, self.n + 1, dtype=np.float64)

    @classmethod
    def symmetric(cls, half_width, n):
        return cls(-float(half_width), float(half_width), n)

    def refined(self):
        """刻み幅を半分にしたグリッド（n → 2n+1）を返す。旧点は奇数番目に乗る。"""
        return Grid(self.x_min, self.x_max, 2 * self.n + 1)

    def every_other(self):
        """奇数番目の点だけを残した刻み幅 2h のグリッドを返す。

        n が偶数のときは最後の点を落とし、右境界が h だけ内側に寄る。

        Returns:
            tuple: (粗いグリッド, 元の配列から値を取り出すインデックス)
        """
        n_coarse = (self.n - 1) // 2
        if n_coarse < 3:
            raise ValidationError(f"grid with n={self.n} is too coarse to subsample")
        index = np.arange(1, 2 * n_coarse, 2)
        coarse = Grid(self.x_min, self.x_min + (n_coarse + 1) * 2.0 * self.h, n_coarse)
        return coarse, index

    def index_range(self, a, b):
        """区間 [a, b] に含まれる内部点のインデックス配列を返す。"""
        x = self.x
        return np.nonzero((x >= a) & (x <= b))[0]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """グリッド上でサンプルされた実数値関数（読み取り専用）。"""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.n,):
            raise ValidationError(
                f"values length {values.shape} does not match grid.n={self.grid.n}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid function contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_callable(cls, grid, func):
        return cls(grid, func(grid.x))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n))

    def _check(self, other):
        if isinstance(other, GridFunction) and other.grid != self.grid:
            raise GridMismatchError(
                f"incompatible discretizations: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        rhs = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + rhs)

    def __sub__(self, other):
        self._check(other)
        rhs = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values - rhs)

    def __mul__(self, other):
        self._check(other)
        rhs = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values * rhs)

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __truediv__(self, scalar):
        return GridFunction(self.grid, self.values / scalar)

    def reflected(self):
        """x → x_min + x_max − x の鏡映を返す（対称グリッドでは x → −x）。"""
        return GridFunction(self.grid, self.values[::-1])

    def restricted(self, grid, index):
        """インデックスで選んだ値を別のグリッド上の関数として返す（every_other と組で使う）。"""
        return GridFunction(grid, self.values[index])


@dataclass(frozen=True)
class FitResult:
    """直線フィット y = slope·x + intercept の結果。

    Args:
        slope (float): 傾き
        intercept (float): 切片
        r2 (float): 決定係数（[0, 1]）
        axes (str): 適用した軸変換の説明（例 "ln y vs 1/x"）
    """

    slope: float
    intercept: float
    r2: float
    axes: str = "y vs x"

    def to_dict(self):
        return {'slope': self.slope, 'intercept': self.intercept,
                'r2': self.r2, 'axes': self.axes}


def integrate(f):
    """境界値ゼロの台形則で ∫f dx を計算する。

    両端の境界点の値はゼロとみなすため、結果は h·Σf_i に一致する。
    Dirichlet固有ベクトルの規格化・直交性と離散的に整合する。

    Args:
        f (GridFunction): 被積分関数

    Returns:
        float: 積分値
    """
    return float(f.grid.h * np.sum(f.values))


def inner_product(f, g):
    """同一グリッド上の2関数の内積 ∫f·g dx を返す。

    Raises:
        GridMismatchError: グリッドが異なる場合
    """
    if f.grid != g.grid:
        raise GridMismatchError(
            f"incompatible discretizations: {f.grid} vs {g.grid}")
    return float(f.grid.h * np.dot(f.values, g.values))


def norm(f):
    return float(np.sqrt(inner_product(f, f)))


def linear_fit(xs, ys, axes="y vs x"):
    """最小二乗法で直線をフィットする。

    残差も分散もゼロ（ys が定数）の場合、R² は慣例として1とする。

    Args:
        xs (array-like): 説明変数（3点以上）
        ys (array-like): 目的変数（xs と同じ長さ）
        axes (str): 軸変換の説明

    Returns:
        FitResult: 傾き・切片・R²

    Raises:
        ValidationError: 点数不足、長さ不一致、xs が全て等しい場合
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValidationError(f"xs and ys must be 1D arrays of equal length, got {xs.shape} and {ys.shape}")
    if len(xs) < 3:
        raise ValidationError(f"linear fit needs at least 3 points, got {len(xs)}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValidationError("linear fit received non-finite data")
    if np.ptp(xs) == 0.0:
        raise ValidationError("linear fit is degenerate: all xs are equal")

    design = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    slope, intercept = float(slope), float(intercept)

    residual = ys - (slope * xs + intercept)
    ss_res = float(np.dot(residual, residual))
    centered = ys - np.mean(ys)
    ss_tot = float(np.dot(centered, centered))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope=slope, intercept=intercept, r2=r2, axes=axes)

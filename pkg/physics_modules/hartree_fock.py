"""非局所交換演算子 K と、1回解きのHartree-Fock補正、障壁下の裾の解析。

HF方程式は (H − ε)ψ₁ = Kψ₁、K(x) = ψ_q(x)·∫ψ_q(x′)V(x,x′)ψ_b(x′)dx′。
直接項（Hartree項）は平均場ポテンシャル U に含めるので、ここには現れない。
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .console import log
from .errors import GridMismatchError, NearSingularError, NumericalError, RegimeError, ValidationError
from .grid import FitResult, GridFunction, inner_product, integrate, linear_fit
from .spectrum import sturm_count


@dataclass(frozen=True)
class ExchangeSource:
    """交換演算子の中の占有軌道（このモデルでは ψ₂ のみ）と相互作用核。"""

    psi_q: object
    kernel: object

    def __post_init__(self):
        weight = integrate(self.psi_q.psi * self.psi_q.psi)
        if abs(weight - 1.0) > 1e-10:
            raise ValidationError(f"exchange source orbital is not normalized ({weight:.12f})")


@dataclass(frozen=True, eq=False)
class HfTailResult:
    """障壁下の裾 δψ₁ ∝ ψ₂/r² の検証結果。

    Args:
        delta_psi (GridFunction): 交換による補正 δψ₁
        window (tuple): 解析した区間 (x_lo, x_hi)
        ratio_series (np.ndarray): (2, k) 配列 [x, δψ₁·r²/ψ₂]
        flatness (float): |比| の最大/最小
        fit (FitResult): ln|δψ₁/ψ₂| vs ln r
        excess_slope (float, optional): ln|δψ₁| − ln|ψ₁| の r に対する傾き
    """

    delta_psi: GridFunction
    window: tuple
    ratio_series: np.ndarray = field(repr=False)
    flatness: float
    fit: FitResult
    excess_slope: Optional[float] = None

    @property
    def slope(self):
        return self.fit.slope

    def to_dict(self):
        return {'window': list(self.window), 'flatness': self.flatness,
                'slope': self.fit.slope, 'r2': self.fit.r2,
                'excess_slope': self.excess_slope, 'points': int(self.ratio_series.shape[1])}


def apply_exchange(src, psi_b):
    """K·ψ_b(x) = ψ_q(x)·∫ψ_q(x′)V(x,x′)ψ_b(x′)dx′ を返す。

    Raises:
        GridMismatchError: グリッドが異なる場合
    """
    grid = src.psi_q.psi.grid
    if psi_b.grid != grid:
        raise GridMismatchError(f"incompatible discretizations: {psi_b.grid} vs {grid}")
    q = src.psi_q.psi.values
    phi = src.kernel.potential(grid.x, grid.x, q * psi_b.values, grid.h)
    return GridFunction(grid, q * phi)


def _energy_scale(h):
    length = h.grid.x_max - h.grid.x_min
    params = h.params
    if params is None:
        return 1.0
    return params.hbar ** 2 / (params.mass * length * length)


def nearest_eigenvalue_distance(h, e):
    """シフト e に最も近い固有値までの距離と、その固有値を返す。"""
    below = sturm_count(h, e)
    lo = max(below - 1, 0)
    hi = min(below, h.grid.n - 1)
    nearby = linalg.eigh_tridiagonal(
        h.diag, h.offdiag, eigvals_only=True, select='i', select_range=(lo, hi),
        lapack_driver='stebz', tol=2.0 * np.finfo(np.float64).tiny)
    k = int(np.argmin(np.abs(nearby - e)))
    return float(abs(nearby[k] - e)), float(nearby[k])


def solve_inhomogeneous(h, e, rhs):
    """(H − e)·δψ = rhs を三重対角の消去法で解く。

    Sturm列で e の両隣の固有値を求め、最近接の距離が 1e−8·(エネルギースケール)
    以下なら特異に近いとみなす。

    Raises:
        NearSingularError: e が固有値に近すぎる場合（距離を保持する）
        NumericalError: 後退誤差が 1e−10 を超えた場合
    """
    if rhs.grid != h.grid:
        raise GridMismatchError(f"incompatible discretizations: {rhs.grid} vs {h.grid}")
    distance, nearest = nearest_eigenvalue_distance(h, e)
    scale = max(abs(e), abs(nearest), _energy_scale(h))
    if distance <= 1e-8 * scale:
        raise NearSingularError(
            f"shift {e:.12g} is too close to eigenvalue {nearest:.12g}", distance)

    solution = linalg.solve_banded((1, 1), h.banded(e), np.array(rhs.values))
    delta = GridFunction(h.grid, solution)
    residual = h.apply(delta) - e * delta - rhs
    r_norm = float(np.linalg.norm(residual.values))
    bound = 1e-10 * (float(np.linalg.norm(rhs.values))
                     + (h.norm_inf + abs(e)) * float(np.linalg.norm(solution)))
    if r_norm > bound:
        raise NumericalError(f"inhomogeneous solve residual {r_norm:.3e} exceeds {bound:.3e}")
    return delta


def hf_orbital_energy(psi1, src):
    """1回解きのHF軌道エネルギー ε = E₁ − ⟨ψ₁|K|ψ₁⟩。"""
    return float(psi1.energy - inner_product(psi1.psi, apply_exchange(src, psi1.psi)))


def exchange_correction(h, psi1, src):
    """交換項による ψ₁ の1次補正 δψ₁ を求める。

    (H − ε)ψ_b = Kψ₁ を解き、ψ₁ 成分を射影で除いたものを δψ₁ とする。

    Returns:
        tuple: (δψ₁, ε)
    """
    epsilon = hf_orbital_energy(psi1, src)
    source = apply_exchange(src, psi1.psi)
    psi_b = solve_inhomogeneous(h, epsilon, source)
    delta = psi_b - inner_product(psi1.psi, psi_b) * psi1.psi
    log('HF', f"epsilon={epsilon:.10g}, <psi1|K|psi1>={psi1.energy - epsilon:.4e}")
    return delta, epsilon


def tail_window(u, e, psi2, centre, min_distance=0.0):
    """左の転回点より2格子外側から、|ψ₂| が最大値の1e−6倍に落ちるまでの区間。

    Returns:
        np.ndarray: 窓に含まれるインデックス（昇順）
    """
    grid = u.grid
    allowed = np.nonzero(u.values <= e)[0]
    if len(allowed) == 0:
        raise RegimeError(f"energy {e:.6g} lies below the potential everywhere; no turning point")
    start = int(allowed[0]) - 2
    floor = max(1e-6 * float(np.max(np.abs(psi2.values))), 1e3 * np.finfo(np.float64).eps)
    stop = start
    while stop >= 0 and abs(psi2.values[stop]) > floor:
        stop -= 1
    index = np.arange(stop + 1, start + 1)
    if len(index):
        index = index[(centre - grid.x[index]) >= min_distance]
    return index


def tail_analysis(delta_psi, psi2, u, e, centre, min_distance=0.0, psi1=None):
    """δψ₁(x) ∝ ψ₂(x)/r² を障壁下の窓で検証する（r は左井戸中心からの距離）。

    Args:
        delta_psi (GridFunction): 交換補正
        psi2 (Orbital): 交換源の軌道
        u (GridFunction): ポテンシャル
        e (float): 窓を決めるエネルギー（窓全体で U > e）
        centre (float): 左井戸の中心
        min_distance (float): 窓の中心側の端の最小距離
        psi1 (Orbital, optional): 指定すると ln|δψ₁| − ln|ψ₁| の傾きも求める

    Raises:
        RegimeError: 窓が3点未満の場合
    """
    if delta_psi.grid != psi2.psi.grid or u.grid != delta_psi.grid:
        raise GridMismatchError("tail analysis inputs live on different grids")
    index = tail_window(u, e, psi2.psi, centre, min_distance)
    if len(index) < 3:
        raise RegimeError(f"forbidden-region tail window is empty ({len(index)} points)")

    x = u.grid.x[index]
    r = centre - x
    q = psi2.psi.values[index]
    d = delta_psi.values[index]
    ratio = d * r * r / q
    magnitude = np.abs(ratio)
    flatness = float(np.max(magnitude) / np.min(magnitude)) if np.min(magnitude) > 0 else float('inf')
    fit = linear_fit(np.log(r), np.log(np.abs(d / q)), axes="ln|dpsi1/psi2| vs ln r")

    excess = None
    if psi1 is not None:
        excess_values = np.log(np.abs(d)) - np.log(np.abs(psi1.psi.values[index]))
        excess = linear_fit(r, excess_values, axes="ln|dpsi1|-ln|psi1| vs r").slope

    log('HF', f"tail window [{x[0]:.4g}, {x[-1]:.4g}] with {len(index)} points: "
              f"slope={fit.slope:.4f}, flatness={flatness:.4g}")
    return HfTailResult(delta_psi=delta_psi, window=(float(x[0]), float(x[-1])),
                        ratio_series=np.vstack([x, ratio]), flatness=flatness,
                        fit=fit, excess_slope=excess)

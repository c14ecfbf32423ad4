"""2体交換の計算: 交換積分 G、交換による混合振幅 B_G1、多重極展開の先頭項。

* ExchangeKernel: ソフトコアのクーロン核 V(x, x′) = e²/√((x − x′)² + b²)
* exchange_integral: G = ∬ ψ₂ψ_1L V ψ_1R ψ₂ をブロック化した二重台形則で計算
* plane_wave_exchange: ψ₂ が進行平面波のときの G（余弦・正弦成分の和）
* admixture_bg1: B_G1 = G/(E_1L − E_1R)
* multipole_leading: 1/l 項（単極子）が直交性で消えることの確認
* exchange_potential / exchange_potential_decay: 遷移密度の作るポテンシャルとその減衰則
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDetuningError, GridMismatchError, ValidationError
from .grid import inner_product, linear_fit

_ROW_BLOCK = 256
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class ExchangeKernel:
    """1次元に正則化したクーロン核。

    Args:
        e2 (float): 相互作用の強さ e²（0 で相互作用なし）
        soft (float): ソフトコア長 b > 0
    """

    e2: float = 1.0
    soft: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.soft) and self.soft > 0):
            raise ValidationError(f"kernel.soft must be strictly positive, got {self.soft}")
        if not (np.isfinite(self.e2) and self.e2 >= 0):
            raise ValidationError(f"kernel.e2 must be non-negative, got {self.e2}")

    def evaluate(self, dx):
        return self.e2 / np.sqrt(dx * dx + self.soft * self.soft)

    def matrix(self, targets, sources):
        return self.evaluate(targets[:, None] - sources[None, :])

    def potential(self, targets, sources, weights, h):
        """φ(t_i) = h·Σ_j V(t_i, x_j)·w_j を行ブロックごとに固定順で計算する。"""
        targets = np.asarray(targets, dtype=np.float64)
        out = np.empty(len(targets))
        for start in range(0, len(targets), _ROW_BLOCK):
            stop = min(start + _ROW_BLOCK, len(targets))
            out[start:stop] = self.matrix(targets[start:stop], sources) @ weights
        return h * out


@dataclass(frozen=True)
class ExchangeIntegralResult:
    g: float
    est_error: float
    orbitals_used: tuple = ()

    def __post_init__(self):
        if not self.est_error >= 0:
            raise ValidationError(f"est_error must be non-negative, got {self.est_error}")

    def to_dict(self):
        return {'G': self.g, 'est_error': self.est_error, 'orbitals': list(self.orbitals_used)}


@dataclass(frozen=True)
class AdmixtureResult:
    b_g1: float
    g: float
    detuning: float

    def to_dict(self):
        return {'b_g1': self.b_g1, 'G': self.g, 'detuning': self.detuning}


class MultipoleResult(NamedTuple):
    monopole: float
    residual_ratio: float
    g: float


def _same_grid(*orbitals):
    grid = orbitals[0].psi.grid
    for orbital in orbitals[1:]:
        if orbital.psi.grid != grid:
            raise GridMismatchError(
                f"incompatible discretizations: {orbital.psi.grid} vs {grid}")
    return grid


def _bilinear(x, a, b, kernel, h):
    """h²·Σ_ij a_i V_ij b_j と、その丸め誤差の上界に使う h²·Σ|a||V||b|。"""
    value = float(np.dot(a, kernel.potential(x, x, b, h)) * h)
    magnitude = float(np.dot(np.abs(a), kernel.potential(x, x, np.abs(b), h)) * h)
    return value, magnitude


def exchange_integral(psi2, psi1L, psi1R, kernel):
    """交換積分 G(2,1L;1R,2) = ∬ ψ₂(x)ψ_1L(x) V(x,x′) ψ_1R(x′)ψ₂(x′) dx dx′。

    誤差評価は1点おきに間引いた刻み 2h の和との差 |G_h − G_2h|/3 に、
    丸め誤差の下限 n·ε·h²Σ|a||V||b| を加えたもの。

    Args:
        psi2 (Orbital): 非局在軌道 ψ₂
        psi1L (Orbital): 左井戸の軌道
        psi1R (Orbital): 右井戸の軌道
        kernel (ExchangeKernel): 相互作用核

    Returns:
        ExchangeIntegralResult: G と誤差評価

    Raises:
        GridMismatchError: 軌道のグリッドが異なる場合
    """
    _same_grid(psi2, psi1L, psi1R)
    g, est_error = _density_exchange(psi2.psi * psi1L.psi, psi1R.psi * psi2.psi, kernel)
    return ExchangeIntegralResult(
        g=g, est_error=est_error, orbitals_used=(psi2.label, psi1L.label, psi1R.label))


def _density_exchange(a, b, kernel):
    """遷移密度 a, b の相互作用と、刻み 2h との差による誤差評価。"""
    grid = a.grid
    g_fine, magnitude = _bilinear(grid.x, a.values, b.values, kernel, grid.h)
    coarse, index = grid.every_other()
    g_coarse, _ = _bilinear(coarse.x, a.restricted(coarse, index).values,
                            b.restricted(coarse, index).values, kernel, coarse.h)
    est_error = abs(g_fine - g_coarse) / 3.0 + grid.n * _EPS * magnitude
    return g_fine, float(est_error)


def plane_wave_exchange(psi1, envelope, wavenumber, kernel):
    """ψ₂ = envelope(x)·exp(i·k·x) のときの G(2,1;1,2)。

    ψ₂*(x)ψ₂(x′) の虚部は x ↔ x′ で反対称なので積分で消え、
    G は余弦成分と正弦成分それぞれの交換の和になる。envelope は ∫envelope² dx = 1 とする。
    |ψ₂|² に振動がないので、k を変えても ψ₂ の規格化は変わらない。

    Raises:
        GridMismatchError: envelope と ψ₁ のグリッドが異なる場合
    """
    if envelope.grid != psi1.psi.grid:
        raise GridMismatchError(f"incompatible discretizations: {envelope.grid} vs {psi1.psi.grid}")
    x = envelope.grid.x
    g, est_error = 0.0, 0.0
    for part in (np.cos, np.sin):
        density = envelope * psi1.psi * part(wavenumber * x)
        value, error = _density_exchange(density, density, kernel)
        g += value
        est_error += error
    return ExchangeIntegralResult(g=g, est_error=est_error,
                                  orbitals_used=("2 (plane wave)", psi1.label, psi1.label))


def two_body_integral(a, b, kernel):
    """密度 a(x), b(x′) の相互作用 ∬ a(x) V(x,x′) b(x′) dx dx′。"""
    if a.grid != b.grid:
        raise GridMismatchError(f"incompatible discretizations: {a.grid} vs {b.grid}")
    grid = a.grid
    return _bilinear(grid.x, a.values, b.values, kernel, grid.h)[0]


def admixture_bg1(g, e1L, e1R):
    """交換による混合振幅 B_G1 = G/(E_1L − E_1R)。

    Args:
        g (ExchangeIntegralResult | float): 交換積分
        e1L (float): 左井戸の準位
        e1R (float): 右井戸の準位

    Raises:
        DegenerateDetuningError: 準位差が 1e3·ε·max(|e1L|, |e1R|) 以下の場合
    """
    value = float(getattr(g, 'g', g))
    detuning = float(e1L - e1R)
    if abs(detuning) <= 1e3 * _EPS * max(abs(e1L), abs(e1R)) or detuning == 0.0:
        raise DegenerateDetuningError(
            f"detuning E_1L - E_1R = {detuning:.3e} is degenerate; B_G1 undefined")
    return AdmixtureResult(b_g1=value / detuning, g=value, detuning=detuning)


def monopole_term(psi2, psi1, partner, kernel, l):
    """(e²/l)·⟨ψ₂,ψ₁⟩·⟨ψ_partner,ψ₂⟩。"""
    return float(kernel.e2 / l * inner_product(psi2.psi, psi1.psi) * inner_product(partner.psi, psi2.psi))


def multipole_leading(psi2, psi1_full, kernel, l, partner=None):
    """核を 1/l で打ち切った単極子項と、G に対する比を返す。

    単極子項は (e²/l)·⟨ψ₂,ψ₁⟩·⟨ψ_partner,ψ₂⟩ で、ψ₁ と ψ₂ が同じハミルトニアンの
    固有状態なら直交性により消える。partner を省略すると ψ₁ 自身を使う。

    Raises:
        ValidationError: |⟨ψ₁,ψ₂⟩| > 1e−8 の場合、または l ≤ 0 の場合
    """
    if not l > 0:
        raise ValidationError(f"separation l must be positive, got {l}")
    partner = psi1_full if partner is None else partner
    _same_grid(psi2, psi1_full, partner)
    overlap = inner_product(psi2.psi, psi1_full.psi)
    if abs(overlap) > 1e-8:
        raise ValidationError(
            f"psi_1 and psi_2 must be orthogonal eigenstates, got overlap {overlap:.3e}")
    monopole = monopole_term(psi2, psi1_full, partner, kernel, l)
    g = exchange_integral(psi2, psi1_full, partner, kernel).g
    ratio = abs(monopole) / abs(g) if g != 0.0 else float('inf')
    return MultipoleResult(monopole=float(monopole), residual_ratio=float(ratio), g=g)


def exchange_potential(psi_a, psi_b, kernel, points):
    """遷移密度 ψ_a·ψ_b が点 points に作る交換ポテンシャル ∫ψ_a V ψ_b dx′。"""
    grid = _same_grid(psi_a, psi_b)
    density = psi_a.psi.values * psi_b.psi.values
    return kernel.potential(np.atleast_1d(points), grid.x, density, grid.h)


def exchange_potential_decay(psi_a, psi_b, kernel, distances, origin=None):
    """遷移密度の左側遠方でのポテンシャルの減衰則を両対数フィットで求める。

    遷移密度の電荷 ⟨ψ_a,ψ_b⟩ が0なら先頭は双極子項で、1/r² で減衰する。

    Args:
        distances (array-like): 原点からの距離 r（昇順）
        origin (float, optional): 距離の原点（既定は |ψ_a·ψ_b| の重心）

    Returns:
        FitResult: ln|φ| vs ln r の傾き
    """
    distances = np.asarray(distances, dtype=np.float64)
    if np.any(distances <= 0):
        raise ValidationError("distances must be positive")
    if origin is None:
        weight = np.abs(psi_a.psi.values * psi_b.psi.values)
        origin = float(np.sum(weight * psi_a.psi.grid.x) / np.sum(weight))
    phi = exchange_potential(psi_a, psi_b, kernel, origin - distances)
    return linear_fit(np.log(distances), np.log(np.abs(phi)), axes="ln|phi| vs ln r")

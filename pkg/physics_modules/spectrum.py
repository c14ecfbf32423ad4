"""離散1次元ハミルトニアンの組み立てと最低固有対の計算。

二重井戸の局在軌道・トンネル分裂・直接トンネルによる混合振幅もここで扱う。

* Hamiltonian: 対称三重対角行列（中心差分、Dirichlet境界）
* solve_lowest: Sturm列の二分法 + 逆反復で最低 k 個の固有対を求める
* localize_symmetric: 対称二重井戸の二重項から左右の局在軌道を作る
* reference_orbitals: 孤立井戸の基底状態 ψ_1L, ψ_1R と障壁付近の状態 ψ_2
* resonant_orbitals: 井戸間距離を変えても非局在のままの ψ_2（左の第1励起 + 右の基底）
* admixture_projection / two_level_admixture: 混合振幅の測定値と2準位モデル
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg

from .errors import GridMismatchError, NumericalError, RegimeError, ValidationError
from .grid import GridFunction, inner_product, integrate
from .potentials import (DoubleGaussianWell, barrier_top, sample_potential,
                         single_well_spec, well_minima)

# stebz の絶対許容誤差。正の極小値を渡すと各固有値が数ulpまで二分される
_STEBZ_ABSTOL = 2.0 * np.finfo(np.float64).tiny
_GAUGE_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """H = −(ħ²/2m) d²/dx² + U(x) の2次中心差分による三重対角表現。

    Args:
        grid (Grid): 離散化グリッド
        diag (np.ndarray): 対角成分 ħ²/(m·h²) + U(x_i)
        offdiag (np.ndarray): 副対角成分 −ħ²/(2m·h²)
        params (PhysicsParams): 物理定数
    """

    grid: object
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)
    params: object = None

    def __post_init__(self):
        if self.diag.shape != (self.grid.n,) or self.offdiag.shape != (self.grid.n - 1,):
            raise ValidationError("hamiltonian bands do not match the grid size")

    @property
    def norm_inf(self):
        """行和ノルム ‖H‖_∞。"""
        return float(np.max(np.abs(self.diag)) + 2.0 * np.max(np.abs(self.offdiag)))

    def apply(self, f):
        """H·f を返す。"""
        if f.grid != self.grid:
            raise GridMismatchError(f"incompatible discretizations: {f.grid} vs {self.grid}")
        v = f.values
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return GridFunction(self.grid, out)

    def banded(self, shift=0.0):
        """solve_banded 用の (3, n) 形式で H − shift を返す。"""
        n = self.grid.n
        ab = np.zeros((3, n))
        ab[0, 1:] = self.offdiag
        ab[1, :] = self.diag - shift
        ab[2, :-1] = self.offdiag
        return ab


@dataclass(frozen=True)
class Orbital:
    """規格化された軌道とそのエネルギー。

    Args:
        psi (GridFunction): 波動関数（∫ψ² dx = 1）
        energy (float): エネルギー
        label (str): '1L', '1R', '2', 'eigen-k' など
    """

    psi: GridFunction
    energy: float
    label: str = ""

    def __post_init__(self):
        weight = integrate(self.psi * self.psi)
        if abs(weight - 1.0) > 1e-10:
            raise ValidationError(
                f"orbital {self.label!r} is not normalized: integral of psi^2 = {weight:.12f}")

    @classmethod
    def normalized(cls, psi, energy=float('nan'), label=""):
        """任意の関数を規格化して Orbital にする。"""
        weight = integrate(psi * psi)
        if weight <= 0.0:
            raise ValidationError(f"cannot normalize a zero function ({label!r})")
        return cls(psi / np.sqrt(weight), float(energy), label)

    @property
    def grid(self):
        return self.psi.grid


@dataclass(frozen=True)
class Spectrum:
    """エネルギー昇順に並んだ固有対のリスト。"""

    pairs: tuple

    def __post_init__(self):
        energies = np.array([p.energy for p in self.pairs])
        if len(energies) > 1 and not np.all(np.diff(energies) > 0):
            raise NumericalError("spectrum energies are not strictly increasing (unresolved degeneracy)")
        object.__setattr__(self, 'pairs', tuple(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, k):
        return self.pairs[k]

    @property
    def energies(self):
        return np.array([p.energy for p in self.pairs])


@dataclass(frozen=True)
class TunnelingResult:
    """トンネル分裂 E_± = E_1 ∓ t_1 と、非対称の場合の混合振幅。"""

    t1: float
    e_plus: float
    e_minus: float
    b_t1: Optional[float] = None

    def __post_init__(self):
        if not self.t1 >= 0.0:
            raise ValidationError(f"t1 must be non-negative, got {self.t1}")

    def to_dict(self):
        return {'t1': self.t1, 'e_plus': self.e_plus, 'e_minus': self.e_minus, 'b_t1': self.b_t1}


class ReferenceOrbitals(NamedTuple):
    psi_1L: Orbital
    psi_1R: Orbital
    psi_2: Orbital
    e_1L: float
    e_1R: float


def assemble_hamiltonian(u, params):
    """ポテンシャルと物理定数から三重対角ハミルトニアンを組み立てる。

    Args:
        u (GridFunction): サンプルされたポテンシャル
        params (PhysicsParams): 物理定数

    Returns:
        Hamiltonian: 対称三重対角行列
    """
    h = u.grid.h
    kinetic = params.hbar ** 2 / (params.mass * h * h)
    diag = kinetic + np.array(u.values)
    offdiag = np.full(u.grid.n - 1, -0.5 * kinetic)
    return Hamiltonian(u.grid, diag, offdiag, params)


def sturm_count(h, e):
    """e 未満の固有値の数を Sturm 列（LDLᵀ のピボットの符号）で数える。"""
    count = 0
    tiny = np.finfo(np.float64).tiny
    d = h.diag[0] - e
    off2 = h.offdiag ** 2
    for i in range(h.grid.n):
        if i > 0:
            d = h.diag[i] - e - off2[i - 1] / d
        if d == 0.0:
            d = -tiny
        if d < 0.0:
            count += 1
    return count


def _fix_gauge(v):
    threshold = _GAUGE_THRESHOLD * np.max(np.abs(v))
    first = int(np.argmax(np.abs(v) > threshold))
    return -v if v[first] < 0 else v


def solve_lowest(h, k):
    """最低 k 個の固有対を求める。

    固有値は Sturm 列の二分法（LAPACK stebz）、固有ベクトルは逆反復（stein）で得る。
    各固有ベクトルは ∫ψ² dx = 1 に規格化し、絶対値が最大値の1e−8倍を超える
    最初の成分が正になるよう符号を固定する。

    Args:
        h (Hamiltonian): ハミルトニアン
        k (int): 求める固有対の数（1 ≤ k ≤ n）

    Returns:
        Spectrum: エネルギー昇順の固有対

    Raises:
        ValidationError: k が範囲外の場合
    """
    n = h.grid.n
    if int(k) != k or not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    k = int(k)
    energies, vectors = linalg.eigh_tridiagonal(
        h.diag, h.offdiag, select='i', select_range=(0, k - 1),
        lapack_driver='stebz', tol=_STEBZ_ABSTOL)
    scale = 1.0 / np.sqrt(h.grid.h)
    pairs = []
    for j in range(k):
        v = _fix_gauge(vectors[:, j])
        pairs.append(Orbital(GridFunction(h.grid, v * scale), float(energies[j]), f"eigen-{j}"))
    return Spectrum(tuple(pairs))


def solve_near(h, e):
    """エネルギー e に最も近い固有対を1つ返す。

    Sturm列で e を挟む2つの固有値の番号を求め、その2つだけを解く。
    深い準位の縮退した二重項を避けて高い準位を取り出すのに使う。
    """
    n = h.grid.n
    below = sturm_count(h, e)
    lo, hi = max(below - 1, 0), min(below, n - 1)
    energies, vectors = linalg.eigh_tridiagonal(
        h.diag, h.offdiag, select='i', select_range=(lo, hi),
        lapack_driver='stebz', tol=_STEBZ_ABSTOL)
    j = int(np.argmin(np.abs(energies - e)))
    v = _fix_gauge(vectors[:, j]) / np.sqrt(h.grid.h)
    return Orbital(GridFunction(h.grid, v), float(energies[j]), f"eigen-{lo + j}")


def eigen_residual(h, orbital):
    """‖Hψ − Eψ‖₂ を単位ベクトル換算で返す。"""
    r = h.apply(orbital.psi) - orbital.energy * orbital.psi
    return float(np.linalg.norm(r.values) * np.sqrt(h.grid.h))


def parity(orbital):
    """グリッド中心に関する鏡映との重なり（偶で +1、奇で −1）。"""
    return inner_product(orbital.psi, orbital.psi.reflected())


def localize_symmetric(spectrum):
    """対称二重井戸の最低2状態から左右の局在軌道を作る。

    ψ_L = (ψ_0 + ψ_1)/√2, ψ_R = (ψ_0 − ψ_1)/√2, t1 = (E_1 − E_0)/2。
    鏡映はグリッド中心に関して取るので、グリッドは井戸に対して対称に置くこと。

    Returns:
        tuple: (psi_L, psi_R, TunnelingResult)

    Raises:
        RegimeError: ψ_0 が偶、ψ_1 が奇でない場合
    """
    if len(spectrum) < 2:
        raise ValidationError("localize_symmetric needs at least two states")
    ground, excited = spectrum[0], spectrum[1]
    p0, p1 = parity(ground), parity(excited)
    if p0 < 1.0 - 1e-6 or p1 > -1.0 + 1e-6:
        raise RegimeError(
            f"lowest states are not an even/odd doublet (parities {p0:+.6f}, {p1:+.6f})")

    plus = (ground.psi + excited.psi) / np.sqrt(2.0)
    minus = (ground.psi - excited.psi) / np.sqrt(2.0)
    grid = ground.psi.grid
    centre = 0.5 * (grid.x_min + grid.x_max)
    left_weight = integrate(GridFunction(grid, np.where(grid.x < centre, plus.values ** 2, 0.0)))
    if left_weight < 0.5:
        plus, minus = minus, plus

    t1 = 0.5 * (excited.energy - ground.energy)
    mid = 0.5 * (excited.energy + ground.energy)
    psi_L = Orbital(plus, mid, "1L")
    psi_R = Orbital(minus, mid, "1R")
    return psi_L, psi_R, TunnelingResult(t1=t1, e_plus=mid - t1, e_minus=mid + t1)


def _ground_of(spec, params, grid, label):
    h = assemble_hamiltonian(sample_potential(spec, params, grid), params)
    g = solve_lowest(h, 1)[0]
    return Orbital(g.psi, g.energy, label)


def reference_orbitals(spec, params, grid, psi2_index=None):
    """非対称二重井戸の参照軌道 ψ_1L, ψ_1R, ψ_2 を求める。

    ψ_1L, ψ_1R は孤立した片側井戸の基底状態を同じグリッド上で解いたもの。
    ψ_2 は二重井戸全体の固有状態のうち、障壁頂上より下にある偶数番目で最も高いもの
    （psi2_index で上書き可能）。

    Args:
        spec (DoubleGaussianWell): 二重井戸（depth_left ≥ depth_right）
        params (PhysicsParams): 物理定数
        grid (Grid): グリッド
        psi2_index (int, optional): ψ_2 として使う固有状態の番号

    Returns:
        ReferenceOrbitals: (psi_1L, psi_1R, psi_2, e_1L, e_1R)

    Raises:
        ValidationError: 二重井戸でない、または左井戸の方が浅い場合
        RegimeError: 障壁より下に束縛状態がない場合
    """
    if not isinstance(spec, DoubleGaussianWell):
        raise ValidationError(f"reference_orbitals requires a double_gaussian potential, got {spec.kind}")
    if spec.depth_left < spec.depth_right:
        raise ValidationError(
            f"left well must be the deeper one (depth_left={spec.depth_left}, depth_right={spec.depth_right})")

    u = sample_potential(spec, params, grid)
    x_l, _, x_r, _ = well_minima(spec, u)
    _, u_top = barrier_top(u, (x_l, x_r))

    psi_1L = _ground_of(single_well_spec(spec, 'L'), params, grid, "1L")
    psi_1R = _ground_of(single_well_spec(spec, 'R'), params, grid, "1R")
    for orbital in (psi_1L, psi_1R):
        if orbital.energy >= u_top:
            raise RegimeError(
                f"single well {orbital.label} has no bound state below the barrier top "
                f"(E={orbital.energy:.6g}, U_top={u_top:.6g})")

    h = assemble_hamiltonian(u, params)
    below = sturm_count(h, u_top)
    if psi2_index is None:
        psi2_index = below - 1 if (below - 1) % 2 == 0 else below - 2
        if psi2_index < 2:
            raise RegimeError(
                f"only {below} states lie below the barrier top; no excited even state for psi_2")
    elif not 0 <= psi2_index < grid.n:
        raise ValidationError(f"spectrum.psi2_index must be in [0, {grid.n}), got {psi2_index}")
    try:
        state = solve_lowest(h, psi2_index + 1)[psi2_index]
    except NumericalError as e:
        raise RegimeError(
            f"eigen-{psi2_index} lies in a tunneling doublet that the grid cannot resolve; "
            f"psi_2 is no longer a delocalized eigenstate ({e})") from e
    psi_2 = Orbital(state.psi, state.energy, f"2 (eigen-{psi2_index})")
    return ReferenceOrbitals(psi_1L, psi_1R, psi_2, psi_1L.energy, psi_1R.energy)


def resonant_orbitals(spec, params, grid, max_overlap=1e-6):
    """左井戸の第1励起軌道と右井戸の基底軌道を等しく重ねた ψ₂ を作る。

    ψ₂ = (φ_L1 + ψ_1R)/‖·‖ は左右どちらの井戸にも重みを持ち、l を大きくしても局在しない。
    遷移密度 ψ₂ψ_1L は電荷を持たず（φ_L1 ⊥ ψ_1L）、ψ_1Rψ₂ は電荷 ≈ 1/√2 を持つので、
    G の先頭は双極子と電荷の相互作用 ∝ 1/l² になる。

    Raises:
        RegimeError: 左井戸に束縛された第1励起状態がない場合、
            または |⟨ψ₂, ψ_1L⟩| が max_overlap を超える場合
    """
    if not isinstance(spec, DoubleGaussianWell):
        raise ValidationError(f"resonant_orbitals requires a double_gaussian potential, got {spec.kind}")
    left = assemble_hamiltonian(sample_potential(single_well_spec(spec, 'L'), params, grid), params)
    lowest = solve_lowest(left, 2)
    psi_1L = Orbital(lowest[0].psi, lowest[0].energy, "1L")
    excited = lowest[1]
    if excited.energy >= 0.0:
        raise RegimeError(
            f"left well has no bound first excited state (E={excited.energy:.6g} >= 0)")
    psi_1R = _ground_of(single_well_spec(spec, 'R'), params, grid, "1R")
    energy = 0.5 * (excited.energy + psi_1R.energy)
    psi_2 = Orbital.normalized(excited.psi + psi_1R.psi, energy, "2 (L1+1R)")
    overlap = inner_product(psi_2.psi, psi_1L.psi)
    if abs(overlap) > max_overlap:
        raise RegimeError(
            f"l={spec.separation}: psi_2 overlaps psi_1L by {overlap:.3e} (> {max_overlap:g}); "
            "the wells are too close for the dipole expansion")
    return ReferenceOrbitals(psi_1L, psi_1R, psi_2, psi_1L.energy, psi_1R.energy)


def admixture_projection(ground, psi_1R):
    """基底状態に混ざった右井戸軌道の係数 ⟨ψ_1R, ψ_ground⟩ を返す。"""
    return inner_product(psi_1R.psi, ground.psi)


def two_level_admixture(e1L, e1R, t1):
    """2準位模型 [[e1L, −t1], [−t1, e1R]] の基底状態から混合振幅を求める。

    左成分を正に取ったときの右成分を b_t1 として返す（≈ t1/(e1R − e1L)）。
    """
    matrix = np.array([[e1L, -t1], [-t1, e1R]], dtype=np.float64)
    energies, vectors = np.linalg.eigh(matrix)
    ground = vectors[:, 0]
    if ground[0] < 0:
        ground = -ground
    return TunnelingResult(t1=abs(float(t1)), e_plus=float(energies[0]),
                           e_minus=float(energies[1]), b_t1=float(ground[1]))


def symmetric_splitting(spec, params, grid):
    """平均深さを持つ対称な二重井戸で分裂 t1 を測る。

    非対称井戸の2準位模型に入れる結合の大きさとして使う。
    """
    depth = 0.5 * (spec.depth_left + spec.depth_right)
    companion = DoubleGaussianWell(depth, depth, spec.width, spec.separation)
    h = assemble_hamiltonian(sample_potential(companion, params, grid), params)
    _, _, tunneling = localize_symmetric(solve_lowest(h, 2))
    return tunneling

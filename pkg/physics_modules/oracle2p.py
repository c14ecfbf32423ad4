"""同スピンの2フェルミオンの厳密対角化（粗いグリッド上）。

反対称なペア基底 (i < j) で2体ハミルトニアンを作用させ、Lanczos法で固有状態を求める。
交換を介した2段階の移動（1L → 1R）を、摂動論とは独立に確かめるための基準解。

* assemble_2p: 行列を作らずに H₂·v を計算する演算子
* solve_ground_2p / solve_target_2p: 最低状態 / 指定した配置に接続する状態
* reduced_density_matrix / right_well_occupation / density_beyond: 1体縮約密度行列、右井戸軌道の占有、障壁より右の粒子数
* conditional_amplitude: もう1粒子を ψ₂ に固定したときの右井戸への混合振幅
* mean_field_prediction: ψ₂ を固定した1体問題 h + J − K による同じ振幅の予測
* perturbative_occupation: 1次摂動による |B_t1 + B_G1|² の予測
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from .console import log
from .errors import ConvergenceError, GridMismatchError, NumericalError, ValidationError
from .exchange import exchange_integral, two_body_integral
from .grid import inner_product
from .spectrum import assemble_hamiltonian

MAX_ORACLE_POINTS = 128


@dataclass(frozen=True)
class TwoParticleProblem:
    """2粒子問題の定義。

    Args:
        grid (Grid): 粗いグリッド（n ≤ 128）
        u (GridFunction): 1体ポテンシャル
        kernel (ExchangeKernel): 2体相互作用
        params (PhysicsParams): 物理定数
    """

    grid: object
    u: object
    kernel: object
    params: object

    def __post_init__(self):
        if self.u.grid != self.grid:
            raise GridMismatchError(f"potential grid {self.u.grid} differs from problem grid {self.grid}")


def _pair_index(n, i, j):
    return i * n - i * (i + 1) // 2 + (j - i - 1)


class TwoParticleOperator:
    """反対称ペア基底上の H₂ = h⊗1 + 1⊗h + V(x_i, x_j)。

    振幅ベクトル c（長さ n(n−1)/2）は反対称行列 M（M_ij = c_ij, M_ji = −c_ij）と同一視する。
    """

    def __init__(self, problem):
        self.problem = problem
        self.n = problem.grid.n
        self.dim = self.n * (self.n - 1) // 2
        self.one_body = assemble_hamiltonian(problem.u, problem.params)
        x = problem.grid.x
        self.interaction = problem.kernel.matrix(x, x)
        self._upper = np.triu_indices(self.n, 1)
        tri = np.diag(self.one_body.diag)
        tri += np.diag(self.one_body.offdiag, 1) + np.diag(self.one_body.offdiag, -1)
        self._t = tri

    @property
    def shape(self):
        return (self.dim, self.dim)

    def expand(self, amp):
        """ペア振幅を反対称な n×n 行列に展開する。"""
        m = np.zeros((self.n, self.n))
        m[self._upper] = amp
        return m - m.T

    def compress(self, m):
        return m[self._upper]

    def matvec(self, amp):
        m = self.expand(np.asarray(amp, dtype=np.float64).ravel())
        y = self._t @ m + m @ self._t + self.interaction * m
        return self.compress(y)

    def as_linear_operator(self):
        return sparse_linalg.LinearOperator(self.shape, matvec=self.matvec, dtype=np.float64)

    def to_sparse(self):
        """同じ演算子を CSR 疎行列として組み立てる。

        ホッピングは座標の順序 i < j を保つものだけが残り、i と j が重なる
        （パウリ排他で禁止される）ホッピングは落ちる。
        """
        n = self.n
        i, j = self._upper
        rows = [np.arange(self.dim)]
        cols = [np.arange(self.dim)]
        vals = [self.one_body.diag[i] + self.one_body.diag[j] + self.interaction[i, j]]
        off = self.one_body.offdiag
        hops = (
            (i + 1 < j, i + 1, j, off[np.minimum(i, n - 2)]),
            (i - 1 >= 0, i - 1, j, off[np.maximum(i - 1, 0)]),
            (j + 1 < n, i, j + 1, off[np.minimum(j, n - 2)]),
            (j - 1 > i, i, j - 1, off[np.maximum(j - 1, 0)]),
        )
        for mask, ni, nj, t in hops:
            src = np.nonzero(mask)[0]
            rows.append(src)
            cols.append(_pair_index(n, ni[src], nj[src]))
            vals.append(t[src])
        matrix = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=self.shape)
        return matrix.tocsr()

    def dense(self):
        return self.to_sparse().toarray()

    def residual(self, amp, energy):
        return float(np.linalg.norm(self.matvec(amp) - energy * amp))


@dataclass(frozen=True, eq=False)
class TwoParticleState:
    """反対称ペア基底上の規格化された2粒子状態。"""

    amp: np.ndarray = field(repr=False)
    energy: float
    grid: object

    def __post_init__(self):
        amp = np.array(self.amp, dtype=np.float64)
        n = self.grid.n
        if amp.shape != (n * (n - 1) // 2,):
            raise ValidationError(f"pair amplitudes have shape {amp.shape}, expected ({n * (n - 1) // 2},)")
        norm = float(np.linalg.norm(amp))
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"two-particle state is not normalized (norm={norm:.12f})")
        amp.flags.writeable = False
        object.__setattr__(self, 'amp', amp)

    @property
    def matrix(self):
        n = self.grid.n
        m = np.zeros((n, n))
        m[np.triu_indices(n, 1)] = self.amp
        return m - m.T

    def overlap(self, other):
        return float(np.dot(self.amp, other.amp))


def assemble_2p(p):
    """2粒子演算子を作る。

    Raises:
        ValidationError: n が上限 128 を超える場合
    """
    if p.grid.n > MAX_ORACLE_POINTS:
        raise ValidationError(
            f"oracle grid has n={p.grid.n} points; pair dimension limited to n <= {MAX_ORACLE_POINTS}")
    op = TwoParticleOperator(p)
    log('ORACLE', f"pair basis dimension {op.dim} (n={op.n})")
    return op


def _unit_vector(psi):
    return psi.values * np.sqrt(psi.grid.h)


def slater_state(phi_a, phi_b):
    """2つの直交規格化軌道からスレーター行列式を作る。"""
    if phi_a.psi.grid != phi_b.psi.grid:
        raise GridMismatchError("slater orbitals live on different grids")
    a = _unit_vector(phi_a.psi)
    b = _unit_vector(phi_b.psi)
    m = np.outer(a, b) - np.outer(b, a)
    n = phi_a.psi.grid.n
    amp = m[np.triu_indices(n, 1)]
    amp = amp / np.linalg.norm(amp)
    return TwoParticleState(amp, float(phi_a.energy + phi_b.energy), phi_a.psi.grid)


def _seed(dim):
    return np.full(dim, 1.0 / np.sqrt(dim))


def _checked_state(op, vector, energy, tol):
    vector = vector / np.linalg.norm(vector)
    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    residual = op.residual(vector, energy)
    if residual > 10.0 * tol * max(1.0, abs(energy)):
        raise ConvergenceError("two-particle eigenpair failed the residual check", residual)
    return TwoParticleState(vector, float(energy), op.problem.grid)


def solve_ground_2p(op, tol=1e-10, max_iter=None):
    """Lanczos法（ARPACK）で最低固有対を求める。

    初期ベクトルは全成分が等しい規格化ベクトルに固定するので結果は決定的。
    残差 ‖H₂v − Ev‖ は 10·tol·max(1, |E|) 以下であることを確認する。

    Raises:
        ConvergenceError: 反復が収束しない、または残差が大きすぎる場合
    """
    try:
        energies, vectors = sparse_linalg.eigsh(
            op.as_linear_operator(), k=1, which='SA', v0=_seed(op.dim), tol=tol, maxiter=max_iter)
    except sparse_linalg.ArpackNoConvergence as exc:
        residual = float('nan')
        if len(exc.eigenvalues):
            residual = op.residual(exc.eigenvectors[:, 0], exc.eigenvalues[0])
        raise ConvergenceError("Lanczos iteration did not converge", residual) from exc
    state = _checked_state(op, vectors[:, 0], energies[0], tol)
    log('ORACLE', f"ground energy {state.energy:.12g}")
    return state


def solve_target_2p(op, reference, tol=1e-10, k=8):
    """参照配置と最も重なりの大きい固有状態をシフト反転Lanczos法で求める。

    シフトは参照状態のエネルギー期待値 ⟨ref|H₂|ref⟩。その近くの k 個の固有状態から
    |⟨ref|v⟩| が最大のものを選ぶ。

    Args:
        op (TwoParticleOperator): 2粒子演算子
        reference (TwoParticleState): 参照配置（例: スレーター行列式 (ψ_g, ψ₂)）
        tol (float): 収束判定
        k (int): シフト付近で求める固有対の数
    """
    sigma = float(np.dot(reference.amp, op.matvec(reference.amp)))
    # 参照が厳密な固有状態だとシフトが固有値に一致し、LU分解が特異になる
    sigma -= 1e-7 * max(1.0, abs(sigma))
    k = min(k, op.dim - 2)
    try:
        energies, vectors = sparse_linalg.eigsh(
            op.to_sparse().tocsc(), k=k, sigma=sigma, which='LM', v0=_seed(op.dim), tol=tol)
    except sparse_linalg.ArpackNoConvergence as exc:
        raise ConvergenceError("shift-invert Lanczos did not converge") from exc
    order = np.argsort(energies)
    energies, vectors = energies[order], vectors[:, order]
    overlaps = np.abs(vectors.T @ reference.amp)
    best = int(np.argmax(overlaps))
    if overlaps[best] < 0.5:
        raise NumericalError(
            f"no eigenstate near {sigma:.6g} overlaps the reference configuration (best {overlaps[best]:.3f})")
    vector = vectors[:, best] * np.sign(np.dot(vectors[:, best], reference.amp))
    state = TwoParticleState(vector / np.linalg.norm(vector), float(energies[best]), op.problem.grid)
    residual = op.residual(state.amp, state.energy)
    if residual > 10.0 * tol * max(1.0, abs(state.energy)):
        raise ConvergenceError("target eigenpair failed the residual check", residual)
    log('ORACLE', f"target energy {state.energy:.12g} (overlap {overlaps[best]:.6f})")
    return state


def reduced_density_matrix(state):
    """1体縮約密度行列 ρ = M·Mᵀ（単位ベクトル基底、トレース2）。"""
    m = state.matrix
    return m @ m.T


def _check_divider(grid, divider):
    if not grid.x_min < divider < grid.x_max:
        raise ValidationError(f"divider {divider} lies outside the grid [{grid.x_min}, {grid.x_max}]")


def right_well_occupation(state, psi_1R, divider=None):
    """右井戸の参照軌道の占有 ⟨ψ_1R|ρ|ψ_1R⟩ を返す。

    低エネルギー帯への射影は、帯の状態である ψ_1R への射影で代表させる。

    Raises:
        ValidationError: divider がグリッドの外にある場合
    """
    if divider is not None:
        _check_divider(state.grid, divider)
    if psi_1R.psi.grid != state.grid:
        raise GridMismatchError("reference orbital lives on a different grid")
    phi = _unit_vector(psi_1R.psi)
    return float(phi @ reduced_density_matrix(state) @ phi)


def density_beyond(state, divider):
    """x > divider にある粒子数 ∫ρ(x,x)dx。

    Raises:
        ValidationError: divider がグリッドの外にある場合
    """
    grid = state.grid
    _check_divider(grid, divider)
    rho = np.diag(reduced_density_matrix(state))
    return float(np.sum(rho[grid.x > divider]))


@dataclass(frozen=True)
class ConditionalAmplitude:
    amplitude: float
    occupation: float


def _projected_amplitude(chi, psi_1L, psi_1R):
    left = float(_unit_vector(psi_1L.psi) @ chi)
    right = float(_unit_vector(psi_1R.psi) @ chi)
    weight = float(chi @ chi)
    if weight == 0.0 or left == 0.0:
        raise NumericalError("state has no component along the (psi_1L, spectator) configuration")
    return ConditionalAmplitude(amplitude=right / left, occupation=right * right / weight)


def conditional_amplitude(state, psi_1L, psi_1R, spectator):
    """もう1粒子を spectator に射影したときの1体振幅 χ = M·φ_s の右井戸成分。

    amplitude = ⟨ψ_1R,χ⟩/⟨ψ_1L,χ⟩、occupation = ⟨ψ_1R,χ⟩²/‖χ‖²。
    spectator 自身の分極は χ にほとんど現れない。
    """
    return _projected_amplitude(state.matrix @ _unit_vector(spectator.psi), psi_1L, psi_1R)


@dataclass(frozen=True)
class MeanFieldPrediction:
    """spectator を固定した1体問題 h + J − K による右井戸振幅の予測。

    Args:
        b_t1 (float): 相互作用なし（h のみ）の振幅
        b_g1 (float): J − K を入れたことによる振幅の変化
        occupation (float): 相互作用ありの右井戸占有
        energy (float): 選んだ軌道の固有値
    """

    b_t1: float
    b_g1: float
    occupation: float
    energy: float

    @property
    def amplitude(self):
        return self.b_t1 + self.b_g1

    def to_dict(self):
        return {'b_t1': self.b_t1, 'b_g1': self.b_g1, 'amplitude': self.amplitude,
                'occupation': self.occupation, 'energy': self.energy}


def _mean_field_orbital(t, interaction, q, psi_1L):
    """h + diag(V·q²) − q⊗q∘V を対角化し、ψ_1L に最も重なる軌道（spectator 成分を除く）を返す。"""
    hamiltonian = t + np.diag(interaction @ (q * q)) - np.outer(q, q) * interaction
    energies, vectors = linalg.eigh(hamiltonian)
    overlaps = np.abs(vectors.T @ _unit_vector(psi_1L.psi))
    best = int(np.argmax(overlaps))
    phi = vectors[:, best]
    return phi - q * float(q @ phi), float(energies[best])


def mean_field_prediction(op, spectator, psi_1L, psi_1R):
    """もう1粒子を spectator に固定した平均場で、オラクルと同じ射影の右井戸振幅を予測する。

    h に直接項 J(x) = Σ V(x,x′)q(x′)² と交換項 K(x,x′) = q(x)V(x,x′)q(x′) を加えた
    1体行列を対角化する。相互作用をゼロにすると2粒子の配置 (ψ_g, ψ₂) と一致するので、
    オラクルとの差は相関（spectator の緩和）だけになる。
    """
    if spectator.psi.grid != op.problem.grid:
        raise GridMismatchError("spectator orbital lives on a different grid")
    q = _unit_vector(spectator.psi)
    bare, _ = _mean_field_orbital(op._t, np.zeros_like(op.interaction), q, psi_1L)
    dressed, energy = _mean_field_orbital(op._t, op.interaction, q, psi_1L)
    free = _projected_amplitude(bare, psi_1L, psi_1R)
    field_on = _projected_amplitude(dressed, psi_1L, psi_1R)
    result = MeanFieldPrediction(b_t1=free.amplitude, b_g1=field_on.amplitude - free.amplitude,
                                 occupation=field_on.occupation, energy=energy)
    log('ORACLE', f"mean-field b_t1={result.b_t1:.4e}, b_g1={result.b_g1:.4e}")
    return result


@dataclass(frozen=True)
class PerturbativeResult:
    """1次摂動による混合振幅の予測。

    Args:
        b_t1 (float): 直接トンネル項 −t1/Δ_eff
        b_g1 (float): 2体項 (D − G)/Δ_eff（直接遷移項 D と交換項 G を重なり補正込みで）
        delta_eff (float): 平均場のずれを含めた配置エネルギー差 E_L − E_R
        g (float): 交換積分 G(2,1L;1R,2)
        direct (float): 直接遷移項 D
    """

    b_t1: float
    b_g1: float
    delta_eff: float
    g: float
    direct: float

    @property
    def amplitude(self):
        return self.b_t1 + self.b_g1

    @property
    def occupation(self):
        b = self.amplitude
        return b * b / (1.0 + b * b)

    def to_dict(self):
        return {'b_t1': self.b_t1, 'b_g1': self.b_g1, 'delta_eff': self.delta_eff,
                'G': self.g, 'D': self.direct, 'occupation': self.occupation}


def perturbative_occupation(refs, t1, kernel):
    """配置 (ψ_1L, ψ₂) と (ψ_1R, ψ₂) の2準位近似で右井戸の占有を予測する。

    結合は −t1 + (D − s·J̄) − (G − s·K̄)、配置エネルギー差は
    (e1L − e1R) + (J_L − K_L) − (J_R − K_R)。s = ⟨ψ_1L,ψ_1R⟩ は重なりの補正。

    Args:
        refs (ReferenceOrbitals): ψ_1L, ψ_1R, ψ₂ と e1L, e1R
        t1 (float): 1体のトンネル結合
        kernel (ExchangeKernel): 相互作用
    """
    psi_1L, psi_1R, psi_2, e1L, e1R = refs
    l2, r2, q2 = psi_1L.psi * psi_1L.psi, psi_1R.psi * psi_1R.psi, psi_2.psi * psi_2.psi
    s = inner_product(psi_1L.psi, psi_1R.psi)
    j_left = two_body_integral(l2, q2, kernel)
    j_right = two_body_integral(r2, q2, kernel)
    k_left = exchange_integral(psi_2, psi_1L, psi_1L, kernel).g
    k_right = exchange_integral(psi_2, psi_1R, psi_1R, kernel).g
    direct = two_body_integral(psi_1R.psi * psi_1L.psi, q2, kernel)
    g = exchange_integral(psi_2, psi_1L, psi_1R, kernel).g

    coupling_two_body = (direct - 0.5 * s * (j_left + j_right)) - (g - 0.5 * s * (k_left + k_right))
    delta_eff = (e1L - e1R) + (j_left - k_left) - (j_right - k_right)
    if delta_eff == 0.0:
        raise NumericalError("configuration energies are degenerate; perturbative admixture undefined")
    result = PerturbativeResult(b_t1=-t1 / delta_eff, b_g1=coupling_two_body / delta_eff,
                                delta_eff=float(delta_eff), g=float(g), direct=float(direct))
    log('ORACLE', f"perturbative b_t1={result.b_t1:.4e}, b_g1={result.b_g1:.4e}, "
                  f"delta_eff={delta_eff:.6g}")
    return result

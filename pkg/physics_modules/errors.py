"""実験パイプライン全体で共有する例外クラス群。

* ValidationError: 入力・設定・契約違反（終了コード1）
* NumericalError: 数値計算または物理的な領域の失敗（終了コード2）
"""


class LabError(Exception):
    """このパッケージが送出する例外の基底クラス。"""

    exit_code = 2


class ValidationError(LabError, ValueError):
    """入力値や設定が契約を満たさない場合の例外。"""

    exit_code = 1


class GridMismatchError(ValidationError):
    """異なるグリッド上の関数を組み合わせようとした場合の例外。"""


class NumericalError(LabError, RuntimeError):
    """数値計算が前提とする領域から外れた場合の例外。"""

    exit_code = 2


class RegimeError(NumericalError):
    """物理的な前提（二重項、非局在化、束縛状態など）が崩れた場合の例外。"""


class ConvergenceError(NumericalError):
    """反復法が規定回数内に収束しなかった場合の例外。

    Args:
        message (str): エラーメッセージ
        residual (float): 最終残差
    """

    def __init__(self, message, residual=float('nan')):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class NearSingularError(NumericalError):
    """シフトが固有値に近すぎて線形方程式が特異に近い場合の例外。"""

    def __init__(self, message, distance):
        super().__init__(f"{message} (eigenvalue distance={distance:.3e})")
        self.distance = distance


class DegenerateDetuningError(NumericalError):
    """E_1L と E_1R が縮退していて混合振幅が定義できない場合の例外。"""


class InsufficientLinearityError(NumericalError):
    """回帰のR²が下限を下回り、主張の検証に進めない場合の例外。"""


class ClaimFailedError(NumericalError):
    """十分に線形なフィットの上で、スケーリング則の主張が成立しなかった場合の例外。"""

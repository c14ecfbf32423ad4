"""交換を介したトンネリングの数値実験を実行するコマンドラインのエントリポイント。

* ExperimentManager: 1回の実行を統括し、サブコマンドを各パイプラインに振り分ける
* main: 引数解析、結果の書き出し、例外から終了コードへの変換
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from physics_modules.console import log
from physics_modules.errors import LabError, ValidationError
from physics_modules.exchange import (admixture_bg1, exchange_integral,
                                      exchange_potential_decay, multipole_leading)
from physics_modules.experiments import (OracleSetup, ScanSpec, occupation_point,
                                         scan_case2, scan_distance_exchange,
                                         scan_e2_occupation, scan_hbar_exchange_case1,
                                         scan_hbar_exchange_case3, scan_hbar_splitting)
from physics_modules.grid import inner_product
from physics_modules.hartree_fock import ExchangeSource, exchange_correction, tail_analysis
from physics_modules.oracle2p import TwoParticleProblem, assemble_2p, solve_ground_2p
from physics_modules.potentials import DoubleGaussianWell, sample_potential, well_minima
from physics_modules.semiclassics import action_integral, find_turning_points, instanton_action
from physics_modules.spectrum import (admixture_projection, assemble_hamiltonian, eigen_residual,
                                      localize_symmetric, reference_orbitals, solve_lowest,
                                      symmetric_splitting, two_level_admixture)
from run_config import OUTPUT_FORMATS, RunConfigLoader

SUBCOMMANDS = ('spectrum', 'wkb', 'exchange', 'hf-tail', 'oracle2p',
               'scan-hbar-splitting', 'scan-distance', 'scan-case1', 'scan-case2', 'scan-case3')

# 遷移密度のポテンシャルを評価する距離（井戸間距離より十分遠方）
DECAY_DISTANCES = np.geomspace(40.0, 120.0, 9)


def _plain(value):
    """numpy の値を JSON で書ける Python の値に変換する。"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _require_double_well(pot, command):
    if not isinstance(pot, DoubleGaussianWell):
        raise ValidationError(f"{command} requires potential.kind 'double_gaussian', got {pot.kind!r}")


class ExperimentManager:
    """1回の実行（1つのサブコマンド）を管理するクラス。

    Args:
        config (RunConfig): 検証済みの設定
    """

    def __init__(self, config):
        self.config = config
        self.params = config.physics()
        self.potential = config.potential()
        self.grid = config.grid(self.potential)
        self.kernel = config.kernel()
        log('INIT', f"{self.potential.kind} on n={self.grid.n}, "
                    f"[{self.grid.x_min:g}, {self.grid.x_max:g}], hbar={self.params.hbar:g}")

    def run(self, command):
        """サブコマンドを実行する。

        Returns:
            tuple: (結果の辞書, 表 DataFrame または None, ScanResult または None)
        """
        handlers = {
            'spectrum': self.spectrum,
            'wkb': self.wkb,
            'exchange': self.exchange,
            'hf-tail': self.hf_tail,
            'oracle2p': self.oracle2p,
            'scan-hbar-splitting': self.scan_splitting,
            'scan-distance': self.scan_distance,
            'scan-case1': self.scan_case1,
            'scan-case2': self.scan_case2,
            'scan-case3': self.scan_case3,
        }
        if command not in handlers:
            raise ValidationError(f"unknown subcommand {command!r}; choose from {SUBCOMMANDS}")
        log('STEP', f"Running {command}")
        return handlers[command]()

    def _potential_values(self):
        return sample_potential(self.potential, self.params, self.grid)

    def spectrum(self):
        u = self._potential_values()
        h = assemble_hamiltonian(u, self.params)
        k = min(self.config.section('spectrum')['k'], self.grid.n)
        spectrum = solve_lowest(h, k)
        residuals = [eigen_residual(h, orbital) for orbital in spectrum]
        log('SPECTRUM', f"E_0={spectrum.energies[0]:.12g}, max residual {max(residuals):.3e}")
        payload = {'energies': spectrum.energies, 'max_residual': max(residuals)}
        table = pd.DataFrame({'index': np.arange(k), 'energy': spectrum.energies,
                              'residual': residuals})

        pot = self.potential
        if isinstance(pot, DoubleGaussianWell) and k >= 2:
            if pot.depth_left == pot.depth_right:
                payload['tunneling'] = localize_symmetric(spectrum)[2].to_dict()
            elif pot.depth_left > pot.depth_right:
                refs = reference_orbitals(pot, self.params, self.grid,
                                          self.config.section('spectrum')['psi2_index'])
                t1 = symmetric_splitting(pot, self.params, self.grid).t1
                model = two_level_admixture(refs.e_1L, refs.e_1R, t1)
                payload['reference'] = {
                    'e_1L': refs.e_1L, 'e_1R': refs.e_1R, 'e_2': refs.psi_2.energy,
                    'psi2_label': refs.psi_2.label, 't1': t1, 'b_t1': model.b_t1,
                    'measured_admixture': admixture_projection(spectrum[0], refs.psi_1R),
                }
        return payload, table, None

    def wkb(self):
        section = self.config.section('wkb')
        u = self._potential_values()
        pot = self.potential
        energy, bracket = section['energy'], section['bracket']
        payload = {}
        if isinstance(pot, DoubleGaussianWell):
            x_l, _, x_r, _ = well_minima(pot, u)
            bracket = bracket or (x_l, x_r)
            if energy is None:
                energy = solve_lowest(assemble_hamiltonian(u, self.params), 1)[0].energy
            payload['instanton'] = instanton_action(u, self.params, (x_l, x_r)).to_dict()
        if energy is None:
            raise ValidationError(f"wkb.energy is required for potential kind {pot.kind!r}")
        bracket = tuple(bracket or (self.grid.x_min, self.grid.x_max))
        turning = find_turning_points(u, energy, bracket)
        result = action_integral(u, energy, turning, self.params)
        log('WKB', f"E={energy:.10g}: turning points ({turning.a:.6g}, {turning.b:.6g}), S={result.action:.10g}")
        payload.update(result.to_dict())
        return payload, None, None

    def _references(self, command):
        _require_double_well(self.potential, command)
        return reference_orbitals(self.potential, self.params, self.grid,
                                  self.config.section('spectrum')['psi2_index'])

    def exchange(self):
        refs = self._references('exchange')
        u = self._potential_values()
        ground = solve_lowest(assemble_hamiltonian(u, self.params), 1)[0]
        g = exchange_integral(refs.psi_2, refs.psi_1L, refs.psi_1R, self.kernel)
        admixture = admixture_bg1(g, refs.e_1L, refs.e_1R)
        multipole = multipole_leading(refs.psi_2, ground, self.kernel,
                                      self.potential.separation, partner=refs.psi_1R)
        decay = exchange_potential_decay(refs.psi_2, ground, self.kernel, DECAY_DISTANCES)
        t1 = symmetric_splitting(self.potential, self.params, self.grid).t1
        log('EXCHANGE', f"G={g.g:.6e} (+/- {g.est_error:.1e}), B_G1={admixture.b_g1:.6e}, "
                        f"decay slope {decay.slope:.4f}")
        payload = {
            'exchange': g.to_dict(),
            'admixture': admixture.to_dict(),
            'b_t1': two_level_admixture(refs.e_1L, refs.e_1R, t1).b_t1,
            't1': t1,
            'monopole': multipole.monopole,
            'monopole_ratio': multipole.residual_ratio,
            'potential_decay': decay.to_dict(),
            'e_1L': refs.e_1L, 'e_1R': refs.e_1R, 'e_2': refs.psi_2.energy,
        }
        return payload, None, None

    def hf_tail(self):
        refs = self._references('hf-tail')
        u = self._potential_values()
        h = assemble_hamiltonian(u, self.params)
        spectrum = solve_lowest(h, 2)
        psi_1, phi_1 = spectrum[0], spectrum[1]
        delta, epsilon = exchange_correction(h, psi_1, ExchangeSource(refs.psi_2, self.kernel))
        tail = tail_analysis(delta, refs.psi_2, u, refs.psi_2.energy, self.potential.left_center,
                             self.config.section('tail')['min_distance'], psi_1)

        # 第1励起状態への射影は交換積分と HF のシフトから直接求まる
        measured = inner_product(phi_1.psi, delta)
        g = exchange_integral(refs.psi_2, psi_1, phi_1, self.kernel).g
        predicted = g / (phi_1.energy - epsilon)
        payload = {'tail': tail.to_dict(), 'epsilon': epsilon,
                   'excited_projection': measured, 'excited_projection_predicted': predicted}
        table = pd.DataFrame({'x': tail.ratio_series[0], 'ratio': tail.ratio_series[1]})
        return payload, table, None

    def oracle2p(self):
        _require_double_well(self.potential, 'oracle2p')
        oracle = self.config.oracle_setup()
        e2 = self.params.e2
        interacting = occupation_point(oracle, e2)
        free = occupation_point(oracle, 0.0)
        log('ORACLE', f"occupation {interacting['occupation']:.4e} at e2={e2:g} "
                      f"vs {free['occupation']:.4e} without interaction")
        payload = {'interacting': interacting, 'non_interacting': free,
                   'enhancement': interacting['occupation'] / free['occupation']
                   if free['occupation'] > 0 else float('inf'),
                   'free_limit': self._free_limit(oracle)}

        e2_values = self.config.section('oracle')['e2_values']
        if e2_values:
            spec = ScanSpec('e2', tuple(e2_values), 'occupation', setup=self.config.setup())
            result = scan_e2_occupation(spec, oracle)
            payload.update(_scan_payload(result))
            return payload, result.table, result
        return payload, None, None

    def _free_limit(self, oracle: OracleSetup):
        """相互作用なしの2粒子基底エネルギーと 1体の E_0 + E_1 の差。"""
        grid = oracle.grid()
        u = sample_potential(oracle.potential, oracle.physics, grid)
        one_body = solve_lowest(assemble_hamiltonian(u, oracle.physics), 2).energies
        op = assemble_2p(TwoParticleProblem(grid, u, replace(oracle.kernel, e2=0.0), oracle.physics))
        state = solve_ground_2p(op, tol=oracle.tol)
        return {'energy': state.energy, 'one_body_sum': float(one_body[0] + one_body[1]),
                'difference': abs(state.energy - float(one_body[0] + one_body[1]))}

    def _scan(self, parameter, observable):
        return self.config.scan_spec(parameter, observable)

    def scan_splitting(self):
        return _scan_output(scan_hbar_splitting(self._scan('hbar', 't1')))

    def scan_distance(self):
        section = self.config.section('scan')
        result = scan_distance_exchange(self._scan('separation', 'G'),
                                        section['slope_target'], section['tolerance'], section['psi2'])
        return _scan_output(result)

    def scan_case1(self):
        section = self.config.section('case1')
        result = scan_hbar_exchange_case1(self._scan('hbar', 'G'), section['e_high'],
                                          section['e_low'], self.config.section('scan')['min_slope'])
        return _scan_output(result)

    def scan_case2(self):
        result = scan_case2(self._scan('hbar', 'overlap_case2'), self.config.oscillator(),
                            self.grid, self.params.mass)
        return _scan_output(result)

    def scan_case3(self):
        c = self.config.section('case3')
        spec = self._scan('hbar', 'G')
        slope = c['case1_slope']
        if slope is None and c['case1_config'] is not None:
            slope = self._case1_reference(c['case1_config'], spec.values)
        if slope is None and c['scale_core']:
            raise ValidationError("scan-case3 needs case3.case1_slope or case3.case1_config to compare against")
        result = scan_hbar_exchange_case3(spec, c['momentum'], c['envelope_width'], c['scale_core'], slope)
        return _scan_output(result)

    def _case1_reference(self, path, values):
        """同じ ħ 点でケース1を走査し、その片対数の傾きを返す。

        相対パスはまず元の設定ファイルと同じディレクトリで探す。
        """
        if self.config.source and not os.path.isabs(path):
            sibling = os.path.join(os.path.dirname(self.config.source), path)
            path = sibling if os.path.exists(sibling) else path
        config = RunConfigLoader().load_config(path, [f"scan.values={json.dumps(list(values))}"])
        section = config.section('case1')
        result = scan_hbar_exchange_case1(config.scan_spec('hbar', 'G'), section['e_high'],
                                          section['e_low'], config.section('scan')['min_slope']).require()
        log('CASE3', f"case-1 reference slope {result.fit.slope:.6g} on the same hbar points")
        return result.fit.slope


def _scan_payload(result):
    return {'fit': result.fit.to_dict(), 'extras': result.extras,
            'claims': [c.to_dict() for c in result.claims], 'passed': result.passed}


def _scan_output(result):
    return _scan_payload(result), result.table, result


def render(command, config, payload, table, fmt):
    """結果を CSV または JSON の文字列にする（同じ入力から常に同じ文字列）。"""
    if fmt == 'csv':
        if table is None:
            table = pd.DataFrame([{k: v for k, v in _flatten(payload).items()
                                   if not isinstance(v, (list, tuple, dict, np.ndarray))}])
        body = table.to_csv(index=False, float_format='%.17g', lineterminator='\n')
        if 'fit' in payload:
            fit = {k: payload['fit'][k] for k in ('slope', 'intercept', 'r2')}
            body += json.dumps(_plain(fit), sort_keys=True) + '\n'
        return body
    document = {'command': command, 'config': config.document, 'result': payload}
    if table is not None:
        document['table'] = table.to_dict(orient='list')
    return json.dumps(_plain(document), sort_keys=True, indent=2) + '\n'


def _flatten(payload, prefix=""):
    flat = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"command line: {message}")


def build_parser():
    parser = _Parser(description="Exchange-assisted tunneling experiments")
    parser.add_argument('command', choices=SUBCOMMANDS)
    parser.add_argument('--config', required=True, help="JSON run configuration")
    parser.add_argument('--out', default=None, help="output path (default: output.path or stdout)")
    parser.add_argument('--format', dest='fmt', choices=OUTPUT_FORMATS, default=None)
    parser.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                        help="dotted-path override, value parsed as JSON")
    return parser


def main(argv=None):
    """コマンドラインから1回の実行を行い、終了コードを返す。

    Returns:
        int: 0 成功、1 入力・設定エラー、2 数値計算・物理領域のエラー
    """
    try:
        args = build_parser().parse_args(argv)
        overrides = list(args.override)
        if args.fmt is not None:
            overrides.append(f"output.format={json.dumps(args.fmt)}")
        config = RunConfigLoader().load_config(args.config, overrides)
        payload, table, result = ExperimentManager(config).run(args.command)

        text = render(args.command, config, payload, table, config.output_format)
        out = args.out or config.section('output')['path']
        if out:
            directory = os.path.dirname(out)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(out, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
            log('OUTPUT', f"Wrote {out}")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()

        if result is not None:
            result.require()
        return 0
    except LabError as e:
        print(f"ERROR {e.exit_code}: {type(e).__name__}: {e}", file=sys.stderr, flush=True)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())

#!/usr/bin/env python3
"""コマンドライン（lab.py）の入出力と終了コードのテストスクリプト。"""

import contextlib
import io
import json
import os
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from lab import main

CONFIGS = os.path.join(ROOT, 'configs')


def _run(argv):
    """main を実行し、終了コードと標準エラーの内容を返す。"""
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = main(argv)
    return code, err.getvalue()


def _write_config(directory, document, name='config.json'):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f)
    return path


def test_spectrum_json_output():
    """調和振動子の基底エネルギーが JSON に 0.5 として出る。"""
    print("[TEST] Testing spectrum command...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'spectrum.json')
        code, err = _run(['spectrum', '--config', os.path.join(CONFIGS, 'harmonic.json'), '--out', out])
        assert code == 0, f"Exit code {code}: {err}"
        with open(out, encoding='utf-8') as f:
            document = json.load(f)
    assert document['command'] == 'spectrum'
    energies = document['result']['energies']
    assert len(energies) == 6
    assert abs(energies[0] - 0.5) < 1e-5, f"E_0={energies[0]}"
    assert document['result']['max_residual'] < 1e-8
    assert document['table']['index'] == list(range(6))
    assert '[OUTPUT]' in err
    print("[TEST] Spectrum command ✓")


def test_output_is_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        paths = [os.path.join(tmp, f'run{i}.json') for i in range(2)]
        for path in paths:
            code, _ = _run(['spectrum', '--config', os.path.join(CONFIGS, 'harmonic.json'),
                            '--override', 'grid.n=999', '--out', path])
            assert code == 0
        with open(paths[0], 'rb') as a, open(paths[1], 'rb') as b:
            assert a.read() == b.read(), "Two runs must produce identical bytes"
    print("[TEST] Deterministic output ✓")


def test_override_changes_config():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'k2.json')
        code, _ = _run(['spectrum', '--config', os.path.join(CONFIGS, 'harmonic.json'),
                        '--override', 'spectrum.k=2', '--override', 'grid.n=501', '--out', out])
        assert code == 0
        with open(out, encoding='utf-8') as f:
            document = json.load(f)
    assert len(document['result']['energies']) == 2
    assert document['config']['grid']['n'] == 501
    code, err = _run(['spectrum', '--config', os.path.join(CONFIGS, 'harmonic.json'),
                      '--override', 'spectrum.k'])
    assert code == 1 and 'key=value' in err
    print("[TEST] Overrides ✓")


def test_invalid_config_exits_with_1():
    """不正な値・未知のキー・欠けたファイルは終了コード1でフィールド名を示す。"""
    print("[TEST] Testing configuration errors...")
    with tempfile.TemporaryDirectory() as tmp:
        bad_width = _write_config(tmp, {
            'version': 1,
            'potential': {'kind': 'double_gaussian', 'depth_left': 4.0, 'depth_right': 4.0,
                          'width': -1.0, 'separation': 4.0},
        }, 'width.json')
        code, err = _run(['spectrum', '--config', bad_width])
        assert code == 1 and 'width' in err, f"{code}: {err}"
        assert err.strip().splitlines()[-1].startswith('ERROR 1:')

        unknown = _write_config(tmp, {'version': 1, 'grid': {'nn': 100}}, 'unknown.json')
        code, err = _run(['spectrum', '--config', unknown])
        assert code == 1 and 'grid.nn' in err, f"{code}: {err}"

        code, err = _run(['spectrum', '--config', os.path.join(tmp, 'missing.json')])
        assert code == 1

    code, err = _run(['no-such-command', '--config', os.path.join(CONFIGS, 'harmonic.json')])
    assert code == 1
    print("[TEST] Configuration errors ✓")


def test_wrong_types_exit_with_1():
    """型の違う値は例外の素通りではなく終了コード1で、フィールド名を示す。"""
    print("[TEST] Testing wrongly typed values...")
    harmonic = os.path.join(CONFIGS, 'harmonic.json')
    cases = [('physics.hbar="abc"', 'physics.hbar'), ('spectrum.k="x"', 'spectrum.k'),
             ('grid.half_width="w"', 'grid.half_width'), ('grid.n=10.5', 'grid.n'),
             ('potential.omega="fast"', 'potential.omega'), ('case3.scale_core=1', 'case3.scale_core'),
             ('scan.values=[0.1,"a"]', 'scan.values')]
    for override, field in cases:
        code, err = _run(['spectrum', '--config', harmonic, '--override', override])
        assert code == 1, f"{override}: exit {code}: {err}"
        last = err.strip().splitlines()[-1]
        assert last.startswith('ERROR 1:') and field in last, f"{override}: {last}"
        assert 'Traceback' not in err
    code, err = _run(['scan-case3', '--config', os.path.join(CONFIGS, 'case3.json'),
                      '--override', 'case3.case1_config=null'])
    assert code == 1 and 'case1_slope' in err, f"{code}: {err}"
    print("[TEST] Wrongly typed values ✓")


def test_scan_output_is_byte_identical():
    """同じ設定の走査を2回実行すると CSV がバイト単位で一致する。"""
    with tempfile.TemporaryDirectory() as tmp:
        paths = [os.path.join(tmp, f'case2_{i}.csv') for i in range(2)]
        for path in paths:
            code, err = _run(['scan-case2', '--config', os.path.join(CONFIGS, 'case2.json'), '--out', path])
            assert code == 0, err
        with open(paths[0], 'rb') as a, open(paths[1], 'rb') as b:
            assert a.read() == b.read(), "Two scan runs must produce identical bytes"
    print("[TEST] Byte-identical scan output ✓")


def test_distance_scan_command():
    """設定どおりの距離走査が 1/l² を示して終了コード0になる。"""
    print("[TEST] Testing scan-distance on the shipped config...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'distance.csv')
        code, err = _run(['scan-distance', '--config', os.path.join(CONFIGS, 'distance.json'),
                          '--override', 'grid.n=1201', '--out', out])
        assert code == 0, f"Exit code {code}: {err}"
        with open(out, encoding='utf-8') as f:
            lines = f.read().splitlines()
    assert lines[0] == 'l,G,est_error'
    fit = json.loads(lines[-1])
    assert abs(fit['slope'] + 2.0) <= 0.2 and fit['r2'] >= 0.99, f"Fit {fit}"
    print(f"[TEST] scan-distance slope {fit['slope']:.4f} ✓")


def test_hf_tail_command():
    """同梱の二重井戸設定で hf-tail の裾が ψ₂/r² に従う。"""
    print("[TEST] Testing hf-tail on the shipped config...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'tail.json')
        code, err = _run(['hf-tail', '--config', os.path.join(CONFIGS, 'reference.json'), '--out', out])
        assert code == 0, f"Exit code {code}: {err}"
        with open(out, encoding='utf-8') as f:
            tail = json.load(f)['result']['tail']
    assert abs(tail['slope'] + 2.0) <= 0.3, f"Tail {tail}"
    assert tail['window'][0] > -23.0 and tail['excess_slope'] > 0.0
    print(f"[TEST] hf-tail slope {tail['slope']:.4f} ✓")


def test_regime_error_exits_with_2():
    """井戸を囲む区間で障壁の転回点を探すと終了コード2。"""
    code, err = _run(['wkb', '--config', os.path.join(CONFIGS, 'harmonic.json'),
                      '--override', 'wkb.energy=1.0', '--override', 'grid.n=999'])
    assert code == 2, f"{code}: {err}"
    assert 'RegimeError' in err
    code, err = _run(['wkb', '--config', os.path.join(CONFIGS, 'harmonic.json')])
    assert code == 1 and 'wkb.energy' in err
    print("[TEST] Numerical errors ✓")


def test_barrier_action():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'wkb.json')
        code, err = _run(['wkb', '--config', os.path.join(CONFIGS, 'barrier.json'), '--out', out])
        assert code == 0, err
        with open(out, encoding='utf-8') as f:
            result = json.load(f)['result']
    assert abs(result['action'] - 3.141592653589793 / 2.0) < 1e-3, f"S={result['action']}"
    print("[TEST] Barrier action ✓")


def test_scan_csv_output():
    """CSV は表のヘッダで始まり、最終行がフィット係数の JSON。"""
    print("[TEST] Testing CSV scan output...")
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, 'case2.csv')
        code, err = _run(['scan-case2', '--config', os.path.join(CONFIGS, 'case2.json'),
                          '--format', 'csv', '--out', out])
        assert code == 0, err
        with open(out, encoding='utf-8') as f:
            lines = f.read().splitlines()
    assert lines[0] == 'hbar,overlap,normalized'
    assert len(lines) == 1 + 8 + 1
    fit = json.loads(lines[-1])
    assert sorted(fit) == ['intercept', 'r2', 'slope']
    assert abs(fit['slope'] + 2.0) <= 0.02
    print("[TEST] CSV scan output ✓")


def main_tests():
    print("=" * 50)
    print("Command Line Test")
    print("=" * 50)

    try:
        test_spectrum_json_output()
        test_output_is_deterministic()
        test_override_changes_config()
        test_invalid_config_exits_with_1()
        test_wrong_types_exit_with_1()
        test_regime_error_exits_with_2()
        test_barrier_action()
        test_scan_csv_output()
        test_scan_output_is_byte_identical()
        test_distance_scan_command()
        test_hf_tail_command()

        print("\n" + "=" * 50)
        print("✅ All command line tests passed!")
        print("=" * 50)

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        raise


if __name__ == "__main__":
    main_tests()

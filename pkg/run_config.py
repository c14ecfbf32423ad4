"""JSON形式の実行設定を読み込み、検証して既定値を展開するモジュール。

* RunConfigLoader: 設定ファイルの読み込み、ドット区切りの上書き、品質検証
* RunConfig: 検証済みの設定と、各物理モジュール用のオブジェクトへの変換
"""

import copy
import json
import os
from dataclasses import MISSING, dataclass, fields, replace

from physics_modules.console import log
from physics_modules.errors import ValidationError
from physics_modules.exchange import ExchangeKernel
from physics_modules.experiments import ModelSetup, OracleSetup, OscillatorOverlapParams, ScanSpec
from physics_modules.grid import Grid
from physics_modules.potentials import POTENTIAL_KINDS, PhysicsParams, default_half_width

CONFIG_VERSION = 1

DEFAULTS = {
    'version': CONFIG_VERSION,
    'physics': {'hbar': 1.0, 'mass': 1.0, 'e2': 1.0},
    'potential': {'kind': 'harmonic', 'omega': 1.0},
    'grid': {'n': 2000, 'half_width': None, 'x_min': None, 'x_max': None},
    'kernel': {'soft': None},
    'spectrum': {'k': 6, 'psi2_index': None},
    'wkb': {'energy': None, 'bracket': None},
    'tail': {'min_distance': 0.0},
    'oracle': {'n': 120, 'half_width': None, 'tol': 1e-10, 'e2_values': None},
    'scan': {'parameter': 'hbar', 'values': None, 'observable': None,
             'slope_target': -2.0, 'tolerance': 0.2, 'min_slope': 0.0, 'psi2': 'resonant'},
    'case1': {'e_high': -0.5, 'e_low': None},
    'case2': {'omega': 1.0, 'p': 2.0, 'xi0': 0.0},
    'case3': {'momentum': 0.005, 'envelope_width': None, 'scale_core': True,
              'case1_slope': None, 'case1_config': None},
    'output': {'path': None, 'format': 'json'},
}

OUTPUT_FORMATS = ('csv', 'json')

FIELD_TYPES = {
    'physics': {'hbar': 'number', 'mass': 'number', 'e2': 'number'},
    'grid': {'n': 'integer', 'half_width': 'number', 'x_min': 'number', 'x_max': 'number'},
    'kernel': {'soft': 'number'},
    'spectrum': {'k': 'integer', 'psi2_index': 'integer'},
    'wkb': {'energy': 'number', 'bracket': 'numbers'},
    'tail': {'min_distance': 'number'},
    'oracle': {'n': 'integer', 'half_width': 'number', 'tol': 'number', 'e2_values': 'numbers'},
    'scan': {'parameter': 'text', 'values': 'numbers', 'observable': 'text', 'slope_target': 'number',
             'tolerance': 'number', 'min_slope': 'number', 'psi2': 'text'},
    'case1': {'e_high': 'number', 'e_low': 'number'},
    'case2': {'omega': 'number', 'p': 'number', 'xi0': 'number'},
    'case3': {'momentum': 'number', 'envelope_width': 'number', 'scale_core': 'flag',
              'case1_slope': 'number', 'case1_config': 'text'},
    'output': {'path': 'text', 'format': 'text'},
}
_KIND_NAMES = {'number': "a number", 'integer': "an integer", 'numbers': "a list of numbers",
               'text': "a string", 'flag': "true or false"}


def _is_kind(value, kind):
    if kind == 'flag':
        return isinstance(value, bool)
    if isinstance(value, bool):
        return False
    if kind == 'number':
        return isinstance(value, (int, float))
    if kind == 'integer':
        return isinstance(value, int)
    if kind == 'numbers':
        return isinstance(value, list) and all(_is_kind(v, 'number') for v in value)
    return isinstance(value, str)


def _merge(defaults, document, path=""):
    """既定値に文書を重ね、未知のキーはドット区切りのパスで拒否する。"""
    merged = copy.deepcopy(defaults)
    for key, value in document.items():
        dotted = f"{path}{key}"
        if key not in defaults:
            raise ValidationError(f"unknown configuration key: {dotted}")
        if isinstance(defaults[key], dict) and dotted != 'potential':
            if not isinstance(value, dict):
                raise ValidationError(f"configuration section {dotted} must be an object")
            merged[key] = _merge(defaults[key], value, dotted + ".")
        else:
            merged[key] = value
    return merged


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass(frozen=True)
class RunConfig:
    """検証済みの設定（既定値展開済み）。"""

    document: dict
    source: str = None

    def section(self, name):
        return self.document[name]

    def physics(self):
        return PhysicsParams(**self.document['physics'])

    def potential(self):
        spec = dict(self.document['potential'])
        kind = spec.pop('kind')
        return POTENTIAL_KINDS[kind](**spec)

    def grid(self, potential=None):
        g = self.document['grid']
        if g['x_min'] is not None or g['x_max'] is not None:
            return Grid(g['x_min'], g['x_max'], g['n'])
        potential = self.potential() if potential is None else potential
        half_width = g['half_width'] if g['half_width'] is not None else default_half_width(potential)
        return Grid.symmetric(half_width, g['n'])

    def kernel(self):
        soft = self.document['kernel']['soft']
        if soft is None:
            soft = getattr(self.potential(), 'width', 1.0)
        return ExchangeKernel(e2=self.document['physics']['e2'], soft=soft)

    def setup(self):
        g = self.document['grid']
        return ModelSetup(physics=self.physics(), potential=self.potential(), n=g['n'],
                          half_width=g['half_width'], kernel=self.kernel(),
                          psi2_index=self.document['spectrum']['psi2_index'])

    def oracle_setup(self):
        o = self.document['oracle']
        return OracleSetup(physics=self.physics(), potential=self.potential(), n=o['n'],
                           kernel=self.kernel(), half_width=o['half_width'],
                           psi2_index=self.document['spectrum']['psi2_index'], tol=o['tol'])

    def scan_spec(self, parameter, observable):
        s = self.document['scan']
        if s['values'] is None:
            raise ValidationError("scan.values must be provided for scan subcommands")
        if s['parameter'] != parameter:
            raise ValidationError(f"scan.parameter must be {parameter!r} for this subcommand, got {s['parameter']!r}")
        return ScanSpec(parameter=parameter, values=tuple(s['values']),
                        observable=s['observable'] or observable, setup=self.setup())

    def oscillator(self):
        return OscillatorOverlapParams(**self.document['case2'])

    @property
    def output_format(self):
        return self.document['output']['format']


class RunConfigLoader:
    """実行設定の読み込みを担当するクラス。

    相対パスが見つからない場合は LAB_CONFIG_DIR（既定 'configs'）の下を探す。
    """

    def __init__(self):
        self.config_dir = os.getenv('LAB_CONFIG_DIR', 'configs')

    def resolve_path(self, path):
        if os.path.exists(path) or os.path.isabs(path):
            return path
        candidate = os.path.join(self.config_dir, path)
        return candidate if os.path.exists(candidate) else path

    def load(self, path):
        """設定ファイルを読み込んで辞書を返す。

        Raises:
            ValidationError: ファイルが存在しない、またはJSONとして不正な場合
        """
        resolved = self.resolve_path(path)
        try:
            with open(resolved, encoding='utf-8') as f:
                document = json.load(f)
        except FileNotFoundError as e:
            raise ValidationError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"config file {resolved} is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise ValidationError("config document must be a JSON object")
        log('CONFIG', f"Loaded {resolved}")
        return document

    def apply_overrides(self, document, overrides):
        """'a.b.c=value' 形式の上書きを適用する。値はJSONとして解釈し、失敗したら文字列とする。"""
        document = copy.deepcopy(document)
        for item in overrides or ():
            if '=' not in item:
                raise ValidationError(f"override must look like key=value, got {item!r}")
            key, text = item.split('=', 1)
            parts = key.strip().split('.')
            if not all(parts):
                raise ValidationError(f"override key is malformed: {key!r}")
            target = document
            for part in parts[:-1]:
                node = target.setdefault(part, {})
                if not isinstance(node, dict):
                    raise ValidationError(f"override path {key} crosses a non-object value")
                target = node
            target[parts[-1]] = _parse_value(text)
            log('CONFIG', f"Override {key} = {target[parts[-1]]!r}")
        return document

    def validate_config_quality(self, document):
        """設定を検証し、既定値を展開した RunConfig を返す。

        Raises:
            ValidationError: 版数不一致、未知のキー、不正な値（フィールド名を含める）
        """
        version = document.get('version', CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValidationError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})")
        merged = _merge(DEFAULTS, document)
        if 'potential' in document:
            merged['potential'] = dict(document['potential'])
        self._check_potential(merged['potential'])
        self._check_types(merged)

        if merged['output']['format'] not in OUTPUT_FORMATS:
            raise ValidationError(f"output.format must be one of {OUTPUT_FORMATS}, got {merged['output']['format']!r}")
        if merged['spectrum']['k'] < 1:
            raise ValidationError(f"spectrum.k must be >= 1, got {merged['spectrum']['k']}")
        if merged['tail']['min_distance'] < 0:
            raise ValidationError(f"tail.min_distance must be >= 0, got {merged['tail']['min_distance']}")

        config = RunConfig(merged)
        # 値の検証は各データクラスの __post_init__ が行う
        for section, build in (('physics', config.physics), ('potential', config.potential),
                               ('grid', config.grid), ('kernel', config.kernel)):
            try:
                build()
            except ValidationError:
                raise
            except (TypeError, ValueError) as e:
                raise ValidationError(f"{section}: invalid value ({e})") from e
        return config

    def _check_types(self, merged):
        """各フィールドの型を確かめる。None は既定値が None のフィールドにだけ許す。"""
        for section, names in FIELD_TYPES.items():
            for name, kind in names.items():
                value = merged[section][name]
                dotted = f"{section}.{name}"
                if value is None and DEFAULTS[section][name] is None:
                    continue
                if not _is_kind(value, kind):
                    raise ValidationError(f"{dotted} must be {_KIND_NAMES[kind]}, got {value!r}")
        for key, value in merged['potential'].items():
            if key != 'kind' and not _is_kind(value, 'number'):
                raise ValidationError(f"potential.{key} must be a number, got {value!r}")

    def _check_potential(self, spec):
        if not isinstance(spec, dict) or 'kind' not in spec:
            raise ValidationError("potential.kind is required")
        kind = spec['kind']
        if kind not in POTENTIAL_KINDS:
            raise ValidationError(f"potential.kind must be one of {sorted(POTENTIAL_KINDS)}, got {kind!r}")
        allowed = {f.name for f in fields(POTENTIAL_KINDS[kind])}
        for key in spec:
            if key != 'kind' and key not in allowed:
                raise ValidationError(f"unknown configuration key: potential.{key}")
        missing = sorted(f.name for f in fields(POTENTIAL_KINDS[kind])
                         if f.default is MISSING and f.default_factory is MISSING and f.name not in spec)
        if missing:
            raise ValidationError(f"potential.{missing[0]} is required for kind {kind!r}")

    def load_config(self, path, overrides=None):
        """読み込み・上書き・検証をまとめて行う。"""
        document = self.apply_overrides(self.load(path), overrides)
        config = replace(self.validate_config_quality(document), source=self.resolve_path(path))
        log('CONFIG', f"potential={config.document['potential']['kind']}, grid.n={config.document['grid']['n']}")
        return config

"""タグ付き進捗行の出力。

結果ドキュメントを標準出力に書くため、進捗は標準エラーに流す。
LAB_VERBOSE=0 で抑止できる。
"""

import os
import sys


def verbose():
    return os.getenv('LAB_VERBOSE', '1') != '0'


def log(tag, message):
    """'[TAG] message' 形式の1行を標準エラーに出力する。"""
    if verbose():
        print(f"[{tag}] {message}", file=sys.stderr, flush=True)

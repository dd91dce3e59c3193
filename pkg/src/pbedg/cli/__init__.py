# Copyright pbe-dg contributors. All Rights Reserved.

from .__main__ import build_parser, main

__all__ = [
    "build_parser",
    "main",
]

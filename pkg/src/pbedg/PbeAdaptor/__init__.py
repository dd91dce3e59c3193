# Copyright pbe-dg contributors. All Rights Reserved.

from .__main__ import main
from .adaptor import PbeAdaptor

__all__ = [
    "PbeAdaptor",
    "main",
]

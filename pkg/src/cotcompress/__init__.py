"""Multi-round chain-of-thought compression, dataset building and performance estimation."""

from __future__ import annotations

__version__ = "0.1.0"

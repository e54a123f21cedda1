"""Closed-form spray and curvature formulas for spherically symmetric Finsler
metrics F = |y| psi(|x|, <x,y>/|y|), cross-checked against jet-based oracles."""

__version__ = "0.1.0"

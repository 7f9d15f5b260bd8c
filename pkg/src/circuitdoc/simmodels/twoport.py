"""ABCD (chain) matrices for lumped elements and lossless lines.

Every function returns an array of shape ``(n_freq, 2, 2)`` so cascades are
a batched matrix product over the frequency axis.
"""

from __future__ import annotations

import numpy as np

S21_FLOOR_DB = -300.0


def identity(freq: np.ndarray) -> np.ndarray:
    m = np.zeros((len(freq), 2, 2), dtype=complex)
    m[:, 0, 0] = m[:, 1, 1] = 1.0
    return m


def series(z: np.ndarray) -> np.ndarray:
    m = identity(z)
    m[:, 0, 1] = z
    return m


def shunt(y: np.ndarray) -> np.ndarray:
    m = identity(y)
    m[:, 1, 0] = y
    return m


def branch_impedance(freq, r=None, l=None, c=None) -> np.ndarray:
    """R, L and C in series; an absent or zero C term is a short, not an open."""
    w = 2 * np.pi * np.asarray(freq, dtype=float)
    z = np.zeros(len(w), dtype=complex)
    if r:
        z += r
    if l:
        z += 1j * w * l
    if c:
        z += 1.0 / (1j * w * c)
    return z


def tank_admittance(freq, r=None, l=None, c=None) -> np.ndarray:
    """R, L and C in parallel; absent terms contribute nothing."""
    w = 2 * np.pi * np.asarray(freq, dtype=float)
    y = np.zeros(len(w), dtype=complex)
    if r:
        y += 1.0 / r
    if l:
        y += 1.0 / (1j * w * l)
    if c:
        y += 1j * w * c
    return y


def tline(freq, z0: float, theta_deg: float, f0: float) -> np.ndarray:
    """Lossless line with electrical length ``theta_deg`` at ``f0``."""
    theta = np.deg2rad(theta_deg) * np.asarray(freq, dtype=float) / f0
    m = np.empty((len(theta), 2, 2), dtype=complex)
    m[:, 0, 0] = m[:, 1, 1] = np.cos(theta)
    m[:, 0, 1] = 1j * z0 * np.sin(theta)
    m[:, 1, 0] = 1j * np.sin(theta) / z0
    return m


def cascade(freq, stages) -> np.ndarray:
    total = identity(freq)
    for m in stages:
        total = total @ m
    return total


def s21(abcd: np.ndarray, z_source: float = 50.0, z_load: float = 50.0) -> np.ndarray:
    """Transducer S21 between real source and load terminations."""
    a, b, c, d = abcd[:, 0, 0], abcd[:, 0, 1], abcd[:, 1, 0], abcd[:, 1, 1]
    return 2 * np.sqrt(z_source * z_load) / (a * z_load + b + c * z_source * z_load + d * z_source)


def to_db(s: np.ndarray) -> np.ndarray:
    mag = np.abs(s)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag)
    return np.where(np.isfinite(db), np.maximum(db, S21_FLOOR_DB), S21_FLOOR_DB)

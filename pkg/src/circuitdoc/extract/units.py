"""Engineering-unit normalization to SI base units.

Scaling is done in :class:`decimal.Decimal` so ``0.02 pF`` becomes exactly
the double nearest to ``2e-14``, not ``0.02 * 1e-12``.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

PREFIXES: dict[str, Decimal] = {
    "f": Decimal("1e-15"),
    "p": Decimal("1e-12"),
    "n": Decimal("1e-9"),
    "µ": Decimal("1e-6"),
    "μ": Decimal("1e-6"),
    "u": Decimal("1e-6"),
    "m": Decimal("1e-3"),
    "": Decimal(1),
    "k": Decimal("1e3"),
    "M": Decimal("1e6"),
    "G": Decimal("1e9"),
}

# longest first so "Hz" is tried before "H"
BASE_UNITS = ("Hz", "F", "H", "Ω", "V", "A", "W", "m")
LOG_UNITS = ("dBm", "dB")
CANONICAL_UNITS = frozenset(BASE_UNITS + LOG_UNITS)

_OHM_ALIASES = ("ohms", "ohm", "Ohms", "Ohm", "OHM", "Ω")


def normalize_unit_symbol(text: str) -> str:
    text = text.strip()
    for alias in _OHM_ALIASES:
        if text.endswith(alias):
            return text[: -len(alias)] + "Ω"
    return text


def parse_unit(text: str) -> tuple[Decimal, str] | None:
    """Return ``(scale, canonical_unit)`` for a unit token, or None if unknown."""
    text = normalize_unit_symbol(text)
    if text in LOG_UNITS:
        return Decimal(1), text
    for base in BASE_UNITS:
        if text.endswith(base):
            prefix = text[: -len(base)]
            if prefix in PREFIXES:
                return PREFIXES[prefix], base
    return None


def to_si(number: str, scale: Decimal) -> float:
    number = number.replace("−", "-").replace("+", "")
    try:
        return float(Decimal(number) * scale)
    except InvalidOperation:
        raise ValueError(f"not a decimal number: {number!r}") from None

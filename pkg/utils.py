"""
Small helpers: exact rational parsing/formatting and seed derivation
"""
import hashlib
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Iterable, Optional, Tuple

def parse_value(raw: Any) -> Fraction:
    """Parse an exact rational from int, Fraction, "p/q", integer or finite decimal string.

    Floats are converted through their shortest repr so 0.1 becomes 1/10.
    Raises ValueError on anything else.
    """
    if isinstance(raw, bool):
        raise ValueError(f"boolean is not a value: {raw!r}")
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        raw = repr(raw)
    if not isinstance(raw, str):
        raise ValueError(f"unsupported value type: {type(raw).__name__}")

    text = raw.strip()
    if not text:
        raise ValueError("empty value")
    if '/' in text:
        num, _, den = text.partition('/')
        try:
            numerator, denominator = int(num.strip()), int(den.strip())
        except ValueError:
            raise ValueError(f"malformed rational: {raw!r}") from None
        if denominator == 0:
            raise ValueError(f"zero denominator: {raw!r}")
        return Fraction(numerator, denominator)
    try:
        decimal = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"malformed number: {raw!r}") from None
    if not decimal.is_finite():
        raise ValueError(f"non-finite number: {raw!r}")
    return Fraction(decimal)

def format_value(value: Optional[Fraction]) -> str:
    """Format as "p/q" (or "p" for integers); None means unbounded"""
    if value is None:
        return "unbounded"
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"

def derive_seed(base_seed: int, index: int) -> int:
    """Derive a 64-bit seed for job `index` of a campaign"""
    digest = hashlib.sha256(f"{base_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], 'big')

def lex_pairs(items: Iterable[int]) -> Iterable[Tuple[int, int]]:
    """All pairs (a, b) with a < b in lexicographic order"""
    ordered = sorted(items)
    for x, a in enumerate(ordered):
        for b in ordered[x + 1:]:
            yield a, b

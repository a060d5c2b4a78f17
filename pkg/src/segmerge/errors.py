"""Error taxonomy.

Every exception carries a stable ``code`` string; the CLI prints errors as
``ERROR <code>: <detail>`` and scripts key off the code, so codes are part of
the public surface and must not change.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    code = "EngineError"


class ConfigError(EngineError, ValueError):
    code = "ConfigError"


class SNotDividingT(ConfigError):
    """Frame count is not an exact multiple of the segment count."""

    code = "SNotDividingT"


class CNotDividingD(ConfigError):
    """Head count does not divide the channel dimension."""

    code = "CNotDividingD"


class MTooLarge(ConfigError):
    """Per-segment token budget exceeds the tokens available in a segment."""

    code = "MTooLarge"


class ETooLarge(ConfigError):
    """More global layers requested than the features carry."""

    code = "ETooLarge"


class FormatError(EngineError, ValueError):
    """Base class for binary container violations."""

    code = "FormatError"


class BadMagic(FormatError):
    code = "BadMagic"


class UnsupportedVersion(FormatError):
    code = "UnsupportedVersion"


class InvalidHeader(FormatError):
    """Header parses but declares impossible extents or reserved bits."""

    code = "InvalidHeader"


class TruncatedPayload(FormatError):
    """Payload byte count does not match the header extents."""

    code = "TruncatedPayload"


class NonFiniteValue(FormatError):
    """A NaN or Inf was found at ingest; reports the offending index."""

    code = "NonFiniteValue"

    def __init__(self, array_name: str, index: tuple[int, ...]):
        self.array_name = array_name
        self.index = index
        super().__init__(f"non-finite value in {array_name} at index {index}")


class ZeroNormHead(EngineError, ValueError):
    """A head slice has zero norm, making its cosine undefined."""

    code = "ZeroNormHead"


class InputTooLargeForOracle(EngineError, ValueError):
    """Oracle guard: input exceeds the quadratic reference's size cap."""

    code = "InputTooLargeForOracle"


class DimensionMismatch(EngineError, ValueError):
    code = "DimensionMismatch"

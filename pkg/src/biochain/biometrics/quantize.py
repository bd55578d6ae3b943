"""Template serialization to the on-chain byte encodings.

``int16_scaled`` maps ``[min, max]`` affinely onto the codes
``[-32767, 32767]`` around the range midpoint; ``float32`` is IEEE single
precision. Both are little-endian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteInput

ENCODINGS = ("int16_scaled", "float32")
_CODE_MAX = 32767


@dataclass(frozen=True)
class QuantizedTemplate:
    payload: bytes
    encoding: str
    scale: float = 1.0
    offset: float = 0.0

    @property
    def count(self) -> int:
        return len(self.payload) // (2 if self.encoding == "int16_scaled" else 4)


def quantize(vector, encoding: str = "int16_scaled") -> QuantizedTemplate:
    v = np.asarray(vector, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("cannot quantize non-finite values")
    if encoding == "float32":
        return QuantizedTemplate(v.astype("<f4").tobytes(), encoding)
    if encoding != "int16_scaled":
        raise ValueError(f"encoding must be one of {ENCODINGS}")
    if v.size == 0:
        return QuantizedTemplate(b"", encoding)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        # constant vector: all codes zero decode to the constant
        return QuantizedTemplate(np.zeros(v.size, "<i2").tobytes(), encoding, 1.0, lo)
    offset = (lo + hi) / 2
    scale = (hi - lo) / (2 * _CODE_MAX)
    codes = np.clip(np.rint((v - offset) / scale), -_CODE_MAX, _CODE_MAX).astype("<i2")
    return QuantizedTemplate(codes.tobytes(), encoding, scale, offset)


def dequantize(template: QuantizedTemplate) -> np.ndarray:
    if template.encoding == "float32":
        return np.frombuffer(template.payload, dtype="<f4").astype(float)
    if template.encoding != "int16_scaled":
        raise ValueError(f"encoding must be one of {ENCODINGS}")
    codes = np.frombuffer(template.payload, dtype="<i2").astype(float)
    return codes * template.scale + template.offset

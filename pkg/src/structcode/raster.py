"""Bit-exact 8-bit grayscale image files: binary PGM (P5) and PNG."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import ImageError


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise ImageError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1  # one whitespace byte ends the header


def decode_pgm(data: bytes) -> np.ndarray:
    (magic, w, h, maxval), start = _pgm_tokens(data, 4)
    if magic != b"P5":
        raise ImageError("only binary PGM (P5) is supported")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ImageError("only 8-bit PGM is supported")
    body = data[start:start + w * h]
    if len(body) != w * h:
        raise ImageError("truncated PGM data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def encode_pgm(img: np.ndarray) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()


def read_image(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] == b"P5":
        return decode_pgm(data)
    from PIL import Image

    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode != "L":
                im = im.convert("L")
            return np.array(im, dtype=np.uint8)
    except OSError as exc:
        raise ImageError(f"cannot read image {path}: {exc}") from None


def write_image(img: np.ndarray, path) -> None:
    path = Path(path)
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if path.suffix.lower() in (".pgm", ".pnm"):
        path.write_bytes(encode_pgm(img))
        return
    from PIL import Image

    Image.fromarray(img).save(path, format="PNG")

"""Image and raw-grid file I/O.

Supported formats: PGM (P2/P5, maxval up to 65535) read and write, PNG
(8/16-bit gray or RGB) read and 8-bit write, plus a raw float64 grid format
used to store signed or full-precision fields.
"""
import os
import struct

import numpy as np

from .imaging import as_image

_LUMA = np.array([0.299, 0.587, 0.114])
_GRID_HEADER = struct.Struct("<QQ")


class ImageFormatError(ValueError):
    pass


def _pgm_tokens(data):
    """Yield (token, end_offset) pairs from a PGM header, skipping comments."""
    pos = 0
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def read_pgm(path):
    """Read a PGM file, returning ``(raw integer array, maxval)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        width, _ = next(tokens)
        height, _ = next(tokens)
        maxval, end = next(tokens)
        width, height, maxval = int(width), int(height), int(maxval)
    except (StopIteration, ValueError) as exc:
        raise ImageFormatError(f"{path}: malformed PGM header") from exc
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a grayscale PGM (magic {magic!r})")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: zero-sized image")
    if not 0 < maxval <= 65535:
        raise ImageFormatError(f"{path}: unsupported bit depth (maxval {maxval})")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = data[end + 1:end + 1 + count * dtype.itemsize]
        if len(body) != count * dtype.itemsize:
            raise ImageFormatError(f"{path}: truncated pixel data")
        raw = np.frombuffer(body, dtype=dtype).astype(np.int64)
    else:
        values = data[end:].split()
        if len(values) < count:
            raise ImageFormatError(f"{path}: truncated pixel data")
        raw = np.array([int(v) for v in values[:count]], dtype=np.int64)
    if raw.max(initial=0) > maxval:
        raise ImageFormatError(f"{path}: pixel value exceeds maxval")
    return raw.reshape(height, width), maxval


def read_png(path):
    """Read a PNG with Pillow, returning ``(raw array, maxval)``.

    RGB(A) input is reduced to gray with Rec.601 luminance weights.
    """
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        im.load()
        mode = im.mode
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            raw = np.asarray(im, dtype=np.float64)
            return raw, 65535
        if mode in ("RGB", "RGBA", "P", "LA", "CMYK", "YCbCr"):
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            return rgb @ _LUMA, 255
        if mode in ("L", "1"):
            return np.asarray(im.convert("L"), dtype=np.float64), 255
        raise ImageFormatError(f"{path}: unsupported PNG mode {mode}")


def load_image(path):
    """Load a grayscale image scaled to ``[0, 1]`` by the format's max value.

    Grid files (``.f64``) are returned as stored and must already lie in
    ``[0, 1]``.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".f64":
        return as_image(load_grid(path))
    if ext in (".pgm", ".pnm"):
        raw, maxval = read_pgm(path)
    elif ext == ".png":
        raw, maxval = read_png(path)
    else:
        raise ImageFormatError(f"{path}: unsupported image format")
    if raw.size == 0:
        raise ImageFormatError(f"{path}: zero-sized image")
    img = np.asarray(raw, dtype=np.float64) / float(maxval)
    return np.clip(img, 0.0, 1.0)


def load_labels(path):
    """Load a label map: the raw integer pixel values of an image file.

    Grid files (``.f64``) are rounded to the nearest integer.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".pnm"):
        raw, _ = read_pgm(path)
    elif ext == ".png":
        raw, _ = read_png(path)
    elif ext == ".f64":
        raw = load_grid(path)
    else:
        raise ImageFormatError(f"{path}: unsupported label-map format")
    return np.rint(raw).astype(np.int64)


def to_uint8(img):
    """Quantize ``[0, 1]`` values with round-half-up: ``floor(255 v + 0.5)``."""
    arr = as_image(img)
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write an 8-bit grayscale PGM (P5) or PNG depending on the suffix."""
    path = os.fspath(path)
    pixels = to_uint8(img)
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".pnm"):
        height, width = pixels.shape
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (width, height))
            fh.write(pixels.tobytes())
    elif ext == ".png":
        from PIL import Image as PILImage

        PILImage.fromarray(pixels, mode="L").save(path)
    else:
        raise ImageFormatError(f"{path}: unsupported output format")


def save_labels(labels, path):
    """Write a binary mask as 0/255 8-bit PGM or PNG."""
    labels = np.asarray(labels)
    save_image((labels != 0).astype(np.float64), path)


def display_normalize(field):
    """Affinely remap a field to ``[0, 1]``; constant fields map to 0."""
    field = np.asarray(field, dtype=np.float64)
    lo, hi = float(field.min()), float(field.max())
    if hi - lo <= 0.0:
        return np.zeros_like(field)
    return np.clip((field - lo) / (hi - lo), 0.0, 1.0)


def save_grid(field, path):
    """Dump a float64 field: 16-byte header (rows, cols as little-endian
    uint64) followed by row-major little-endian float64 values."""
    field = np.ascontiguousarray(field, dtype="<f8")
    if field.ndim != 2:
        raise ValueError("grid must be 2D")
    with open(path, "wb") as fh:
        fh.write(_GRID_HEADER.pack(*field.shape))
        fh.write(field.tobytes())


def load_grid(path):
    with open(path, "rb") as fh:
        header = fh.read(_GRID_HEADER.size)
        if len(header) != _GRID_HEADER.size:
            raise ImageFormatError(f"{path}: truncated grid header")
        rows, cols = _GRID_HEADER.unpack(header)
        body = fh.read()
    if len(body) != rows * cols * 8:
        raise ImageFormatError(f"{path}: grid size mismatch")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)

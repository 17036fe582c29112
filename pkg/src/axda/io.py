"""PGM images and fixed-format CSV tables."""

import os

import numpy as np

from .exceptions import FormatError


def _tokens(data, start, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    i = start
    n = len(data)
    while len(out) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        out.append(data[i:j])
        i = j
    return out, i


def read_pgm(path):
    """Read a binary (P5) or ASCII (P2) greymap as floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"{path} is not a PGM file")
    try:
        (w, h, maxval), pos = _tokens(data, 2, 3)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"bad PGM header in {path}") from exc
    if w <= 0 or h <= 0 or not (0 < maxval < 65536):
        raise FormatError(f"bad PGM dimensions in {path}")
    if magic == b"P5":
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos) \
            if len(data) - pos >= w * h * dtype.itemsize else None
        if raw is None:
            raise FormatError(f"truncated PGM raster in {path}")
    else:
        vals, _ = _tokens(data, pos, w * h)
        raw = np.array([int(v) for v in vals])
    return raw.reshape(h, w).astype(float) / maxval


def write_pgm(path, image):
    """Write an image with values in [0, 1] as 8-bit binary PGM."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    h, w = img.shape
    raster = np.round(img * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return "nan"
    return "%.17g" % float(v)


def write_csv(path, header, rows):
    """CSV with a header row and 17-significant-digit floats."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_matrix_csv(path, matrix):
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = [f"c{j}" for j in range(m.shape[1])]
    write_csv(path, header, m.tolist())


def read_csv(path):
    """Return (header, float rows) of a file written by :func:`write_csv`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = [[float(x) for x in line.split(",")] for line in lines[1:] if line]
    return header, np.array(rows)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path

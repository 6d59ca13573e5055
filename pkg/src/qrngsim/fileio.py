"""On-disk formats: sample files, lookup-curve CSV, bit output, manifests.

Quantized samples travel either as CSV (one bin index per line, no header)
or as packed binary with a 16-byte header: magic ``QRS1``, uint32 bit depth,
uint64 sample count (little-endian), followed by one uint16 per sample.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .extractors import BitBuffer
from .reduction import GammaCurve, GammaCurvePoint, ReductionReport

SAMPLE_MAGIC = b"QRS1"
_HEADER = struct.Struct("<4sIQ")


def write_samples_csv(indices, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(indices, dtype=np.int64):
            fh.write(f"{int(v)}\n")


def read_samples_csv(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise DataFormatError(
                    f"not an integer sample: {line!r}", line=ln
                ) from None
    if not values:
        raise DataFormatError("sample file contains no samples")
    return np.array(values, dtype=np.int64)


def write_samples_binary(indices, n_bits: int, path) -> None:
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= 1 << n_bits):
        raise ValueError("sample outside the quantizer range")
    if n_bits > 16:
        raise ValueError("binary sample format supports up to 16 bits")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SAMPLE_MAGIC, n_bits, indices.size))
        fh.write(indices.astype("<u2").tobytes())


def read_samples_binary(path) -> tuple[np.ndarray, int]:
    """Returns (indices, n_bits)."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError("binary sample file shorter than its header")
    magic, n_bits, count = _HEADER.unpack_from(blob)
    if magic != SAMPLE_MAGIC:
        raise DataFormatError(f"bad magic {magic!r}, expected {SAMPLE_MAGIC!r}")
    expected = _HEADER.size + 2 * count
    if len(blob) != expected:
        raise DataFormatError(
            f"binary sample file has {len(blob)} bytes, expected {expected}"
        )
    data = np.frombuffer(blob, dtype="<u2", offset=_HEADER.size).astype(np.int64)
    if data.size and data.max() >= 1 << n_bits:
        raise DataFormatError("sample value exceeds the declared bit depth")
    return data, int(n_bits)


def read_samples(path, n_bits: int | None = None) -> tuple[np.ndarray, int | None]:
    """Dispatch on the magic: binary if it matches, CSV otherwise."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == SAMPLE_MAGIC:
        return read_samples_binary(path)
    return read_samples_csv(path), n_bits


CURVE_HEADER = ("B", "gamma_nq_gamma", "n_bits", "sigma_s", "sigma_zeta")


def write_curve_csv(curve: GammaCurve, path) -> None:
    """Lookup-table export; grid points that lost bimodality are omitted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for p in curve.points:
            if not p.bimodal or not math.isfinite(p.b_value):
                continue
            writer.writerow([
                f"{p.b_value:.9g}",
                f"{p.gamma_nq_gamma:.9g}",
                p.n_bits,
                f"{p.sigma_s:.9g}",
                f"{p.sigma_zeta:.9g}",
            ])


def read_curve_csv(path) -> GammaCurve:
    points = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty curve file", line=1) from None
        if [h.strip() for h in header] != list(CURVE_HEADER):
            raise DataFormatError(
                f"expected header {','.join(CURVE_HEADER)}", line=1
            )
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                points.append(GammaCurvePoint(
                    b_value=float(row[0]),
                    gamma_nq_gamma=float(row[1]),
                    n_bits=int(row[2]),
                    sigma_s=float(row[3]),
                    sigma_zeta=float(row[4]),
                ))
            except (ValueError, IndexError):
                raise DataFormatError("malformed curve row", line=ln) from None
    if len(points) < 2:
        raise DataFormatError("curve file needs at least two rows")
    return GammaCurve(points)


def write_report(report: ReductionReport, path, csv_path=None) -> None:
    Path(path).write_text(report.to_kv_text(), encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(report.to_csv_row(), encoding="utf-8")


def read_report(path) -> ReductionReport:
    try:
        return ReductionReport.from_kv_text(
            Path(path).read_text(encoding="utf-8")
        )
    except (ValueError, TypeError) as exc:
        raise DataFormatError(f"bad report file: {exc}") from None


def write_bits(buf: BitBuffer, path, metadata: dict) -> None:
    """Packed LSB-first bit file plus a key=value sidecar describing it."""
    Path(path).write_bytes(buf.data)
    lines = [f"{k}={v}" for k, v in metadata.items()]
    Path(str(path) + ".meta.txt").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )


def read_seed_bits(path, length: int) -> BitBuffer:
    blob = Path(path).read_bytes()
    if len(blob) * 8 < length:
        raise DataFormatError(
            f"seed file holds {len(blob) * 8} bits, need {length}"
        )
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8),
                         bitorder="little")[:length]
    return BitBuffer.from_bits(bits)


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"bad manifest: {exc}") from None

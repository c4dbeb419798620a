"""Binary kernel/field dumps, CSV emission, and hashed manifests."""

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

KERNEL_MAGIC = b"CDK1"
FIELD_MAGIC = b"CDF1"


def write_kernel_binary(path, kernel, k):
    """Row-major kernel dump: magic, k, n_y, element-type code, payload."""
    kernel = np.ascontiguousarray(kernel)
    code = b"D" if np.iscomplexobj(kernel) else b"d"
    with open(path, "wb") as fh:
        fh.write(KERNEL_MAGIC)
        fh.write(struct.pack("<iic", int(k), kernel.shape[0], code))
        fh.write(kernel.astype(complex if code == b"D" else float).tobytes())
    return path


def read_kernel_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != KERNEL_MAGIC:
            raise ValueError(f"bad kernel magic {magic!r}")
        k, n, code = struct.unpack("<iic", fh.read(9))
        dtype = complex if code == b"D" else float
        data = np.frombuffer(fh.read(), dtype=dtype)
    return int(k), data.reshape(n, -1)


def write_field_binary(path, t, omega_hat, d_hat):
    """Snapshot dump: magic, t, K_x, n_y, then omega and d row-major (k-major)."""
    omega_hat = np.ascontiguousarray(omega_hat, dtype=complex)
    d_hat = np.ascontiguousarray(d_hat, dtype=complex)
    Kp1, n = omega_hat.shape
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<dii", float(t), Kp1 - 1, n))
        fh.write(omega_hat.tobytes())
        fh.write(d_hat.tobytes())
    return path


def read_field_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FIELD_MAGIC:
            raise ValueError(f"bad field magic {magic!r}")
        t, K_x, n = struct.unpack("<dii", fh.read(16))
        payload = np.frombuffer(fh.read(), dtype=complex)
    half = (K_x + 1) * n
    return t, payload[:half].reshape(K_x + 1, n), payload[half:].reshape(K_x + 1, n)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating))
                         else str(v) for v in row])
    return path


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, paths):
    out_dir = Path(out_dir)
    entries = {}
    for p in sorted(Path(p) for p in paths):
        entries[p.name] = sha256_of(p)
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    return manifest

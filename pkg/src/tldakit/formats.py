"""On-disk formats: TNS3 tensors, label sidecars and TLDA model containers.

TNS3 layout (all integers little-endian)::

    offset 0   4 bytes   magic b"TNS3"
    offset 4   1 byte    version (1)
    offset 5   1 byte    flag: 0 = real float64, 1 = complex128 (re, im interleaved)
    offset 6   3 x u64   n1, n2, n3
    offset 30  payload   n1*n2*n3 values in slice-major / column-major order

Labels sidecar: UTF-8 CSV with header ``index,label`` and one row per sample,
``index`` running over 0..n-1.

TLDA model layout::

    b"TLDA", version byte (1), u32 header length, UTF-8 JSON header,
    then length-prefixed (u64) TNS3 blobs: V, projected class centroids
    and, for custom transforms only, the transform matrix as n3 x n3 x 1.
"""

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .data import DatasetBundle
from .errors import TensorFormatError
from .tlda import TldaModel
from .transforms import custom_transform, get_transform

TNS3_MAGIC = b"TNS3"
TNS3_VERSION = 1
TNS3_HEADER = struct.Struct("<4sBB3Q")
MODEL_MAGIC = b"TLDA"
MODEL_VERSION = 1


def tns3_bytes(t):
    """Serialize a third-order real or complex array."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise TensorFormatError(f"TNS3 stores third-order tensors, got shape {t.shape}")
    complex_ = np.iscomplexobj(t)
    header = TNS3_HEADER.pack(TNS3_MAGIC, TNS3_VERSION, int(complex_), *t.shape)
    payload = t.ravel(order="F").astype("<c16" if complex_ else "<f8")
    return header + payload.tobytes()


def parse_tns3(buf, offset=0, exact=True):
    """Decode a TNS3 blob starting at ``offset``; returns ``(tensor, end_offset)``.

    With ``exact`` trailing bytes after the payload are an error.
    """
    buf = memoryview(buf)
    if len(buf) - offset < TNS3_HEADER.size:
        raise TensorFormatError("truncated TNS3 header", len(buf))
    magic, version, flag, n1, n2, n3 = TNS3_HEADER.unpack_from(buf, offset)
    if magic != TNS3_MAGIC:
        raise TensorFormatError(f"bad magic {bytes(magic)!r}", offset)
    if version != TNS3_VERSION:
        raise TensorFormatError(f"unsupported TNS3 version {version}", offset + 4)
    if flag not in (0, 1):
        raise TensorFormatError(f"unknown element flag {flag}", offset + 5)
    start = offset + TNS3_HEADER.size
    dtype = np.dtype("<c16" if flag else "<f8")
    count = n1 * n2 * n3
    end = start + count * dtype.itemsize
    if end > len(buf):
        raise TensorFormatError(
            f"truncated payload: expected {count * dtype.itemsize} bytes, found {len(buf) - start}", len(buf))
    if exact and end != len(buf):
        raise TensorFormatError(f"{len(buf) - end} unexpected trailing bytes", end)
    values = np.frombuffer(buf[start:end], dtype=dtype).astype(complex if flag else float)
    return values.reshape((n1, n2, n3), order="F"), end


def save_tns3(path, t):
    Path(path).write_bytes(tns3_bytes(t))


def load_tns3(path):
    return parse_tns3(Path(path).read_bytes())[0]


def labels_path(path):
    """Sidecar path for the labels of a TNS3 file: ``data.tns3 -> data.labels.csv``."""
    path = Path(path)
    return path.with_name(path.stem + ".labels.csv")


def meta_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "label"])
        for i, label in enumerate(np.asarray(labels).tolist()):
            writer.writerow([i, int(label)])


def read_labels(path, n=None):
    """Read a labels sidecar, checking the header and that indices cover 0..n-1 exactly once."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["index", "label"]:
        raise TensorFormatError(f"{path}: expected header 'index,label'")
    found = {}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise TensorFormatError(f"{path}, line {line}: expected two fields, got {len(row)}")
        try:
            idx, label = int(row[0]), int(row[1])
        except ValueError:
            raise TensorFormatError(f"{path}, line {line}: non-integer field in {row}") from None
        if idx in found:
            raise TensorFormatError(f"{path}, line {line}: duplicate sample index {idx}")
        found[idx] = label
    count = len(found) if n is None else n
    missing = sorted(set(range(count)) - set(found))
    extra = sorted(set(found) - set(range(count)))
    if missing or extra:
        raise TensorFormatError(
            f"{path}: sample indices must cover 0..{count - 1}; missing {missing[:5]}, unexpected {extra[:5]}")
    return np.array([found[i] for i in range(count)], dtype=np.int64)


def save_bundle(path, bundle):
    """Write ``path`` (TNS3), its labels sidecar and a JSON metadata sidecar."""
    save_tns3(path, bundle.data)
    write_labels(labels_path(path), bundle.labels)
    meta_path(path).write_text(json.dumps(bundle.meta, sort_keys=True) + "\n", encoding="utf-8")


def load_bundle(path):
    data = load_tns3(path)
    labels = read_labels(labels_path(path), data.shape[1])
    mp = meta_path(path)
    meta = json.loads(mp.read_text(encoding="utf-8")) if mp.exists() else {}
    return DatasetBundle(data, labels, meta)


def _blob(t):
    raw = tns3_bytes(t)
    return struct.pack("<Q", len(raw)) + raw


def _read_blob(buf, offset):
    if len(buf) - offset < 8:
        raise TensorFormatError("truncated model file", len(buf))
    (size,) = struct.unpack_from("<Q", buf, offset)
    start = offset + 8
    if start + size > len(buf):
        raise TensorFormatError("truncated tensor block in model file", len(buf))
    t, _ = parse_tns3(bytes(buf[start:start + size]))
    return t, start + size


def _to_json_label(c):
    return c.item() if hasattr(c, "item") else c


def model_bytes(model):
    """Serialize a :class:`~tldakit.tlda.TldaModel`; identical models give identical bytes."""
    header = {
        "version": MODEL_VERSION,
        "transform": model.transform.name,
        "objective": model.objective,
        "K": int(model.K),
        "dims": [int(s) for s in model.V.shape],
        "gamma": float(model.gamma),
        "ridge": float(model.ridge),
        "weight_between": bool(model.weight_between),
        "vectorized": bool(model.vectorized),
        "classes": [_to_json_label(c) for c in model.classes],
        "rho": [float(r) for r in model.rho],
        "iterations": [int(i) for i in model.iterations],
    }
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = MODEL_MAGIC + bytes([MODEL_VERSION]) + struct.pack("<I", len(text)) + text
    out += _blob(model.V) + _blob(model.class_centroids_projected)
    if model.transform.name == "custom":
        out += _blob(model.transform.M[:, :, None])
    return out


def parse_model(buf):
    buf = memoryview(buf)
    if len(buf) < 9:
        raise TensorFormatError("truncated model header", len(buf))
    if bytes(buf[:4]) != MODEL_MAGIC:
        raise TensorFormatError(f"bad magic {bytes(buf[:4])!r}", 0)
    if buf[4] != MODEL_VERSION:
        raise TensorFormatError(f"unsupported model version {buf[4]}", 4)
    (hlen,) = struct.unpack_from("<I", buf, 5)
    if 9 + hlen > len(buf):
        raise TensorFormatError("truncated model header", len(buf))
    try:
        header = json.loads(bytes(buf[9:9 + hlen]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TensorFormatError(f"unreadable model header: {exc}", 9) from None
    offset = 9 + hlen
    V, offset = _read_blob(buf, offset)
    centroids, offset = _read_blob(buf, offset)
    n3 = V.shape[2]
    if header["transform"] == "custom":
        M, offset = _read_blob(buf, offset)
        transform = custom_transform(M[:, :, 0])
    else:
        transform = get_transform(header["transform"], n3)
    if offset != len(buf):
        raise TensorFormatError(f"{len(buf) - offset} unexpected trailing bytes", offset)
    return TldaModel(V, transform, header["objective"], np.array(header["classes"]),
                     class_centroids_projected=centroids, gamma=header["gamma"],
                     ridge=header["ridge"], weight_between=header["weight_between"],
                     vectorized=header["vectorized"], rho=header["rho"],
                     iterations=header["iterations"])


def save_model(path, model):
    Path(path).write_bytes(model_bytes(model))


def load_model(path):
    return parse_model(Path(path).read_bytes())


def load_matrix(path):
    """Load a square transform matrix from ``.npy``, TNS3 (n3 x n3 x 1) or whitespace text."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == TNS3_MAGIC:
        t = parse_tns3(raw)[0]
        if t.shape[2] != 1:
            raise TensorFormatError(f"transform tensor must be n3 x n3 x 1, got {t.shape}")
        return t[:, :, 0]
    if path.suffix == ".npy":
        return np.load(io.BytesIO(raw), allow_pickle=False)
    return np.loadtxt(io.StringIO(raw.decode("utf-8")), dtype=complex, ndmin=2)

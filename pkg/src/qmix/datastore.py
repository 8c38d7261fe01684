"""On-disk storage for states and labeled datasets.

State files (``.qmix``) are little-endian binary:

    b"QMIX1" | version u16 | kind u8 | n_qubits u8 | payload | crc64 u64

``kind`` is 0 for a density matrix and 1 for a pure state. The payload holds
the row-major complex128 entries and the trailer is the CRC-64/XZ of the
payload. A dataset directory holds one state file per item plus
``manifest.json``, which is written last through an atomic rename so a reader
never sees a manifest that points at missing files.
"""

import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from fastcrc import crc64

from .errors import ChecksumError, DatasetError, FormatError
from .genesis import ENTANGLED, SEPARABLE, LabeledState, ManifestRow, Provenance
from .qcore import DensityMatrix, PureState

MAGIC = b"QMIX1"
VERSION = 1
KIND_DENSITY = 0
KIND_PURE = 1
_HEADER = struct.Struct("<5sHBB")
_TRAILER = struct.Struct("<Q")
MANIFEST = "manifest.json"


def checksum(payload: bytes) -> int:
    return crc64.xz(payload)


def encode_state(state) -> bytes:
    if isinstance(state, PureState):
        kind, arr = KIND_PURE, state.amplitudes
    elif isinstance(state, DensityMatrix):
        kind, arr = KIND_DENSITY, state.entries
    else:
        raise FormatError(f"cannot encode {type(state).__name__}")
    payload = np.ascontiguousarray(arr, dtype="<c16").tobytes()
    return _HEADER.pack(MAGIC, VERSION, kind, state.n_qubits) + payload + _TRAILER.pack(checksum(payload))


def decode_state(blob: bytes, validate=False):
    if len(blob) < _HEADER.size + _TRAILER.size:
        raise FormatError(f"truncated state file ({len(blob)} bytes)")
    magic, version, kind, n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if kind not in (KIND_DENSITY, KIND_PURE):
        raise FormatError(f"unknown state kind {kind}")
    count = 4**n if kind == KIND_DENSITY else 2**n
    expected = _HEADER.size + 16 * count + _TRAILER.size
    if len(blob) != expected:
        raise FormatError(f"expected {expected} bytes for {n} qubits, got {len(blob)}")
    payload = blob[_HEADER.size : -_TRAILER.size]
    (stored,) = _TRAILER.unpack_from(blob, len(blob) - _TRAILER.size)
    if checksum(payload) != stored:
        raise ChecksumError(f"checksum mismatch: stored {stored:#018x}, computed {checksum(payload):#018x}")
    arr = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    if kind == KIND_PURE:
        return PureState(arr, validate=validate)
    return DensityMatrix(arr.reshape(2**n, 2**n), validate=validate)


def save_state(path, state):
    Path(path).write_bytes(encode_state(state))


def load_state(path, validate=False):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    return decode_state(blob, validate)


def _atomic_write_text(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_dataset(directory, states, name, rows=(), meta=None):
    """Write every state, then the manifest.

    ``rows`` are :class:`ManifestRow` entries describing how the items were
    produced; ``meta`` holds generation settings (xi, epsilon, seed, ...).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = []
    for i, item in enumerate(states):
        fname = f"state_{i:06d}.qmix"
        save_state(directory / fname, item.state)
        prov = item.provenance
        items.append({
            "file": fname,
            "label": int(item.label),
            "cel": float(item.cel),
            "generator": prov.generator,
            "ansatz": prov.ansatz,
            "width": prov.width,
            "depth": prov.depth,
            "seed": prov.seed,
            "index": prov.index,
            "row": prov.row,
        })
    doc = {
        "name": name,
        "format": "QMIX1",
        "meta": dict(meta or {}),
        "rows": [{"ansatz": r.ansatz, "width": r.width, "depth": r.depth, "count": r.count} for r in rows],
        "count": len(items),
        "label_counts": {
            "entangled": sum(it["label"] == ENTANGLED for it in items),
            "separable": sum(it["label"] == SEPARABLE for it in items),
        },
        "items": items,
    }
    _atomic_write_text(directory / MANIFEST, json.dumps(doc, indent=1) + "\n")
    return doc


def read_manifest(directory):
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise DatasetError(f"no manifest in {directory}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc.msg}") from exc
    if doc.get("count") != len(doc.get("items", [])):
        raise DatasetError("manifest count does not match its item list")
    return doc


def load_dataset(directory):
    directory = Path(directory)
    doc = read_manifest(directory)
    out = []
    for it in doc["items"]:
        path = directory / it["file"]
        if not path.exists():
            raise DatasetError(f"manifest references missing file {it['file']}")
        state = load_state(path)
        prov = Provenance(it["generator"], it["ansatz"], it["width"], it["depth"], it["seed"], it["index"], it["row"])
        out.append(LabeledState(state, it["label"], it["cel"], prov))
    return out


def merge_datasets(*datasets):
    return [s for ds in datasets for s in ds]


def read_table_csv(path, dataset=None):
    """Rows ``ansatz,width,depth,count`` (header required) as :class:`ManifestRow`."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"ansatz", "width", "depth", "count"} - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"table is missing columns: {', '.join(sorted(missing))}")
        for rec in reader:
            try:
                rows.append(ManifestRow(dataset or rec.get("dataset") or Path(path).stem, rec["ansatz"].strip(),
                                        int(rec["width"]), int(rec["depth"]), int(rec["count"])))
            except ValueError as exc:
                raise FormatError(f"bad table row {rec}: {exc}") from exc
    if not rows:
        raise DatasetError("table has no rows")
    return rows


def write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v

"""Dataset ingestion and artifact persistence.

Three file families live here. IDX is the de-facto handwritten-digit
distribution format (big-endian headers, raw bytes), read and written
bit-exactly with transparent gzip support. Feature sets and model
checkpoints use one binary container: an 8-byte magic, a little-endian
semver, a JSON header describing the arrays, the raw little-endian array
payload, and a SHA-256 trailer over everything before it, so any
single-bit corruption is caught on load. Metrics travel as plain CSV.
"""

from __future__ import annotations

import csv
import gzip
import hashlib
import json
import os
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .ansatz import (StyleGenerator, generator_arrays, generator_from_arrays,
                     generator_meta)
from .autoencoder import Autoencoder
from .errors import ConfigError, DataError
from .neural import Mlp
from .rng import spawn_rng

MAGIC = b"QLGANBIN"
FORMAT_VERSION = (1, 0, 0)
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CHECKPOINT_KINDS = ("ae", "generator", "discriminator")
PROVENANCES = ("real", "generated")


# ---------------------------------------------------------------- datasets

@dataclass(frozen=True)
class ImageDataset:
    """Flattened grayscale images in [0, 1] with byte labels."""

    images: np.ndarray     # (N, rows*cols) float64
    labels: np.ndarray     # (N,) uint8
    source: str = ""

    def __post_init__(self):
        if self.images.ndim != 2 or self.images.shape[0] == 0:
            raise DataError("images must be a nonempty (N, D) array")
        if self.labels.shape != (self.images.shape[0],):
            raise DataError("label count does not match image count")
        if self.images.min() < 0.0 or self.images.max() > 1.0:
            raise DataError("pixel values must lie in [0, 1]")

    def __len__(self):
        return self.images.shape[0]


@dataclass(frozen=True)
class FeatureSet:
    """Latent features in [-1, 1] plus how they were produced.

    shots = 0 marks analytic (infinite-shot) generation; the hashes tie the
    set to the exact generator / autoencoder checkpoints that made it.
    """

    features: np.ndarray   # (N, D) float64
    provenance: str = "real"
    shots: int = 0
    generator_hash: str = ""
    ae_hash: str = ""

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise DataError("features must be a nonempty (N, D) array")
        if np.any(np.abs(self.features) > 1.0 + 1e-9):
            raise DataError("features must lie in [-1, 1]")
        if self.provenance not in PROVENANCES:
            raise DataError(f"provenance must be one of {PROVENANCES}")
        if self.shots < 0:
            raise DataError("shots must be nonnegative (0 = analytic)")

    def __len__(self):
        return self.features.shape[0]


# ---------------------------------------------------------------- IDX

def _open_maybe_gzip(path, mode="rb"):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, mode)
    return open(path, mode)


def _read_idx(path, expected_magic: int):
    with _open_maybe_gzip(path) as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise DataError(f"{path}: truncated IDX header")
        magic = struct.unpack(">I", header)[0]
        if magic != expected_magic:
            raise DataError(f"{path}: bad IDX magic 0x{magic:08x}, "
                            f"expected 0x{expected_magic:08x}")
        ndim = magic & 0xFF
        raw_dims = fh.read(4 * ndim)
        if len(raw_dims) < 4 * ndim:
            raise DataError(f"{path}: truncated IDX dimension block")
        dims = struct.unpack(f">{ndim}I", raw_dims)
        need = int(np.prod(dims))
        payload = fh.read(need)
        if len(payload) < need:
            raise DataError(f"{path}: truncated IDX payload "
                            f"({len(payload)} of {need} bytes)")
        return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path, source: str = "") -> ImageDataset:
    """Read an image/label IDX pair (optionally gzipped) into [0, 1] floats."""
    raw = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if raw.shape[0] != labels.shape[0]:
        raise DataError(f"image count {raw.shape[0]} != label count "
                        f"{labels.shape[0]}")
    images = raw.reshape(raw.shape[0], -1).astype(np.float64) / 255.0
    return ImageDataset(images, labels.copy(),
                        source=source or os.path.basename(str(images_path)))


def write_idx_images(path, images_u8: np.ndarray):
    """Write (N, rows, cols) uint8 images in IDX3 layout."""
    arr = np.ascontiguousarray(images_u8, dtype=np.uint8)
    if arr.ndim != 3:
        raise DataError("expected a (N, rows, cols) uint8 array")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *arr.shape))
        fh.write(arr.tobytes())


def write_idx_labels(path, labels: np.ndarray):
    arr = np.ascontiguousarray(labels, dtype=np.uint8)
    if arr.ndim != 1:
        raise DataError("expected a (N,) uint8 array")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, arr.shape[0]))
        fh.write(arr.tobytes())


# ---------------------------------------------------------------- container

def write_container(path, kind: str, meta: dict, arrays: dict,
                    version: tuple = FORMAT_VERSION):
    """Write the binary container; arrays keep insertion order bit-exactly."""
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        specs.append({"name": name, "dtype": str(arr.dtype),
                      "shape": list(arr.shape)})
        blobs.append(le.tobytes())
    header = json.dumps({"kind": kind, "meta": meta, "arrays": specs},
                        sort_keys=True).encode("utf-8")
    body = (MAGIC + struct.pack("<HHH", *version)
            + struct.pack("<I", len(header)) + header + b"".join(blobs))
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(hashlib.sha256(body).digest())


def read_container(path, expected_kind: str | None = None):
    """Read and verify a container; returns (kind, meta, arrays)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 6 + 4 + 32:
        raise DataError(f"{path}: file too short for the container format")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise DataError(f"{path}: content hash mismatch, file is corrupt")
    if body[:len(MAGIC)] != MAGIC:
        raise DataError(f"{path}: bad magic {body[:len(MAGIC)]!r}")
    off = len(MAGIC)
    version = struct.unpack_from("<HHH", body, off)
    off += 6
    if version[0] != FORMAT_VERSION[0]:
        raise DataError(f"{path}: major version {version[0]} unsupported "
                        f"(writer {version}, reader {FORMAT_VERSION})")
    if version[1] > FORMAT_VERSION[1]:
        warnings.warn(f"{path}: written by a newer minor version {version}; "
                      f"reading with {FORMAT_VERSION}", stacklevel=2)
    header_len = struct.unpack_from("<I", body, off)[0]
    off += 4
    try:
        header = json.loads(body[off:off + header_len].decode("utf-8"))
        kind = header["kind"]
        meta = header["meta"]
        specs = header["arrays"]
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: undecodable container header") from exc
    off += header_len
    if expected_kind is not None and kind != expected_kind:
        raise DataError(f"{path}: kind {kind!r}, expected {expected_kind!r}")
    arrays = {}
    for spec in specs:
        dt = np.dtype(spec["dtype"]).newbyteorder("<")
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = dt.itemsize * count
        if off + nbytes > len(body):
            raise DataError(f"{path}: truncated array payload")
        arr = np.frombuffer(body, dtype=dt, count=count, offset=off)
        arrays[spec["name"]] = arr.reshape(spec["shape"]).astype(
            np.dtype(spec["dtype"]), copy=False)
        off += nbytes
    if off != len(body):
        raise DataError(f"{path}: {len(body) - off} unexpected trailing bytes")
    return kind, meta, arrays


def file_sha256(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    except FileNotFoundError as exc:
        raise DataError(f"missing input file {path}") from exc
    return h.hexdigest()


# ---------------------------------------------------------------- features

def save_features(path, fs: FeatureSet):
    meta = {"n": int(len(fs)), "d": int(fs.features.shape[1]),
            "provenance": fs.provenance, "shots": int(fs.shots),
            "generator_hash": fs.generator_hash, "ae_hash": fs.ae_hash}
    write_container(path, "features", meta,
                    {"features": np.asarray(fs.features, dtype=np.float64)})


def load_features(path) -> FeatureSet:
    _, meta, arrays = read_container(path, expected_kind="features")
    feats = arrays["features"]
    if feats.shape != (meta["n"], meta["d"]):
        raise DataError(f"{path}: feature shape disagrees with the header")
    return FeatureSet(feats, provenance=meta["provenance"],
                      shots=int(meta["shots"]),
                      generator_hash=meta["generator_hash"],
                      ae_hash=meta["ae_hash"])


# ---------------------------------------------------------------- checkpoints

def _mlp_payload(net: Mlp):
    meta = {"sizes": list(net.sizes), "head": net.head,
            "leaky_slope": float(net.leaky_slope)}
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    return meta, arrays


def _mlp_restore(meta, arrays, prefix="") -> Mlp:
    n_layers = len(meta["sizes"]) - 1
    weights = [np.asarray(arrays[f"{prefix}W{i}"], dtype=np.float64)
               for i in range(n_layers)]
    biases = [np.asarray(arrays[f"{prefix}b{i}"], dtype=np.float64)
              for i in range(n_layers)]
    return Mlp(weights, biases, head=meta["head"],
               leaky_slope=meta["leaky_slope"])


def save_checkpoint(path, kind: str, model, config: dict | None = None):
    """Persist one of the three model kinds with its config echoed alongside."""
    if kind not in CHECKPOINT_KINDS:
        raise ConfigError(f"checkpoint kind must be one of {CHECKPOINT_KINDS}")
    config = dict(config or {})
    if kind == "ae":
        if not isinstance(model, Autoencoder):
            raise ConfigError("'ae' checkpoints hold an Autoencoder")
        enc_meta, enc_arrays = _mlp_payload(model.encoder)
        dec_meta, dec_arrays = _mlp_payload(model.decoder)
        meta = {"encoder": enc_meta, "decoder": dec_meta, "config": config}
        arrays = {f"enc_{k}": v for k, v in enc_arrays.items()}
        arrays.update({f"dec_{k}": v for k, v in dec_arrays.items()})
    elif kind == "generator":
        # either generator family fits under the one kind
        if isinstance(model, StyleGenerator):
            meta = {"generator": generator_meta(model), "config": config}
            arrays = generator_arrays(model)
        elif isinstance(model, Mlp):
            net_meta, arrays = _mlp_payload(model)
            meta = {"net": net_meta, "config": config}
        else:
            raise ConfigError("'generator' checkpoints hold a StyleGenerator "
                              "or an Mlp")
    else:
        if not isinstance(model, Mlp):
            raise ConfigError("'discriminator' checkpoints hold an Mlp")
        net_meta, arrays = _mlp_payload(model)
        meta = {"net": net_meta, "config": config}
    write_container(path, f"checkpoint/{kind}", meta, arrays)


def load_checkpoint(path, kind: str):
    """Returns (model, config) for the requested kind; wrong kind is an error."""
    if kind not in CHECKPOINT_KINDS:
        raise ConfigError(f"checkpoint kind must be one of {CHECKPOINT_KINDS}")
    _, meta, arrays = read_container(path, expected_kind=f"checkpoint/{kind}")
    config = meta.get("config", {})
    if kind == "ae":
        model = Autoencoder(_mlp_restore(meta["encoder"], arrays, "enc_"),
                            _mlp_restore(meta["decoder"], arrays, "dec_"))
    elif kind == "generator":
        if "generator" in meta:
            model = generator_from_arrays(meta["generator"], arrays)
        else:
            model = _mlp_restore(meta["net"], arrays)
    else:
        model = _mlp_restore(meta["net"], arrays)
    return model, config


# ---------------------------------------------------------------- manifests

def write_manifest(path, seed: int, config: dict, inputs: dict | None = None):
    """Record what a run is about to do: seed, full config, input hashes."""
    manifest = {"seed": int(seed),
                "config": config,
                "input_hashes": {name: file_sha256(p)
                                 for name, p in (inputs or {}).items()}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------- CSV

def write_csv(path, rows: list, fieldnames: list | None = None):
    if not rows:
        raise DataError("refusing to write an empty CSV")
    names = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path) -> list:
    """Rows as dicts; numeric-looking fields come back as floats."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except (TypeError, ValueError):
                    parsed[k] = v
            out.append(parsed)
    return out


# ---------------------------------------------------------------- synthetic corpus

# polyline skeletons on the unit square (x right, y down), one list of
# strokes per digit; loops repeat their first point
_DIGIT_STROKES = {
    0: [[(0.50, 0.10), (0.78, 0.28), (0.78, 0.72), (0.50, 0.90),
         (0.22, 0.72), (0.22, 0.28), (0.50, 0.10)]],
    1: [[(0.35, 0.28), (0.55, 0.10), (0.55, 0.90)],
        [(0.35, 0.90), (0.75, 0.90)]],
    2: [[(0.22, 0.28), (0.38, 0.10), (0.66, 0.10), (0.78, 0.30),
         (0.22, 0.90), (0.80, 0.90)]],
    3: [[(0.22, 0.12), (0.70, 0.12), (0.76, 0.30), (0.46, 0.48)],
        [(0.46, 0.48), (0.80, 0.66), (0.68, 0.90), (0.22, 0.88)]],
    4: [[(0.66, 0.90), (0.66, 0.10), (0.20, 0.62), (0.84, 0.62)]],
    5: [[(0.76, 0.10), (0.26, 0.10), (0.24, 0.46), (0.60, 0.42),
         (0.78, 0.62), (0.68, 0.88), (0.24, 0.90)]],
    6: [[(0.68, 0.10), (0.36, 0.32), (0.24, 0.62), (0.38, 0.90),
         (0.64, 0.90), (0.76, 0.66), (0.52, 0.52), (0.28, 0.64)]],
    7: [[(0.20, 0.10), (0.80, 0.10), (0.46, 0.90)]],
    8: [[(0.50, 0.10), (0.74, 0.28), (0.50, 0.48), (0.26, 0.28), (0.50, 0.10)],
        [(0.50, 0.48), (0.78, 0.70), (0.50, 0.90), (0.22, 0.70), (0.50, 0.48)]],
    9: [[(0.74, 0.34), (0.50, 0.50), (0.26, 0.34), (0.50, 0.10), (0.74, 0.34)],
        [(0.74, 0.34), (0.64, 0.90)]],
}
GLYPH_SIDE = 28


def _digit_segments(digit: int) -> np.ndarray:
    """Stroke segments as a (S, 2, 2) array in unit-square coordinates."""
    segs = []
    for stroke in _DIGIT_STROKES[digit]:
        for a, b in zip(stroke[:-1], stroke[1:]):
            segs.append((a, b))
    return np.asarray(segs, dtype=np.float64)


def render_digit_batch(digit: int, count: int, rng) -> np.ndarray:
    """(count, 28, 28) float glyphs with per-sample pose/width/brightness jitter."""
    base = _digit_segments(digit)              # (S, 2, 2)
    angle = rng.uniform(-0.15, 0.15, size=count)
    scale = rng.uniform(0.80, 1.05, size=count)
    shift = rng.uniform(-1.6, 1.6, size=(count, 2))
    width = rng.uniform(0.85, 1.5, size=count)
    bright = rng.uniform(0.75, 1.0, size=count)

    centred = (base - 0.5) * (GLYPH_SIDE - 8)  # glyph box with a margin
    cosa, sina = np.cos(angle), np.sin(angle)
    rot = np.stack([np.stack([cosa, -sina], -1),
                    np.stack([sina, cosa], -1)], -2)         # (count, 2, 2)
    pts = np.einsum("cij,spj->csip", rot, centred)           # (count, S, 2, 2)
    pts = pts.transpose(0, 1, 3, 2) * scale[:, None, None, None]
    pts = pts + (GLYPH_SIDE - 1) / 2.0 + shift[:, None, None, :]

    gy, gx = np.mgrid[0:GLYPH_SIDE, 0:GLYPH_SIDE]
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.float64)

    a = pts[:, :, 0, :][:, None, :, :]          # (count, 1, S, 2)
    b = pts[:, :, 1, :][:, None, :, :]
    p = grid[None, :, None, :]                  # (1, 784, 1, 2)
    ab = b - a
    denom = np.maximum((ab * ab).sum(-1), 1e-12)
    t = np.clip(((p - a) * ab).sum(-1) / denom, 0.0, 1.0)   # (count, 784, S)
    proj = a + t[..., None] * ab
    dist = np.sqrt(((p - proj) ** 2).sum(-1)).min(axis=2)   # (count, 784)
    ink = np.clip(1.25 - dist / width[:, None], 0.0, 1.0)
    return (ink * bright[:, None]).reshape(count, GLYPH_SIDE, GLYPH_SIDE)


def write_synthetic_digit_corpus(out_dir, n_train: int = 60_000,
                                 n_test: int = 10_000, seed: int = 0) -> dict:
    """Deterministic stroke-glyph stand-in for the handwritten-digit corpus.

    Writes the four conventional IDX files (train/t10k images+labels) and
    returns their paths keyed by role.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "train_images": os.path.join(out_dir, "train-images-idx3-ubyte"),
        "train_labels": os.path.join(out_dir, "train-labels-idx1-ubyte"),
        "test_images": os.path.join(out_dir, "t10k-images-idx3-ubyte"),
        "test_labels": os.path.join(out_dir, "t10k-labels-idx1-ubyte"),
    }
    for split, n in (("train", n_train), ("test", n_test)):
        if n < 1:
            raise ConfigError("corpus split sizes must be positive")
        rng = spawn_rng(seed, "synth_digits", split)
        labels = np.arange(n, dtype=np.int64) % 10
        rng.shuffle(labels)
        images = np.empty((n, GLYPH_SIDE, GLYPH_SIDE), dtype=np.uint8)
        for digit in range(10):
            idx = np.flatnonzero(labels == digit)
            done = 0
            while done < idx.size:
                take = min(1000, idx.size - done)
                block = render_digit_batch(digit, take, rng)
                images[idx[done:done + take]] = np.round(block * 255).astype(np.uint8)
                done += take
        write_idx_images(paths[f"{split}_images"], images)
        write_idx_labels(paths[f"{split}_labels"], labels.astype(np.uint8))
    return paths

"""Binary checkpoint files.

Layout::

    GPAS-CKPT 1\\n
    kind=model\\n
    variant=agcn_in\\n            # every ModelConfig field as key=value
    ...\\n
    \\n                            # blank line ends the header
    embed\\t40,32\\n               # block header: name <TAB> comma-separated shape
    <40·32 little-endian float64>
    enc_word.att.W_v\\t16,64\\n
    ...

Loading verifies every expected parameter name and shape and rejects extras.
The same container stores trainer state (Adam moments) with ``kind=trainer``.
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

import numpy as np

from gpas_summarizer.config import ModelConfig, from_text_fields, to_text_fields
from gpas_summarizer.exceptions import CheckpointError, ConfigurationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.model.params import ModelParams, param_shapes

_log = get_logger(__name__)

MAGIC = "GPAS-CKPT"
FORMAT_VERSION = 1
_LE_F64 = np.dtype("<f8")


def write_blocks(path: str | Path, header: Mapping[str, str], arrays: Mapping[str, np.ndarray]) -> None:
    """Write a header and named float64 blocks."""
    lines = [f"{MAGIC} {FORMAT_VERSION}"]
    for key, value in header.items():
        if "=" in key or "\n" in key or "\n" in value:
            msg = f"Header entry {key!r}={value!r} cannot be stored"
            raise CheckpointError(msg)
        lines.append(f"{key}={value}")
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(("\n".join(lines) + "\n\n").encode("utf-8"))
        for name, array in arrays.items():
            if "\t" in name or "\n" in name:
                msg = f"Block name {name!r} cannot be stored"
                raise CheckpointError(msg)
            data = np.ascontiguousarray(array, dtype=_LE_F64)
            shape = ",".join(str(d) for d in data.shape)
            fh.write(f"{name}\t{shape}\n".encode())
            fh.write(data.tobytes(order="C"))
    tmp.replace(p)


def read_blocks(path: str | Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read a file written by :func:`write_blocks`.

    Raises:
        CheckpointError: On a missing file, bad magic or version, or truncated blocks.
    """
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        msg = f"Cannot read checkpoint {p}: {exc}"
        raise CheckpointError(msg) from exc
    end = raw.find(b"\n\n")
    if end < 0:
        msg = f"Checkpoint {p} has no header terminator"
        raise CheckpointError(msg)
    head = raw[:end].decode("utf-8").split("\n")
    if head[0] != f"{MAGIC} {FORMAT_VERSION}":
        msg = f"Checkpoint {p} starts with {head[0]!r}, expected '{MAGIC} {FORMAT_VERSION}'"
        raise CheckpointError(msg)
    header: dict[str, str] = {}
    for line in head[1:]:
        key, sep, value = line.partition("=")
        if not sep:
            msg = f"Checkpoint {p} header line {line!r} is not key=value"
            raise CheckpointError(msg)
        header[key] = value

    arrays: dict[str, np.ndarray] = {}
    pos = end + 2
    while pos < len(raw):
        nl = raw.find(b"\n", pos)
        if nl < 0:
            msg = f"Checkpoint {p} is truncated in a block header"
            raise CheckpointError(msg)
        name, sep, shape_text = raw[pos:nl].decode("utf-8").partition("\t")
        if not sep:
            msg = f"Checkpoint {p} block header {name!r} has no shape"
            raise CheckpointError(msg)
        try:
            shape = tuple(int(d) for d in shape_text.split(",")) if shape_text else ()
        except ValueError as exc:
            msg = f"Checkpoint {p} block {name!r} has a bad shape {shape_text!r}"
            raise CheckpointError(msg) from exc
        count = int(np.prod(shape)) if shape else 1
        start, stop = nl + 1, nl + 1 + count * _LE_F64.itemsize
        if stop > len(raw):
            msg = f"Checkpoint {p} is truncated in block {name!r}"
            raise CheckpointError(msg)
        if name in arrays:
            msg = f"Checkpoint {p} repeats block {name!r}"
            raise CheckpointError(msg)
        arrays[name] = np.frombuffer(raw[start:stop], dtype=_LE_F64).astype(np.float64).reshape(shape)
        pos = stop
    return header, arrays


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    """Write the model configuration and every parameter."""
    header = {"kind": "model", **to_text_fields(params.config)}
    write_blocks(path, header, params.arrays())
    _log.info("checkpoint.saved", path=str(path), parameters=len(params), scalars=params.num_scalars)


def load_checkpoint(path: str | Path, *, expected: ModelConfig | None = None) -> ModelParams:
    """Load a model checkpoint.

    Args:
        path: Checkpoint file.
        expected: When given, the stored configuration must equal it.

    Raises:
        CheckpointError: On format errors, configuration mismatch, or any
            missing, extra, or misshapen parameter.
    """
    header, arrays = read_blocks(path)
    if header.pop("kind", None) != "model":
        msg = f"{path} is not a model checkpoint"
        raise CheckpointError(msg)
    try:
        config = from_text_fields(ModelConfig, header)
    except ConfigurationError as exc:
        msg = f"Checkpoint {path} carries an invalid configuration: {exc}"
        raise CheckpointError(msg) from exc
    if expected is not None and expected != config:
        msg = f"Checkpoint {path} was written for a different configuration"
        raise CheckpointError(msg)
    shapes = param_shapes(config)
    missing = sorted(set(shapes) - set(arrays))
    extra = sorted(set(arrays) - set(shapes))
    if missing or extra:
        msg = f"Checkpoint {path}: missing parameters {missing}, unexpected parameters {extra}"
        raise CheckpointError(msg)
    for name, shape in shapes.items():
        if arrays[name].shape != shape:
            msg = f"Checkpoint {path}: parameter {name!r} has shape {arrays[name].shape}, expected {shape}"
            raise CheckpointError(msg)
    _log.debug("checkpoint.loaded", path=str(path), parameters=len(arrays))
    return ModelParams.from_arrays(config, arrays)

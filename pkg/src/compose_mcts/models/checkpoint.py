"""Versioned JSON checkpoints with bit-exact tensors and a checksum.

Tensors are stored as base64 of their little-endian float64 bytes, so a
save/load round trip reproduces every bit.
"""

import base64
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any

import numpy as np

from ..lib.exceptions import ChecksumError, DataError
from .optim import AdamState, Params

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def encode_tensor(array: np.ndarray) -> dict[str, Any]:
    data = np.ascontiguousarray(array, dtype="<f8")
    return {"dims": list(data.shape), "values": base64.b64encode(data.tobytes()).decode("ascii")}


def decode_tensor(entry: dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(entry["values"])
    return np.frombuffer(raw, dtype="<f8").reshape(entry["dims"]).astype(np.float64)


def encode_params(params: Params) -> dict[str, Any]:
    return {name: encode_tensor(value) for name, value in params.items()}


def decode_params(data: dict[str, Any]) -> Params:
    return {name: decode_tensor(entry) for name, entry in data.items()}


def encode_adam(state: AdamState) -> dict[str, Any]:
    return {
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
        "t": state.t,
        "m": encode_params(state.m),
        "v": encode_params(state.v),
    }


def decode_adam(data: dict[str, Any]) -> AdamState:
    return AdamState(
        beta1=data["beta1"],
        beta2=data["beta2"],
        eps=data["eps"],
        t=int(data["t"]),
        m=decode_params(data["m"]),
        v=decode_params(data["v"]),
    )


def _digest(body: dict[str, Any]) -> str:
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_checkpoint(path: str | Path, body: dict[str, Any]) -> Path:
    """Write ``body`` (already JSON-encodable) atomically with its sha256."""
    path = Path(path)
    document = {"version": CHECKPOINT_VERSION, "sha256": _digest(body), "body": body}
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(document, sort_keys=True), encoding="utf-8")
        os.replace(tmp, path)
    except OSError as e:
        raise DataError(f"Cannot write checkpoint {path}: {e}") from e
    logger.debug(f"Checkpoint written: {path}")
    return path


def load_checkpoint(path: str | Path) -> dict[str, Any]:
    """Read and verify a checkpoint body."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"Cannot read checkpoint {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ChecksumError(f"Checkpoint {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict) or document.get("version") != CHECKPOINT_VERSION:
        raise ChecksumError(f"Checkpoint {path} has an unsupported format")
    body = document.get("body")
    if not isinstance(body, dict) or _digest(body) != document.get("sha256"):
        raise ChecksumError(f"Checkpoint {path} checksum mismatch")
    return body


def latest_checkpoint(directory: str | Path) -> Path | None:
    """Newest checkpoint that still verifies; corrupted ones are skipped."""
    candidates = sorted(Path(directory).glob("*.json"), key=lambda p: (len(p.stem), p.stem), reverse=True)
    for candidate in candidates:
        try:
            load_checkpoint(candidate)
        except ChecksumError as e:
            logger.warning(f"Skipping corrupted checkpoint: {e}")
            continue
        return candidate
    return None

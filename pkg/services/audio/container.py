# services/audio/container.py

import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from config import MelConfig
from models.audio import MelSpectrogram
from services.errors import ConfigMismatch, InvalidInput, ParseError

logger = logging.getLogger(__name__)

MEL_MAGIC = b"XLF5MEL1"
CHECKPOINT_MAGIC = b"XLF5CKP1"
_INT = np.dtype("<i4")
_FLOAT = np.dtype("<f4")


def _read_container(path: Union[str, Path], magic: bytes, what: str) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"{what} not found: {path}", {"path": str(path)})
    raw = path.read_bytes()
    if raw[: len(magic)] != magic:
        raise ParseError(f"{path} is not a {what}", path=str(path))
    return raw


def _read_ints(raw: bytes, count: int, offset: int, path: Union[str, Path]) -> np.ndarray:
    if len(raw) < offset + count * _INT.itemsize:
        raise ParseError(f"Truncated header in {path}", path=str(path))
    return np.frombuffer(raw, dtype=_INT, count=count, offset=offset)


def save_mel(path: Union[str, Path], mel: MelSpectrogram) -> None:
    """Write the flat mel container: magic, {T, n_mels, sr, hop} as int32, float32 rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array(
        [mel.n_frames, mel.n_mels, mel.config.sample_rate, mel.config.hop], dtype=_INT
    )
    with open(path, "wb") as f:
        f.write(MEL_MAGIC)
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(mel.data, dtype=_FLOAT).tobytes())


def load_mel(path: Union[str, Path], template: Optional[MelConfig] = None) -> MelSpectrogram:
    """
    Read a mel container.

    The container stores only T, n_mels, sr and hop; the remaining MelConfig
    fields come from `template`, which must agree on the stored ones.
    """
    raw = _read_container(path, MEL_MAGIC, "mel container")
    offset = len(MEL_MAGIC)
    header = _read_ints(raw, 4, offset, path)
    n_frames, n_mels, sample_rate, hop = (int(v) for v in header)
    if min(n_frames, n_mels, sample_rate, hop) <= 0:
        raise ParseError(f"{path} has a non-positive mel header", path=str(path))
    offset += header.nbytes
    expected = n_frames * n_mels * _FLOAT.itemsize
    if len(raw) - offset != expected:
        raise ParseError(
            f"{path} payload size mismatch",
            path=str(path),
            expected=expected,
            actual=len(raw) - offset,
        )
    data = np.frombuffer(raw, dtype=_FLOAT, offset=offset).reshape(n_frames, n_mels).copy()

    if template is None:
        template = MelConfig()
        template = replace(
            template,
            sample_rate=sample_rate,
            hop=hop,
            n_mels=n_mels,
            n_fft=max(template.n_fft, hop),
            fmax=min(template.fmax, sample_rate / 2),
        )
    elif (template.sample_rate, template.hop, template.n_mels) != (sample_rate, hop, n_mels):
        raise ConfigMismatch(
            f"{path} was computed with a different mel config",
            {"stored": [sample_rate, hop, n_mels]},
        )
    return MelSpectrogram(data=data, config=template)


def save_checkpoint(
    path: Union[str, Path],
    kind: str,
    config: Dict[str, Any],
    state: Dict[str, np.ndarray],
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    """
    Self-describing checkpoint: magic, int32 header length, JSON header,
    then float32 blobs in header order.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors = [{"name": name, "shape": list(np.shape(value))} for name, value in state.items()]
    header = json.dumps(
        {"kind": kind, "config": config, "extra": extra or {}, "tensors": tensors},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(np.array([len(header)], dtype=_INT).tobytes())
        f.write(header)
        for value in state.values():
            f.write(np.ascontiguousarray(value, dtype=_FLOAT).tobytes())
    logger.info(f"Saved {kind} checkpoint with {len(tensors)} tensors to {path}")


def load_checkpoint(
    path: Union[str, Path],
) -> Tuple[str, Dict[str, Any], Dict[str, np.ndarray], Dict[str, Any]]:
    raw = _read_container(path, CHECKPOINT_MAGIC, "checkpoint container")
    offset = len(CHECKPOINT_MAGIC)
    header_len = int(_read_ints(raw, 1, offset, path)[0])
    offset += _INT.itemsize
    if header_len <= 0 or offset + header_len > len(raw):
        raise ParseError(f"Truncated checkpoint header in {path}", path=str(path))
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
        kind, config, extra, tensors = (header[key] for key in ("kind", "config", "extra", "tensors"))
        specs = [(str(entry["name"]), tuple(int(n) for n in entry["shape"])) for entry in tensors]
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"Corrupt checkpoint header in {path}: {e}", path=str(path))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Incomplete checkpoint header in {path}: {e!r}", path=str(path))
    if not (isinstance(kind, str) and isinstance(config, dict) and isinstance(extra, dict)):
        raise ParseError(f"Malformed checkpoint header in {path}", path=str(path))
    offset += header_len

    state: Dict[str, np.ndarray] = {}
    for name, shape in specs:
        if any(n < 0 for n in shape):
            raise ParseError(f"Negative tensor shape in {path}", path=str(path), tensor=name)
        count = int(np.prod(shape)) if shape else 1
        if offset + count * _FLOAT.itemsize > len(raw):
            raise ParseError(f"Truncated checkpoint {path}", path=str(path), tensor=name)
        blob = np.frombuffer(raw, dtype=_FLOAT, count=count, offset=offset)
        state[name] = blob.reshape(shape).copy()
        offset += count * _FLOAT.itemsize
    return kind, config, state, extra

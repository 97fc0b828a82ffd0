"""IQ recordings: one raw cf32 file per antenna plus a JSON sidecar.

Payload files hold little-endian float32 pairs (I, Q) per sample. The sidecar
``<base>.json`` records the OFDM numerology and provenance:

.. code-block:: json

    {"format": "stbcid-iq", "version": 1, "dtype": "cf32_le",
     "n_subcarriers": 64, "n_guard": 6, "n_window": 2, "nu": 8,
     "n_symbols": 2000, "n_samples": 144000, "scheme": "AL",
     "sample_rate_tag": "T/72", "seed": 7, "files": ["x.rx0.cf32", "x.rx1.cf32"]}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .._validation import check_streams
from ..exceptions import FormatError
from ..txchain import OfdmParams, SampleStream

FORMAT_NAME = "stbcid-iq"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f4")
_REQUIRED = ("n_subcarriers", "n_guard", "n_window", "files")


def _base(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix == ".json" else path


def sidecar_path(path) -> Path:
    base = _base(path)
    return base.with_name(base.name + ".json")


def write_recording(streams, params: OfdmParams, path, *, scheme=None, seed=None,
                    sample_rate_tag: str | None = None, n_symbols: int | None = None) -> Path:
    """Write ``streams`` as cf32 payloads next to a JSON sidecar; returns the sidecar path."""
    arrays = check_streams(streams)
    base = _base(path)
    files = []
    for v, a in enumerate(arrays):
        name = f"{base.name}.rx{v}.cf32"
        iq = np.empty(2 * len(a), dtype=_DTYPE)
        iq[0::2] = a.real
        iq[1::2] = a.imag
        (base.parent / name).write_bytes(iq.tobytes())
        files.append(name)
    n_samples = len(arrays[0])
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dtype": "cf32_le",
        "n_subcarriers": params.n_subcarriers,
        "n_guard": params.n_guard,
        "n_window": params.n_window,
        "nu": params.nu,
        "n_symbols": n_symbols if n_symbols is not None else n_samples // params.symbol_length,
        "n_samples": n_samples,
        "scheme": None if scheme is None else str(getattr(scheme, "value", scheme)),
        "sample_rate_tag": sample_rate_tag or f"T/{params.symbol_length}",
        "seed": seed,
        "files": files,
    }
    side = sidecar_path(base)
    side.write_text(json.dumps(meta, indent=2) + "\n")
    return side


def _read_payload(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    usable = len(raw) - len(raw) % 8
    if usable != len(raw):
        raise FormatError(f"{path.name}: payload of {len(raw)} bytes is not a whole number of cf32 samples",
                          offset=usable)
    iq = np.frombuffer(raw, dtype=_DTYPE).astype(np.float64)
    return iq[0::2] + 1j * iq[1::2]


def read_recording(path) -> tuple[list[SampleStream], OfdmParams, dict]:
    """Read a recording written by :func:`write_recording`.

    ``path`` may be the sidecar or the common base path. Returns the streams,
    the OFDM parameters and the raw metadata dictionary.
    """
    side = sidecar_path(path)
    text = side.read_text()
    try:
        meta = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{side.name}: malformed metadata ({exc.msg})", offset=exc.pos) from None
    if not isinstance(meta, dict):
        raise FormatError(f"{side.name}: metadata must be a JSON object", offset=0)
    missing = [k for k in _REQUIRED if k not in meta]
    if missing:
        raise FormatError(f"{side.name}: missing metadata keys {missing}", offset=0)
    try:
        params = OfdmParams(int(meta["n_subcarriers"]), int(meta["n_guard"]), int(meta["n_window"]))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{side.name}: invalid OFDM parameters ({exc})", offset=0) from None
    streams = []
    for v, name in enumerate(meta["files"]):
        samples = _read_payload(side.parent / name)
        streams.append(SampleStream(samples, origin_index=0, antenna_id=v))
    lengths = {len(s) for s in streams}
    if len(lengths) > 1:
        raise FormatError(f"{side.name}: antenna payloads differ in length {sorted(lengths)}",
                          offset=8 * min(lengths))
    if "n_samples" in meta and streams and len(streams[0]) != meta["n_samples"]:
        raise FormatError(f"{side.name}: expected {meta['n_samples']} samples, found {len(streams[0])}",
                          offset=8 * min(len(streams[0]), int(meta["n_samples"])))
    return streams, params, meta

"""G-HFD human flow detection on simulated WiFi CSI.

Spectra are plain ``Spectrum`` tuples of a kind ("va", "doa" or "tof"), a
float32 grid and two axis ranges. Records read from JSON files come back as
dicts.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import _core
from ._core import (
    PAIR_MANIFEST_NAME,
    REQUEST_MANIFEST_NAME,
    SERVE_COMMAND_ENV,
    WORK_DIR_ENV,
    BoundaryError,
    ConfigError,
    DataError,
    GhfdError,
    alias_set,
    size_label,
)

__all__ = [
    "PAIR_MANIFEST_NAME",
    "REQUEST_MANIFEST_NAME",
    "SERVE_COMMAND_ENV",
    "WORK_DIR_ENV",
    "BoundaryError",
    "ConfigError",
    "DataError",
    "GhfdError",
    "Recording",
    "Spectrum",
    "alias_set",
    "decode_spec",
    "detect_file",
    "emit_pair_manifest",
    "encode_spec",
    "evaluate_files",
    "read_csi",
    "read_pair_manifest",
    "read_request_manifest",
    "read_spec",
    "serve_batch",
    "simulate",
    "simulate_to_file",
    "size_label",
    "write_spec",
]

PathLike = str | os.PathLike


class Spectrum(NamedTuple):
    kind: str
    grid: np.ndarray
    row_axis: tuple[float, float]
    col_axis: tuple[float, float]


class Recording(NamedTuple):
    surveillance: np.ndarray  # complex, antennas x subcarriers x frames
    reference: np.ndarray  # complex, subcarriers x frames
    config: dict
    frame_period_s: float


def _spectrum(t: tuple) -> Spectrum:
    kind, grid, row_axis, col_axis = t
    return Spectrum(kind, grid, tuple(row_axis), tuple(col_axis))


def _recording(t: tuple) -> Recording:
    surveillance, reference, config, period = t
    return Recording(surveillance, reference, json.loads(config), period)


def encode_spec(spec: Spectrum) -> bytes:
    return _core.encode_spec(spec.kind, np.atleast_2d(spec.grid), spec.row_axis, spec.col_axis)


def decode_spec(data: bytes) -> Spectrum:
    return _spectrum(_core.decode_spec(data))


def write_spec(path: PathLike, spec: Spectrum) -> None:
    _core.write_spec(Path(path), spec.kind, np.atleast_2d(spec.grid), spec.row_axis, spec.col_axis)


def read_spec(path: PathLike) -> Spectrum:
    return _spectrum(_core.read_spec(Path(path)))


def simulate(scenario: dict) -> Recording:
    return _recording(_core.simulate(json.dumps(scenario)))


def simulate_to_file(scenario: dict, path: PathLike) -> None:
    _core.simulate_to_file(json.dumps(scenario), Path(path))


def read_csi(path: PathLike) -> Recording:
    return _recording(_core.read_csi(Path(path)))


def detect_file(path: PathLike, max_windows: int = 10) -> dict:
    """Runs detection without a denoiser and returns the flow report."""
    return json.loads(_core.detect_file(Path(path), max_windows))


def read_pair_manifest(path: PathLike) -> list[dict]:
    return json.loads(_core.read_pair_manifest(Path(path)))


def emit_pair_manifest(directory: PathLike, records: list[dict]) -> Path:
    return Path(_core.emit_pair_manifest(Path(directory), json.dumps(records)))


def read_request_manifest(path: PathLike) -> list[dict]:
    return json.loads(_core.read_request_manifest(Path(path)))


def serve_batch(batch_dir: PathLike, fn: Callable[[Spectrum, dict], Spectrum]) -> int:
    """Answers every pending request of one exchange batch with ``fn``.

    Exceptions raised by ``fn`` become error markers for that request.
    Returns the number of requests processed.
    """

    def call(condition: tuple, request: str) -> tuple:
        out = fn(_spectrum(condition), json.loads(request))
        return (out.kind, np.atleast_2d(out.grid), tuple(out.row_axis), tuple(out.col_axis))

    return _core.serve_batch(Path(batch_dir), call)


def evaluate_files(truth_manifest: PathLike, reports_dir: PathLike) -> dict:
    return json.loads(_core.evaluate_files(Path(truth_manifest), Path(reports_dir)))

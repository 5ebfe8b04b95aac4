"""Instance serialization.

Two on-disk formats, both self-describing and byte-deterministic for a
fixed instance:

``.npz`` container
    numpy archive with arrays ``data``, ``spike_values``,
    ``spike_support`` and a JSON metadata string under ``meta``.

JSON-header binary (any other extension, ``.ysb`` by convention)
    One UTF-8 JSON line followed by the raw matrix.  Header keys, in
    order: ``format``, ``version``, ``model``, ``rows``, ``cols``,
    ``n``, ``signal``, ``seed``, ``flat``, ``support``,
    ``spike_values`` (nonzeros in support order), ``perturbation``,
    ``noise``.  The matrix is rows*cols float64 values, little-endian,
    row-major.

Custom noise samplers do not serialize; loading such an instance
returns it with ``noise=None``.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict

import numpy as np

from .models import Instance, NoiseSpec, Perturbation, SparseSpike

FORMAT_NAME = "sparse-spike-instance"
FORMAT_VERSION = 1


def _meta_dict(inst: Instance) -> dict:
    rows, cols = inst.data.shape
    noise = None
    if inst.noise is not None and inst.noise.family != "custom-symmetric":
        noise = {"family": inst.noise.family, "scale": inst.noise.scale,
                 "alpha": inst.noise.alpha}
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "model": inst.model,
        "rows": rows,
        "cols": cols,
        "n": inst.n,
        "signal": inst.signal,
        "seed": inst.seed,
        "flat": inst.spike.flat,
        "support": [int(i) for i in inst.spike.support],
        "spike_values": [float(x) for x in inst.spike.values[inst.spike.support]],
        "perturbation": None if inst.perturbation is None
        else asdict(inst.perturbation),
        "noise": noise,
    }


def _from_meta(meta: dict, data: np.ndarray) -> Instance:
    if meta.get("format") != FORMAT_NAME:
        raise ValueError("not a sparse-spike instance file")
    if meta.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {meta.get('version')}")
    support = np.asarray(meta["support"], dtype=np.int64)
    values = np.zeros(meta["cols"])
    values[support] = np.asarray(meta["spike_values"], dtype=np.float64)
    spike = SparseSpike(values=values, support=support, flat=meta["flat"])
    pert = meta.get("perturbation")
    noise = meta.get("noise")
    return Instance(
        model=meta["model"],
        data=data,
        spike=spike,
        signal=float(meta["signal"]),
        seed=int(meta["seed"]),
        perturbation=None if pert is None else Perturbation(**pert),
        noise=None if noise is None else NoiseSpec(**noise),
        n=meta["n"],
    )


def save_instance(path: str | os.PathLike, inst: Instance) -> None:
    """Write an instance; the format follows the file extension."""
    if str(path).endswith(".npz"):
        _save_npz(path, inst)
    else:
        _save_jsonbin(path, inst)


def load_instance(path: str | os.PathLike) -> Instance:
    if str(path).endswith(".npz"):
        return _load_npz(path)
    return _load_jsonbin(path)


def _save_npz(path, inst: Instance) -> None:
    np.savez(
        path,
        data=np.ascontiguousarray(inst.data, dtype=np.float64),
        spike_values=inst.spike.values,
        spike_support=inst.spike.support,
        meta=np.array(json.dumps(_meta_dict(inst), sort_keys=True)),
    )


def _load_npz(path) -> Instance:
    with np.load(path, allow_pickle=False) as archive:
        meta = json.loads(str(archive["meta"]))
        data = np.asarray(archive["data"], dtype=np.float64)
    return _from_meta(meta, data)


def _save_jsonbin(path, inst: Instance) -> None:
    header = json.dumps(_meta_dict(inst)).encode("utf-8") + b"\n"
    payload = np.ascontiguousarray(inst.data, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _load_jsonbin(path) -> Instance:
    with open(path, "rb") as fh:
        header = fh.readline()
        meta = json.loads(header.decode("utf-8"))
        rows, cols = meta["rows"], meta["cols"]
        payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise ValueError("truncated matrix payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
    return _from_meta(meta, data)

"""
Container de checkpoint:

    [8 bytes: tamanho do cabeçalho, uint64 little-endian]
    [cabeçalho JSON: tensors {nome: {shape, dtype, offset, nbytes}}, meta]
    [payload: valores little-endian concatenados]

Os momentos do Adam entram como tensores "adam.m.<nome>" / "adam.v.<nome>".
"""

import json
import logging
import struct

import numpy as np

from forecaster.errors import CheckpointError
from utils.files import atomic_write, read_bytes

logger = logging.getLogger(__name__)

HEADER_SIZE = struct.Struct("<Q")
ADAM_M, ADAM_V = "adam.m.", "adam.v."


def pack(tensors, meta):
    entries, chunks, offset = {}, [], 0
    for name, values in tensors.items():
        array = np.ascontiguousarray(values)
        array = array.astype(array.dtype.newbyteorder("<"), copy=False)
        raw = array.tobytes()
        entries[name] = {"shape": list(array.shape), "dtype": array.dtype.name, "offset": offset, "nbytes": len(raw)}
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"tensors": entries, "meta": meta}, sort_keys=True).encode("utf-8")
    return HEADER_SIZE.pack(len(header)) + header + b"".join(chunks)


def unpack(raw):
    if len(raw) < HEADER_SIZE.size:
        raise CheckpointError("checkpoint truncado (sem cabeçalho)")
    (size,) = HEADER_SIZE.unpack_from(raw, 0)
    start = HEADER_SIZE.size + size
    if start > len(raw):
        raise CheckpointError("checkpoint truncado (cabeçalho incompleto)")
    try:
        header = json.loads(raw[HEADER_SIZE.size:start])
    except ValueError as e:
        raise CheckpointError(f"cabeçalho inválido ({e})")

    tensors = {}
    for name, entry in header["tensors"].items():
        begin = start + entry["offset"]
        end = begin + entry["nbytes"]
        if end > len(raw):
            raise CheckpointError(f"checkpoint truncado no tensor {name}")
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        tensors[name] = np.frombuffer(raw[begin:end], dtype=dtype).reshape(entry["shape"]).copy()
    return tensors, header.get("meta", {})


class CheckpointRepository:
    def save(self, path, model, run_config, epoch, optimizer=None):
        tensors = dict(model.state_dict())
        meta = {"config": run_config.to_env_dict(), "epoch": int(epoch)}
        if optimizer is not None:
            state = optimizer.state_dict()
            meta["adam_t"] = state["t"]
            for name in state["m"]:
                tensors[ADAM_M + name] = state["m"][name]
                tensors[ADAM_V + name] = state["v"][name]
        with atomic_write(path, "wb") as handle:
            handle.write(pack(tensors, meta))
        logger.info(f"Checkpoint salvo em {path} (época {epoch})")

    def read(self, path):
        """(parâmetros, estado do Adam ou None, meta)."""
        tensors, meta = unpack(read_bytes(path))
        params = {k: v for k, v in tensors.items() if not k.startswith(("adam.m.", "adam.v."))}
        optimizer = None
        if "adam_t" in meta:
            optimizer = {
                "t": meta["adam_t"],
                "m": {k[len(ADAM_M):]: v for k, v in tensors.items() if k.startswith(ADAM_M)},
                "v": {k[len(ADAM_V):]: v for k, v in tensors.items() if k.startswith(ADAM_V)},
            }
        return params, optimizer, meta

    def load_into(self, path, model):
        """Carrega os parâmetros validando nomes e formatos contra o modelo."""
        params, optimizer, meta = self.read(path)
        model.load_state_dict(params)
        return optimizer, meta

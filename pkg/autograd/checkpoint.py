# autograd/checkpoint.py
from logzero import logger

from sego.binio import read_arrays, write_arrays
from sego.exceptions import DataIntegrityError

MAGIC = b"SEGOCKPT"


def save_checkpoint(path, params, extras=None):
    """Write named parameter tensors, then any extra named arrays."""
    arrays = {name: t.data for name, t in params.items()}
    for name, value in (extras or {}).items():
        arrays[f"extra.{name}"] = value
    write_arrays(path, arrays, magic=MAGIC)
    logger.info(f"Saved {len(params)} parameters to {path}")


def load_checkpoint(path, params):
    """Copy stored values into `params` in place and return the extras."""
    arrays = read_arrays(path, magic=MAGIC)
    extras = {k[len("extra."):]: v for k, v in arrays.items() if k.startswith("extra.")}
    stored = {k: v for k, v in arrays.items() if not k.startswith("extra.")}
    missing = sorted(set(params) - set(stored))
    unexpected = sorted(set(stored) - set(params))
    if missing or unexpected:
        raise DataIntegrityError(f"{path}: missing parameters {missing}, unexpected {unexpected}")
    for name, tensor in params.items():
        if stored[name].shape != tensor.shape:
            raise DataIntegrityError(f"{path}: {name} has shape {stored[name].shape}, expected {tensor.shape}")
        tensor.data[...] = stored[name]
    return extras

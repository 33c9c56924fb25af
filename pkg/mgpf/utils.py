"""
    @file:              utils.py
    @Author:            Maxence Larose

    @Creation Date:     10/2021
    @Last modification: 10/2026

    @Description:       A collection of functions that may or may not be useful.
"""

import hashlib
import json
import os
from typing import Any, Mapping

import numpy as np
import torch


def is_path_valid(
        path: str
) -> None:
    """
    Raise a FileNotFoundError if the given path doesn't exist.

    Parameters
    ----------
    path : str
        A path.

    Returns
    -------
    None
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Given path {path} does not exist.")


def canonical_digest(obj: Any) -> str:
    """
    Sha256 digest of the canonical JSON form (sorted keys, no whitespace) of a JSON-serializable object.

    Parameters
    ----------
    obj : Any
        A JSON-serializable object.

    Returns
    -------
    digest : str
        Hexadecimal digest.
    """
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def state_dict_digest(state_dict: Mapping[str, torch.Tensor]) -> str:
    """
    Sha256 digest of a module's weights, computed over tensor names and bytes in sorted name order.

    Parameters
    ----------
    state_dict : Mapping[str, torch.Tensor]
        Module state dictionary.

    Returns
    -------
    digest : str
        Hexadecimal digest.
    """
    sha = hashlib.sha256()
    for name in sorted(state_dict):
        sha.update(name.encode("utf-8"))
        sha.update(np.ascontiguousarray(state_dict[name].detach().cpu().numpy()).tobytes())

    return sha.hexdigest()


def set_determinism(seed: int) -> None:
    """
    Seed the global random number generators and ask torch for deterministic kernels.

    Parameters
    ----------
    seed : int
        Global seed.
    """
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)


def to_uint8_image(array: np.ndarray) -> np.ndarray:
    """
    Convert a float image with values in [0, 1] to an 8-bit image.

    Parameters
    ----------
    array : np.ndarray
        Float image.

    Returns
    -------
    image : np.ndarray
        8-bit image.
    """
    return np.round(np.clip(array, 0.0, 1.0) * 255.0).astype(np.uint8)

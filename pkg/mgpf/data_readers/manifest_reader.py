"""
    @file:              manifest_reader.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the functions used to read and write benchmark manifests. A manifest is a
                        JSON lines file, one case per line. Paths inside a manifest are relative to its folder.
"""

import json
import logging
import os
from typing import Any, Dict, List, Sequence

from mgpf.errors import MissingDataset

_logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.jsonl"


def read_manifest(path_to_manifest: str) -> List[Dict[str, Any]]:
    """
    Read a manifest.

    Parameters
    ----------
    path_to_manifest : str
        Path to the JSON lines manifest.

    Returns
    -------
    records : List[Dict[str, Any]]
        One record per case.
    """
    if not os.path.exists(path_to_manifest):
        raise MissingDataset(f"Manifest {path_to_manifest} does not exist. Run gen-data first.",
                             path=path_to_manifest)

    with open(path_to_manifest, "r", encoding="utf-8") as manifest_file:
        records = [json.loads(line) for line in manifest_file if line.strip()]

    _logger.debug(f"Read {len(records)} cases from manifest {path_to_manifest}.")

    return records


def write_manifest(records: Sequence[Dict[str, Any]], path_to_manifest: str) -> None:
    """
    Write a manifest with sorted keys, one case per line.

    Parameters
    ----------
    records : Sequence[Dict[str, Any]]
        One record per case.
    path_to_manifest : str
        Path to the JSON lines manifest.
    """
    with open(path_to_manifest, "w", encoding="utf-8") as manifest_file:
        for record in records:
            manifest_file.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")

"""
    @file:              datasets.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the torch dataset of the aligned training split : ground-truth images scaled
                        to [-1, 1], condition grids and prompt token ids.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import Dataset

from mgpf.data_generators.benchmark_cases_generator import BenchmarkCasesGenerator
from mgpf.data_model import BenchmarkCase

_logger = logging.getLogger(__name__)


class BenchmarkImageDataset(Dataset):
    """
    In-memory dataset of benchmark cases.
    """

    def __init__(self, cases: Sequence[BenchmarkCase]):
        if not cases:
            raise ValueError("The training dataset is empty.")

        self.images = np.stack([np.moveaxis(case.image, -1, 0) * 2.0 - 1.0 for case in cases]).astype(np.float32)
        self.conditions = np.stack([case.condition.grid for case in cases]).astype(np.float32)
        self.tokens = [list(case.parsed_prompt.tokens) for case in cases]
        self.case_ids = [case.case_id for case in cases]

    @classmethod
    def from_manifest(cls, path_to_manifest: str, limit: Optional[int] = None, **kwargs) -> "BenchmarkImageDataset":
        generator = BenchmarkCasesGenerator(path_to_manifest, limit=limit, **kwargs)
        cases = list(generator)
        if generator.cases_who_failed:
            _logger.warning(f"{len(generator.cases_who_failed)} training cases were skipped.")

        return cls(cases)

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, index: int) -> Dict[str, Any]:
        return {
            "image": torch.from_numpy(self.images[index]),
            "condition": torch.from_numpy(self.conditions[index]),
            "tokens": self.tokens[index]
        }


def collate_cases(batch: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Stack images and conditions. Token lists stay a list, padded later by the token embedder.
    """
    return {
        "image": torch.stack([item["image"] for item in batch]),
        "condition": torch.stack([item["condition"] for item in batch]),
        "tokens": [item["tokens"] for item in batch]
    }

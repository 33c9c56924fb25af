"""
    @file:              benchmark_cases_generator.py
    @Author:            Maxence Larose

    @Creation Date:     10/2021
    @Last modification: 10/2026

    @Description:       This file contains the BenchmarkCasesGenerator class which is used to iterate on the cases of a
                        benchmark manifest, reading the images, the condition and the masks of each case and parsing its
                        prompt. The BenchmarkCasesGenerator inherits from the Generator abstract class.
"""

from collections.abc import Generator
import logging
import os
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from mgpf.data_model import BenchmarkCase, ConditionImage
from mgpf.data_readers.image_reader import ImageReader
from mgpf.data_readers.manifest_reader import read_manifest
from mgpf.data_readers.mask_reader import MaskReader
from mgpf.errors import MGPFError
from mgpf.grammar.prompt_parser import parse_prompt
from mgpf.grammar.vocabulary import Vocabulary

_logger = logging.getLogger(__name__)


class CaseWhoFailed(NamedTuple):
    id: str
    error: str
    message: str


class BenchmarkCasesGenerator(Generator):
    """
    A class used to iterate on the cases of a benchmark manifest. Cases whose files cannot be read or whose prompt does
    not parse are skipped and listed in cases_who_failed.
    """

    def __init__(
            self,
            path_to_manifest: str,
            vocabulary: Optional[Vocabulary] = None,
            case_ids: Optional[Sequence[str]] = None,
            limit: Optional[int] = None
    ) -> None:
        """
        Used to read the manifest and select the cases to iterate on.

        Parameters
        ----------
        path_to_manifest : str
            Path to the JSON lines manifest.
        vocabulary : Optional[Vocabulary]
            Closed vocabulary used to parse the prompts. Defaults to the packaged vocabulary.
        case_ids : Optional[Sequence[str]]
            Identifiers of the cases to keep, in manifest order. Every case is kept when None.
        limit : Optional[int]
            Maximum number of cases.
        """
        self._path_to_manifest = path_to_manifest
        self._path_to_split = os.path.dirname(os.path.abspath(path_to_manifest))
        self._vocabulary = Vocabulary.default() if vocabulary is None else vocabulary

        records = read_manifest(path_to_manifest)
        if case_ids is not None:
            wanted = set(case_ids)
            records = [record for record in records if record["id"] in wanted]
        if limit is not None:
            records = records[:limit]
        self._records = records

        self._current_index = 0
        self._cases_who_failed = []
        _logger.info(f"Loading benchmark cases (Total : {self.__len__()})")

    def __len__(self) -> int:
        """
        Total number of selected cases.

        Returns
        -------
        length: int
            Total number of selected cases.
        """
        return len(self._records)

    @property
    def records(self) -> List[Dict[str, Any]]:
        return list(self._records)

    @property
    def cases_who_failed(self) -> List[CaseWhoFailed]:
        """
        List of cases that could not be loaded.

        Returns
        -------
        cases_who_failed : List[CaseWhoFailed]
            Identifier, error code and message of every skipped case.
        """
        return self._cases_who_failed

    def _path(self, relative_path: str) -> str:
        return os.path.join(self._path_to_split, relative_path)

    def load_case(self, record: Dict[str, Any]) -> BenchmarkCase:
        """
        Read the files of a manifest record and parse its prompt.

        Parameters
        ----------
        record : Dict[str, Any]
            Manifest record.

        Returns
        -------
        case : BenchmarkCase
            Benchmark case.
        """
        image = ImageReader(self._path(record["image"])).get_array()
        condition_array = ImageReader(self._path(record["condition"])).get_array()
        if condition_array.ndim == 2:
            condition_array = condition_array[None]
        else:
            condition_array = np.moveaxis(condition_array, -1, 0)

        masks = MaskReader({name: self._path(path) for name, path in record["masks"].items()}).get_object_masks()
        parsed_prompt = parse_prompt(record["prompt"], [mask.name for mask in masks], self._vocabulary)

        return BenchmarkCase(
            case_id=record["id"],
            split=record.get("split", ""),
            image=image,
            condition=ConditionImage(grid=condition_array, kind=record.get("condition_kind", "edge")),
            masks=masks,
            prompt=record["prompt"],
            parsed_prompt=parsed_prompt,
            expected_pairs=[tuple(pair) for pair in record["expected_pairs"]],
            expected_extra=list(record["expected_extra"]),
            scene=record.get("scene")
        )

    def send(self, _) -> BenchmarkCase:
        """
        Resumes the execution and sends a value into the generator function. This method returns the next case that
        loads or raises StopIteration (via the self.throw method) once every case has been visited.

        Returns
        -------
        case : BenchmarkCase
            Benchmark case.
        """
        while self._current_index < self.__len__():
            record = self._records[self._current_index]
            self._current_index += 1
            _logger.debug(f"Loading case {record['id']}")

            try:
                return self.load_case(record)
            except (MGPFError, OSError, KeyError, RuntimeError) as error:
                code = error.code if isinstance(error, MGPFError) else type(error).__name__
                _logger.warning(f"Case {record.get('id')} could not be loaded : {error}")
                self._cases_who_failed.append(CaseWhoFailed(id=str(record.get("id")), error=code, message=str(error)))

        self.throw()

    def throw(self, typ: Exception = StopIteration, value=None, traceback=None) -> None:
        """
        Raises an exception of type typ.
        """
        raise typ

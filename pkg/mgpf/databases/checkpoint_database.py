"""
    @file:              checkpoint_database.py
    @Author:            Maxence Larose

    @Creation Date:     10/2021
    @Last modification: 10/2026

    @Description:       This file contains the CheckpointDatabase class that is used to interact with an hdf5 file
                        holding the weights of a model. The file stores a JSON header (architecture hyper-parameters,
                        vocabulary and schedule digests, links to other checkpoints) as an attribute and one dataset
                        per tensor of the model's state dictionary.
"""

import json
import logging
import os
from typing import Any, Dict, Mapping, Tuple

import h5py
import numpy as np
import torch

from mgpf.errors import MissingCheckpoint

_logger = logging.getLogger(__name__)


class CheckpointDatabase:
    """
    A class that is used to interact with a checkpoint database, an hdf5 file holding a header and the tensors of a
    model.
    """

    HEADER = "header"
    TENSORS = "tensors"

    def __init__(
            self,
            path_to_database: str,
    ):
        """
        Used to initialize the path to the database.

        Parameters
        ----------
        path_to_database : str
            Path to database.
        """
        self.path_to_database = path_to_database

    @property
    def path_to_database(self) -> str:
        """
        Path to database.

        Returns
        -------
        path_to_database : str
            Path to the hdf5 checkpoint.
        """
        return self._path_to_database

    @path_to_database.setter
    def path_to_database(self, path_to_database: str) -> None:
        """
        Path to database.

        Parameters
        ----------
        path_to_database : str
            Path to database.
        """
        if path_to_database.endswith(".h5"):
            self._path_to_database = path_to_database
        else:
            self._path_to_database = f"{path_to_database}.h5"

    @property
    def exists(self) -> bool:
        return os.path.exists(self.path_to_database)

    def _check_authorization_of_database_creation(
            self,
            overwrite_database: bool
    ) -> None:
        """
        Check if database's creation is allowed.

        Parameters
        ----------
        overwrite_database : bool
            Overwrite existing database.
        """
        if self.exists:
            if not overwrite_database:
                raise FileExistsError(f"The checkpoint {self.path_to_database} already exists. You may overwrite it "
                                      f"using overwrite_database = True.")
            else:
                _logger.info(f"Overwriting HDF5 checkpoint with path : {self.path_to_database}")
        else:
            _logger.info(f"Writing HDF5 checkpoint with path : {self.path_to_database}")

    def _check_existence(self) -> None:
        if not self.exists:
            raise MissingCheckpoint(f"Checkpoint {self.path_to_database} does not exist.",
                                    path=self.path_to_database)

    def create(
            self,
            header: Dict[str, Any],
            state_dict: Mapping[str, torch.Tensor],
            overwrite_database: bool = False
    ) -> None:
        """
        Write a checkpoint.

        Parameters
        ----------
        header : Dict[str, Any]
            JSON-serializable header.
        state_dict : Mapping[str, torch.Tensor]
            Model state dictionary.
        overwrite_database : bool, default = False.
            Overwrite existing database.
        """
        self._check_authorization_of_database_creation(overwrite_database=overwrite_database)

        directory = os.path.dirname(self.path_to_database)
        if directory:
            os.makedirs(directory, exist_ok=True)

        with h5py.File(self.path_to_database, "w") as hf:
            hf.attrs.create(name=self.HEADER, data=json.dumps(header, sort_keys=True))
            tensors_group = hf.create_group(name=self.TENSORS)
            for name, tensor in state_dict.items():
                tensors_group.create_dataset(name=name, data=tensor.detach().cpu().numpy())

        _logger.info(f"Checkpoint written with {len(state_dict)} tensors.")

    @property
    def header(self) -> Dict[str, Any]:
        """
        Header of the checkpoint.

        Returns
        -------
        header : Dict[str, Any]
            Decoded JSON header.
        """
        self._check_existence()
        with h5py.File(self.path_to_database, "r") as hf:
            return json.loads(hf.attrs[self.HEADER])

    def load(self) -> Tuple[Dict[str, Any], Dict[str, torch.Tensor]]:
        """
        Read a checkpoint.

        Returns
        -------
        header, state_dict : Tuple[Dict[str, Any], Dict[str, torch.Tensor]]
            Decoded JSON header and model state dictionary.
        """
        self._check_existence()
        with h5py.File(self.path_to_database, "r") as hf:
            header = json.loads(hf.attrs[self.HEADER])
            state_dict = {
                name: torch.from_numpy(np.array(dataset[()]))
                for name, dataset in hf[self.TENSORS].items()
            }

        return header, state_dict

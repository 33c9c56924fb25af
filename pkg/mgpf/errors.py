"""
    @file:              errors.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the exceptions raised by the mgpf package. Every exception carries a stable
                        code used by the command-line interface to emit machine-readable errors, and also derives from
                        the closest builtin exception.
"""

from typing import Any, Dict


class MGPFError(Exception):
    """
    Base class of all the exceptions raised by the mgpf package.
    """

    code = "mgpf_error"

    def __init__(self, message: str, **details: Any):
        """
        Constructor of the MGPFError class.

        Parameters
        ----------
        message : str
            Human-readable explanation.
        **details : Any
            Extra context (names, indices, paths) added to the machine-readable form of the error.
        """
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        return self.message

    def to_dict(self) -> Dict[str, Any]:
        """
        Machine-readable form of the error.

        Returns
        -------
        error : Dict[str, Any]
            Dictionary with the error code, the message and the details.
        """
        return {
            "error": self.code,
            "message": self.message,
            "details": {key: value if isinstance(value, (int, float, bool)) else str(value)
                        for key, value in self.details.items()}
        }


class UnknownWord(MGPFError, ValueError):
    code = "unknown_word"


class GrammarMismatch(MGPFError, ValueError):
    code = "grammar_mismatch"


class EmptyPrompt(MGPFError, ValueError):
    code = "empty_prompt"


class ShapeMismatch(MGPFError, ValueError):
    code = "shape_mismatch"


class NonIntegerFactor(MGPFError, ValueError):
    code = "non_integer_factor"


class TimestepOutOfRange(MGPFError, ValueError):
    code = "timestep_out_of_range"


class NonFiniteInput(MGPFError, ValueError):
    code = "non_finite_input"


class NonFiniteActivation(MGPFError, RuntimeError):
    code = "non_finite_activation"


class NonFiniteGradient(MGPFError, RuntimeError):
    code = "non_finite_gradient"


class DivergedLoss(MGPFError, RuntimeError):
    code = "diverged_loss"


class UnknownToken(MGPFError, LookupError):
    code = "unknown_token"


class MissingLayer(MGPFError, LookupError):
    code = "missing_layer"


class MissingToken(MGPFError, LookupError):
    code = "missing_token"


class MissingMap(MGPFError, LookupError):
    code = "missing_map"


class MissingMask(MGPFError, LookupError):
    code = "missing_mask"


class MissingPyramidLevel(MGPFError, LookupError):
    code = "missing_pyramid_level"


class NotNormalized(MGPFError, ValueError):
    code = "not_normalized"


class PlacementFailure(MGPFError, RuntimeError):
    code = "placement_failure"


class EmptyMaskRegion(MGPFError, ValueError):
    code = "empty_mask_region"


class ClassifierUnavailable(MGPFError, RuntimeError):
    code = "classifier_unavailable"


class ConfigInvalid(MGPFError, ValueError):
    code = "config_invalid"


class MissingCheckpoint(MGPFError, FileNotFoundError):
    code = "missing_checkpoint"


class MissingDataset(MGPFError, FileNotFoundError):
    code = "missing_dataset"


class UntrustedCheckpoint(MGPFError, RuntimeError):
    code = "untrusted_checkpoint"

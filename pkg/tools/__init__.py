"""Tools package: file formats and survey utilities."""
from .io_tools import (
    ParameterFile,
    fit_payload,
    read_integer_table,
    read_parameters,
    read_responses,
    truth_payload,
    write_json,
    write_responses,
    write_table,
)
from .survey_tools import (
    GroupProfile,
    binarize_likert,
    profile_groups,
    read_groups,
    read_key,
)

__all__ = [
    "ParameterFile",
    "fit_payload",
    "read_integer_table",
    "read_parameters",
    "read_responses",
    "truth_payload",
    "write_json",
    "write_responses",
    "write_table",
    "GroupProfile",
    "binarize_likert",
    "profile_groups",
    "read_groups",
    "read_key",
]

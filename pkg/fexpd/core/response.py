import importlib.metadata
from typing import Any, Dict, Optional

from fexpd.core.models.response import Report, ReportMeta


def package_version() -> str:
    try:
        return importlib.metadata.version("fexpd")
    except importlib.metadata.PackageNotFoundError:
        return "0.0.0"


def create_report(
    data: Any = None,
    message: Optional[str] = None,
    *,
    config_hash: str,
    command: str,
    seeds: Optional[Dict[str, int]] = None,
) -> Report:
    """
    Create a standardized report in the `Report` format.

    Every JSON artefact written by the CLI goes through this function so that
    all outputs share the same envelope: success flag, payload and provenance
    metadata. Failing commands write no report; they log and exit with the
    error's exit code. The metadata carries no timestamp or random
    identifier, so rerunning a command with the same configuration yields
    byte-identical files.

    Parameters
    ----------
    data : Any, optional
        The command's payload.
    message : str, optional
        Human-readable summary.
    config_hash : str
        Hash of the experiment configuration.
    command : str
        Name of the producing command.
    seeds : dict, optional
        Seeds used by the command.

    Returns
    -------
    Report
        A structured report ready to be serialized.
    """
    return Report(
        message=message,
        data=data,
        meta=ReportMeta(
            config_hash=config_hash,
            command=command,
            package_version=package_version(),
            seeds=seeds,
        ),
    )

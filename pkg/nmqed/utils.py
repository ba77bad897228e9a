from __future__ import annotations
import os
import sys
import time
import math
from datetime import datetime, timezone
from importlib.metadata import version, PackageNotFoundError
from pathlib import Path
from typing import Any
from platformdirs import user_data_dir


__all__ = [
    "OUTPUT_DIR_ENV",
    "SIGNIFICANT_DIGITS",
    "format_number",
    "default_output_dir",
    "package_versions",
    "timestamp",
]

OUTPUT_DIR_ENV = "NMQED_OUTPUT_DIR"
SIGNIFICANT_DIGITS = 17


def format_number(value: Any) -> str:
    """
    Format a number with 17 significant digits, which is enough to read
    back the very same IEEE 754 double. Integers and booleans are printed
    as such, strings are passed through.

    :param value: The value to format.
    :return: The textual representation of the value.
    :raises ValueError: If the value is a non-finite float.
    """
    if isinstance(value, (bool, str)):
        return str(value).lower() if isinstance(value, bool) else value
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"Cannot format non-finite value {value!r}.")
    return format(value, f".{SIGNIFICANT_DIGITS}g")


def default_output_dir(name: str) -> Path:
    """Return the directory where the results of ``name`` go by default.

    The ``NMQED_OUTPUT_DIR`` environment variable takes precedence over the
    per-user data directory, e.g. ``~/.local/share/nmqed/runs/<name>``.

    :param name: The name of the preset or configuration.
    :return: The default output directory.
    """
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base:
        return Path(base) / name
    return Path(user_data_dir("nmqed")) / "runs" / name


def package_versions() -> dict[str, str]:
    """
    Return the versions of the packages a run depends on, to be recorded
    in the run manifest.
    """
    versions = {"python": sys.version.split()[0]}
    for package in ("nmqed", "numpy", "scipy", "jsonschema"):
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def timestamp() -> dict[str, Any]:
    """Return the current timestamp in multiple standard formats.

    The returned dictionary contains:
      - ``unix_time``: seconds since the Unix epoch (float)
      - ``mjd``: Modified Julian Date (days since 1858-11-17)
      - ``iso8601``: UTC time in ISO 8601 format with millisecond precision

    :return: A dictionary containing the current time in multiple formats.
    """
    now = time.time()
    iso8601 = datetime.fromtimestamp(now, tz=timezone.utc)
    iso8601 = iso8601.isoformat(timespec="milliseconds").replace("+00:00", "Z")
    return {
        "unix_time": now,
        "mjd": (now / 86400.0) + 40587.0,
        "iso8601": iso8601
    }

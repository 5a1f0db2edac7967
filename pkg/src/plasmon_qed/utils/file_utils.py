"""
Writers for experiment outputs: results CSV, metadata sidecar and failure manifest
"""

import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

UTF8_BOM = b"\xef\xbb\xbf"


def trim_bom(data: Union[bytes, str]) -> Union[bytes, str]:
    """Drop a leading UTF-8 byte-order mark from raw bytes or decoded text"""
    if isinstance(data, bytes):
        return data[len(UTF8_BOM) :] if data.startswith(UTF8_BOM) else data
    return data[1:] if data.startswith("\ufeff") else data


def save_file(file_path: Path, data: bytes, remove_bom: bool = True) -> int:
    """
    Write one output file, creating its directory

    Args:
        file_path: Destination
        data: Encoded content
        remove_bom: Strip a leading byte-order mark first

    Returns:
        Number of bytes written
    """
    payload = trim_bom(data) if remove_bom else data
    file_path.parent.mkdir(parents=True, exist_ok=True)
    size = file_path.write_bytes(payload)
    logger.info(f"Wrote {file_path.name}: {size:,} bytes")
    return size


def format_value(value: Union[int, float, str]) -> str:
    """17 significant digits in scientific notation; ints and text unchanged"""
    if isinstance(value, bool) or isinstance(value, str):
        return str(value)
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.16e}"


def write_results_csv(file_path: Path, columns: Sequence[str], rows: Iterable[Sequence[Union[int, float, str]]]) -> int:
    """
    Write a header line and one comma-separated line per row

    Returns:
        Number of data rows written
    """
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} values for {len(columns)} columns")
        lines.append(",".join(format_value(value) for value in row))
    save_file(file_path, ("\n".join(lines) + "\n").encode("utf-8"))
    return len(lines) - 1


def write_meta(file_path: Path, entries: Dict[str, str]) -> None:
    """Write `key = value` lines in insertion order"""
    text = "".join(f"{key} = {value}\n" for key, value in entries.items())
    save_file(file_path, text.encode("utf-8"))


def write_failures(file_path: Path, failures: List[Tuple[int, str, str]]) -> None:
    """Write one `index<TAB>point<TAB>error` line per failed sweep point"""
    text = "".join(f"{index}\t{point}\t{error}\n" for index, point, error in failures)
    save_file(file_path, text.encode("utf-8"))


def get_file_sizes(directory: Path, filenames: List[str]) -> Dict[str, int]:
    """Size in bytes of each named output file, 0 when it was not written"""
    paths = {name: directory / name for name in filenames}
    return {name: path.stat().st_size if path.is_file() else 0 for name, path in paths.items()}


def print_file_summary(directory: Path, filenames: List[str]) -> None:
    """Print which experiment outputs exist and how large they are"""
    print(f"\nOutput files in {directory}:")
    for filename, size in get_file_sizes(directory, filenames).items():
        status = f"{size:,} bytes" if size else "not written"
        print(f"  {filename}: {status}")

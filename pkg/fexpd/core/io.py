"""
CSV and JSON artefacts.

Every CSV starts with ``# key=value`` comment lines (``config_hash`` first),
then a header row. Floats are written with ``repr`` so they read back
bit-exactly. Files are staged in memory and only written, each through a
temporary sibling and ``os.replace``, when the command commits.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from fexpd.core.exceptions import DataError
from fexpd.core.models.results import PosteriorChain, SamplePath


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    return str(value)


def csv_text(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: Optional[Mapping[str, Any]] = None,
) -> str:
    buffer = io.StringIO()
    for key, value in (meta or {}).items():
        buffer.write(f"# {key}={_cell(value)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def table_text(
    records: List[Dict[str, Any]], meta: Optional[Mapping[str, Any]] = None
) -> str:
    """CSV of a list of flat dicts; columns follow the first record."""
    header = list(records[0]) if records else []
    return csv_text(header, ([r.get(h) for h in header] for r in records), meta)


def report_text(report: BaseModel) -> str:
    payload = report.model_dump(mode="json")
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write_text(target: Path, text: str) -> None:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class OutputStage:
    """
    Files a command produces, held until ``commit``.

    Example:
        ```python
        stage = OutputStage("results")
        stage.add("fit.json", report_text(report))
        stage.commit()
        ```
    """

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self._pending: Dict[str, str] = {}

    def add(self, name: str, text: str) -> Path:
        self._pending[name] = text
        return self.out_dir / name

    @property
    def names(self) -> List[str]:
        return sorted(self._pending)

    def commit(self) -> List[Path]:
        written = []
        for name in self.names:
            target = self.out_dir / name
            atomic_write_text(target, self._pending[name])
            written.append(target)
        logger.info(f"wrote {len(written)} files to {self.out_dir}")
        self._pending.clear()
        return written


def path_csv_text(path: SamplePath, config_hash: str) -> str:
    meta = {"config_hash": config_hash, "n": path.n, "generator": path.generator}
    if path.seed is not None:
        meta["seed"] = path.seed
    if path.truth_hash is not None:
        meta["truth_hash"] = path.truth_hash
    return csv_text(["x"], ([x] for x in path.values), meta)


def chain_csv_text(chain: PosteriorChain, config_hash: str) -> str:
    thetas = [f"theta_{j}" for j in range(chain.k + 1)]
    header = ["iteration", "d", *thetas, "log_post"]
    rows = (
        [chain.warmup + i, chain.d[i], *chain.theta[i], chain.log_post[i]]
        for i in range(chain.size)
    )
    meta = {
        "config_hash": config_hash,
        "k": chain.k,
        "seed": chain.seed,
        "warmup": chain.warmup,
    }
    return csv_text(header, rows, meta)


def write_path_csv(path: SamplePath, target: str | Path, config_hash: str) -> Path:
    target = Path(target)
    atomic_write_text(target, path_csv_text(path, config_hash))
    return target


def write_chain_csv(
    chain: PosteriorChain, target: str | Path, config_hash: str
) -> Path:
    target = Path(target)
    atomic_write_text(target, chain_csv_text(chain, config_hash))
    return target


def write_report_json(report: BaseModel, target: str | Path) -> Path:
    target = Path(target)
    atomic_write_text(target, report_text(report))
    return target


def _read_csv(source: str | Path) -> tuple[Dict[str, str], List[str], np.ndarray]:
    source = Path(source)
    if not source.is_file():
        raise DataError(
            message=f"data file not found: {source}", detail={"path": str(source)}
        )
    meta: Dict[str, str] = {}
    body = []
    try:
        with source.open(encoding="utf-8", newline="") as handle:
            for line in handle:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                elif line.strip():
                    body.append(line)
        reader = csv.reader(body)
        header = next(reader)
        values = np.array([[float(v) for v in row] for row in reader], dtype=float)
    except (StopIteration, ValueError, UnicodeDecodeError) as e:
        raise DataError(
            message=f"malformed CSV {source}: {e}", detail={"path": str(source)}
        ) from e
    if values.size and values.shape[1] != len(header):
        raise DataError(message=f"column count does not match the header in {source}")
    return meta, header, values.reshape(-1, len(header))


def read_path_csv(source: str | Path) -> SamplePath:
    """
    Load a path CSV: one value per line under an ``x`` header, as written by
    ``write_path_csv``. Extra columns next to ``x`` are ignored.

    Raises:
        DataError: If the file is missing, malformed, non-finite or shorter than 8.
    """
    meta, header, values = _read_csv(source)
    if "x" not in header:
        raise DataError(
            message=f"{source} has no 'x' column", detail={"header": header}
        )
    x = values[:, header.index("x")]
    if len(x) < 8:
        raise DataError(message=f"{source} holds {len(x)} observations; need >= 8")
    if not np.all(np.isfinite(x)):
        raise DataError(message=f"{source} contains non-finite values")
    seed = meta.get("seed")
    return SamplePath(
        values=x,
        seed=int(seed) if seed else None,
        truth_hash=meta.get("truth_hash"),
        generator=meta.get("generator", "data"),
    )


def read_chain_csv(source: str | Path) -> PosteriorChain:
    """Inverse of ``write_chain_csv``; acceptance and scales are not stored."""
    meta, header, values = _read_csv(source)
    try:
        k = int(meta["k"])
        i_d, i_lp = header.index("d"), header.index("log_post")
        theta_cols = [header.index(f"theta_{j}") for j in range(k + 1)]
    except (KeyError, ValueError) as e:
        raise DataError(message=f"{source} is not a chain CSV: {e}") from e
    return PosteriorChain(
        k=k,
        d=values[:, i_d],
        theta=values[:, theta_cols],
        log_post=values[:, i_lp],
        acceptance={},
        scales={},
        seed=int(meta.get("seed", 0)),
        warmup=int(meta.get("warmup", 0)),
    )

"""Result files: TSV tables, legacy VTK snapshots and the run metadata."""

import csv
import platform
from collections.abc import Iterable, Mapping, Sequence
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

import pressfrac

if TYPE_CHECKING:
    from pressfrac.models.fields import NodalField
    from utils.config import ProblemConfig

VTK_HEADER = "# vtk DataFile Version 3.0"
_VERSIONED = ("numpy", "scipy", "msgspec", "rapidfuzz")


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f"{value:.10g}"
    if value is None:
        return "nan"
    return str(value)


def write_tsv(path: "str | Path", header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)
    return path


def read_tsv(path: "str | Path") -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f, delimiter="\t")
        header = next(reader)
        return header, list(reader)


def write_vtk(path: "str | Path", u: "NodalField", d: "NodalField", *, title: str = "pressfrac") -> Path:
    """Legacy ASCII unstructured grid with point data ``damage`` and ``displacement``."""
    mesh = d.mesh
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    cells = [mesh.element_nodes(e) for e in range(mesh.n_elements)]
    size = sum(len(c) + 1 for c in cells)
    points = np.column_stack([mesh.nodes, np.zeros(mesh.n_nodes)])
    vectors = np.column_stack([u.nodal, np.zeros(mesh.n_nodes)])

    with path.open("w", encoding="utf-8") as f:
        f.write(f"{VTK_HEADER}\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {mesh.n_nodes} double\n")
        np.savetxt(f, points, fmt="%.12g")

        f.write(f"CELLS {mesh.n_elements} {size}\n")
        for c in cells:
            f.write(f"{len(c)} {' '.join(map(str, c))}\n")
        f.write(f"CELL_TYPES {mesh.n_elements}\n")
        f.write("".join(f"{kind.vtk_cell_type}\n" for kind in mesh.kinds))

        f.write(f"POINT_DATA {mesh.n_nodes}\nSCALARS damage double 1\nLOOKUP_TABLE default\n")
        np.savetxt(f, d.values, fmt="%.12g")
        f.write("VECTORS displacement double\n")
        np.savetxt(f, vectors, fmt="%.12g")
    return path


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version(), "pressfrac": pressfrac.__version__}
    for name in _VERSIONED:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_run_meta(path: "str | Path", config: "ProblemConfig", summary: Mapping[str, Any]) -> Path:
    """Run summary and versions as comments, followed by the resolved config."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = [f"# written {datetime.now(timezone.utc).isoformat(timespec='seconds')}"]
    lines += [f"# {key}: {_cell(value)}" for key, value in summary.items()]
    lines += [f"# version {name}: {version}" for name, version in package_versions().items()]
    lines += ["", config.to_ini()]
    path.write_text("\n".join(lines), encoding="utf-8")
    return path

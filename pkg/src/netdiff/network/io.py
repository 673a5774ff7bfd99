"""Edge-list text format for networks.

    # comments anywhere, after '#'
    n <count>
    radius <d>            (optional)
    coords                (optional block of "id x y" lines)
    edges [sym]           (block of "i j" pairs, 0-based)

Without ``sym`` the edge list must already list both directions of every tie.
"""

import logging
from pathlib import Path
from typing import Literal

import numpy as np

from netdiff import DataValidationError, InvalidArgumentError, ParseError
from netdiff.models.schemas import Network
from netdiff.network.geometry import build_network

logger = logging.getLogger(__name__)


def _tokens(raw: str) -> list[str]:
    return raw.split("#", 1)[0].split()


def _parse_int(token: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", line_no) from None


def _parse_float(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", line_no) from None


def read_network(path: str | Path) -> Network:
    n: int | None = None
    radius: float | None = None
    coords: dict[int, tuple[float, float]] = {}
    edges: list[tuple[int, int, int]] = []
    symmetrize = False
    block: Literal["header", "coords", "edges"] = "header"
    seen_coords = False

    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DataValidationError(f"cannot read {path}: {e}") from e

    for line_no, raw in enumerate(lines, start=1):
        tokens = _tokens(raw)
        if not tokens:
            continue
        keyword = tokens[0]

        if n is None:
            if keyword != "n" or len(tokens) != 2:
                raise ParseError("first entry must be 'n <count>'", line_no)
            n = _parse_int(tokens[1], line_no)
            if n < 1:
                raise ParseError(f"node count must be >= 1, got {n}", line_no)
            continue

        if keyword == "radius" and block == "header":
            if len(tokens) != 2:
                raise ParseError("expected 'radius <d>'", line_no)
            radius = _parse_float(tokens[1], line_no)
        elif keyword == "coords" and len(tokens) == 1 and block == "header":
            block = "coords"
            seen_coords = True
        elif keyword == "edges" and block != "edges":
            if len(tokens) == 2 and tokens[1] == "sym":
                symmetrize = True
            elif len(tokens) != 1:
                raise ParseError("expected 'edges' or 'edges sym'", line_no)
            block = "edges"
        elif block == "coords":
            if len(tokens) != 3:
                raise ParseError("coordinate lines must be 'id x y'", line_no)
            node = _parse_int(tokens[0], line_no)
            if node in coords:
                raise DataValidationError(f"line {line_no}: duplicate coordinates for {node}")
            coords[node] = (
                _parse_float(tokens[1], line_no),
                _parse_float(tokens[2], line_no),
            )
        elif block == "edges":
            if len(tokens) != 2:
                raise ParseError("edge lines must be 'i j'", line_no)
            edges.append(
                (_parse_int(tokens[0], line_no), _parse_int(tokens[1], line_no), line_no)
            )
        else:
            raise ParseError(f"unexpected entry {keyword!r}", line_no)

    if n is None:
        raise ParseError("missing 'n <count>' header")

    adjacency = np.zeros((n, n), dtype=np.float64)
    for i, j, line_no in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise DataValidationError(f"line {line_no}: edge ({i}, {j}) outside 0..{n - 1}")
        if i == j:
            raise DataValidationError(f"line {line_no}: self-loop on node {i}")
        adjacency[i, j] = 1.0
        if symmetrize:
            adjacency[j, i] = 1.0

    asymmetric = np.argwhere(adjacency != adjacency.T)
    if asymmetric.size:
        i, j = asymmetric[0]
        raise DataValidationError(
            f"edge ({i}, {j}) listed without ({j}, {i}); use 'edges sym' for one-way lists"
        )

    coord_array = None
    if seen_coords:
        if sorted(coords) != list(range(n)):
            raise DataValidationError("coords block must list every node exactly once")
        coord_array = np.array([coords[i] for i in range(n)])

    try:
        return build_network(adjacency, coords=coord_array, radius=radius)
    except ValueError as e:
        raise DataValidationError(str(e)) from e


def write_network(
    path: str | Path, network: Network, header_lines: list[str] | None = None
) -> None:
    lines = [f"# {h}" for h in header_lines or []]
    lines.append(f"n {network.n}")
    if network.radius is not None:
        lines.append(f"radius {float(network.radius)!r}")
    if network.coords is not None:
        lines.append("coords")
        lines.extend(
            f"{i} {float(x)!r} {float(y)!r}" for i, (x, y) in enumerate(network.coords)
        )
    lines.append("edges sym")
    rows, cols = np.nonzero(np.triu(network.adjacency))
    lines.extend(f"{i} {j}" for i, j in zip(rows.tolist(), cols.tolist()))

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote network (n=%d, %d ties) to %s", network.n, network.edge_count, path)


def network_io(
    path: str | Path,
    mode: Literal["read", "write"],
    network: Network | None = None,
    header_lines: list[str] | None = None,
) -> Network | None:
    if mode == "read":
        return read_network(path)
    if mode == "write":
        if network is None:
            raise InvalidArgumentError("write mode requires a network")
        write_network(path, network, header_lines)
        return None
    raise InvalidArgumentError(f"mode must be 'read' or 'write', got {mode!r}")

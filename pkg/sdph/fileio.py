"""fileio
Readers and writers for every sdph file format.

Binary grids (volume, field) start with a magic line and a JSON header
line. CSV files start with one '# sdph {json}' metadata line followed by
a header row. Every writer replaces its target atomically.
"""

import csv
import io
import json
import math
import os
from pathlib import Path
import tempfile
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import builtin, lang

PathLike = Union[str, Path]
META_PREFIX = '# sdph '


# Atomic output


def atomicWrite(path: PathLike, data: bytes) -> None:
    """Writes data to a temporary file next to path, then renames it over
    path. An interrupted write never leaves a partial target.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def readBytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as err:
        raise builtin.FormatError(f"cannot read file: {err.strerror}", str(path))


def formatFloat(value: float) -> str:
    return repr(float(value))


def parseFloat(text: str, path: PathLike, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise builtin.FormatError(f"expected a number, got {text!r}", str(path), line)


def parseInt(text: str, path: PathLike, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise builtin.FormatError(f"expected an integer, got {text!r}", str(path), line)


# Binary grids


def gridHeader(dims: lang.Dims, spacing: lang.Spacing, seed: Optional[int]) -> bytes:
    header = {'dims': list(dims), 'spacing': list(spacing), 'seed': seed}
    return (json.dumps(header, sort_keys=True) + '\n').encode('utf-8')


def splitGrid(path: PathLike, magic: bytes) -> Tuple[Dict[str, Any], bytes]:
    data = readBytes(path)
    if not data.startswith(magic):
        raise builtin.FormatError(f"missing magic {magic!r}", str(path), 1)
    rest = data[len(magic):]
    end = rest.find(b'\n')
    if end < 0:
        raise builtin.FormatError("missing header line", str(path), 2)
    try:
        header = json.loads(rest[:end].decode('utf-8'))
        dims = tuple(int(n) for n in header['dims'])
        spacing = tuple(float(s) for s in header['spacing'])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as err:
        raise builtin.FormatError(f"invalid header: {err}", str(path), 2)
    if len(dims) != 3 or len(spacing) != 3:
        raise builtin.FormatError("dims and spacing need 3 entries", str(path), 2)
    header['dims'], header['spacing'] = dims, spacing
    return header, rest[end + 1:]


def writeVolume(path: PathLike, vol: lang.BinaryVolume) -> None:
    body = vol.voxels.astype(np.uint8).tobytes(order='C')
    atomicWrite(path, builtin.VOLUME_MAGIC + gridHeader(vol.dims, vol.spacing, vol.seed) + body)


def readVolume(path: PathLike) -> lang.BinaryVolume:
    header, body = splitGrid(path, builtin.VOLUME_MAGIC)
    dims = header['dims']
    expected = int(np.prod(dims))
    if len(body) != expected:
        raise builtin.FormatError(f"expected {expected} voxel bytes, got {len(body)}", str(path), 3)
    raw = np.frombuffer(body, dtype=np.uint8)
    if np.any(raw > 1):
        raise builtin.FormatError("voxel bytes must be 0 or 1", str(path), 3)
    try:
        return lang.BinaryVolume(dims, header['spacing'],
                                 raw.reshape(lang.gridShape(dims)).astype(bool),
                                 seed=header.get('seed'))
    except builtin.ValidationError as err:
        raise builtin.FormatError(err.msg(), str(path), 2)


def writeField(path: PathLike, field: lang.ScalarField) -> None:
    body = field.values.astype('<f8').tobytes(order='C')
    atomicWrite(path, builtin.FIELD_MAGIC + gridHeader(field.dims, field.spacing, field.seed) + body)


def readField(path: PathLike) -> lang.ScalarField:
    header, body = splitGrid(path, builtin.FIELD_MAGIC)
    dims = header['dims']
    expected = 8 * int(np.prod(dims))
    if len(body) != expected:
        raise builtin.FormatError(f"expected {expected} value bytes, got {len(body)}", str(path), 3)
    values = np.frombuffer(body, dtype='<f8').astype(np.float64)
    try:
        return lang.ScalarField(dims, header['spacing'], values.reshape(lang.gridShape(dims)),
                                seed=header.get('seed'))
    except builtin.ValidationError as err:
        raise builtin.FormatError(err.msg(), str(path), 3)


# CSV


def csvText(meta: Mapping[str, Any], header: Sequence[str],
            rows: Iterable[Sequence[Any]]) -> bytes:
    out = io.StringIO()
    out.write(META_PREFIX + json.dumps(dict(meta), sort_keys=True) + '\n')
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue().encode('utf-8')


def readCsv(path: PathLike, header: Optional[Sequence[str]] = None
            ) -> Tuple[Dict[str, Any], List[str], List[Tuple[int, List[str]]]]:
    """Returns metadata, header and (line number, row) pairs."""
    try:
        text = readBytes(path).decode('utf-8')
    except UnicodeDecodeError:
        raise builtin.FormatError("file is not UTF-8", str(path))
    lines = text.splitlines()
    meta: Dict[str, Any] = {}
    start = 0
    if lines and lines[0].startswith(META_PREFIX):
        try:
            meta = json.loads(lines[0][len(META_PREFIX):])
        except ValueError:
            raise builtin.FormatError("invalid metadata line", str(path), 1)
        start = 1
    if start >= len(lines):
        raise builtin.FormatError("missing header row", str(path), start + 1)
    rows = list(csv.reader(lines[start:]))
    found = rows[0]
    if header is not None and list(found) != list(header):
        raise builtin.FormatError(
            f"expected header {','.join(header)}", str(path), start + 1)
    body = [(start + 2 + i, row) for i, row in enumerate(rows[1:]) if row]
    for line, row in body:
        if len(row) != len(found):
            raise builtin.FormatError(
                f"expected {len(found)} columns, got {len(row)}", str(path), line)
    return meta, found, body


def diagramMeta(diagram: lang.Diagram) -> Dict[str, Any]:
    return {
        'source_id': diagram.source_id,
        'dims': list(diagram.dims),
        'spacing': list(diagram.spacing),
        'origin': list(diagram.origin),
        'boundary_artifacts': diagram.boundary_artifacts,
        'seed': diagram.seed,
    }


def cellText(cell: lang.OptCoord) -> List[str]:
    return ['', '', ''] if cell is None else [str(c) for c in cell]


def writeDiagram(path: PathLike, diagram: lang.Diagram) -> None:
    rows = [
        [str(p.degree), formatFloat(p.birth), '' if p.essential else formatFloat(p.death)]
        + cellText(p.birth_cell) + cellText(p.death_cell)
        + ['1' if p.essential else '0']
        for p in diagram
    ]
    atomicWrite(path, csvText(diagramMeta(diagram), builtin.DIAGRAM_HEADER, rows))


def parseCell(texts: Sequence[str], path: PathLike, line: int) -> lang.OptCoord:
    if all(t == '' for t in texts):
        return None
    x, y, z = (parseInt(t, path, line) for t in texts)
    return (x, y, z)


def readDiagram(path: PathLike) -> lang.Diagram:
    meta, _, body = readCsv(path, builtin.DIAGRAM_HEADER)
    points = []
    for line, row in body:
        degree = parseInt(row[0], path, line)
        essential = row[9] == '1'
        birth = parseFloat(row[1], path, line)
        death = math.inf if essential else parseFloat(row[2], path, line)
        try:
            points.append(lang.PersistencePoint(
                degree, birth, death,
                parseCell(row[3:6], path, line),
                None if essential else parseCell(row[6:9], path, line),
            ))
        except builtin.ValidationError as err:
            raise builtin.FormatError(err.msg(), str(path), line)
    return lang.Diagram(
        tuple(points),
        source_id=meta.get('source_id', ''),
        dims=tuple(meta.get('dims', (1, 1, 1))),  # type: ignore
        spacing=tuple(meta.get('spacing', (1.0, 1.0, 1.0))),  # type: ignore
        origin=tuple(meta.get('origin', (0, 0, 0))),  # type: ignore
        boundary_artifacts=bool(meta.get('boundary_artifacts', False)),
        seed=meta.get('seed'),
    )


def writeQuadrants(path: PathLike, points: Sequence[lang.QuadrantPoint],
                   meta: Mapping[str, Any]) -> None:
    rows = [
        [str(qp.degree), qp.quadrant, formatFloat(qp.birth), formatFloat(qp.death),
         formatFloat(qp.sizes[0]), formatFloat(qp.sizes[1]), formatFloat(qp.weight)]
        for qp in points
    ]
    atomicWrite(path, csvText(meta, builtin.QUADRANT_HEADER, rows))


def readQuadrants(path: PathLike) -> List[lang.QuadrantPoint]:
    _, _, body = readCsv(path, builtin.QUADRANT_HEADER)
    result = []
    for line, row in body:
        if row[1] not in builtin.QUADRANTS:
            raise builtin.FormatError(f"unknown quadrant {row[1]!r}", str(path), line)
        result.append(lang.QuadrantPoint(
            quadrant=row[1],  # type: ignore
            degree=parseInt(row[0], path, line),
            birth=parseFloat(row[2], path, line),
            death=parseFloat(row[3], path, line),
            sizes=(parseFloat(row[4], path, line), parseFloat(row[5], path, line)),
        ))
    return result


def featureHeader() -> List[str]:
    return ['sample_id', 'cx', 'cy', 'cz'] + [f"f{i + 1}" for i in range(len(builtin.FEATURE_NAMES))]


def writeFeatures(path: PathLike, samples: Sequence[Tuple[str, np.ndarray, np.ndarray]],
                  meta: Mapping[str, Any]) -> None:
    """samples holds (sample_id, centres (m, 3), features (m, 15))."""
    rows = [
        [sample_id] + [str(int(c)) for c in centre] + [formatFloat(v) for v in row]
        for sample_id, centres, matrix in samples
        for centre, row in zip(centres, matrix)
    ]
    meta = dict(meta, features=list(builtin.FEATURE_NAMES))
    atomicWrite(path, csvText(meta, featureHeader(), rows))


def readFeatures(path: PathLike) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """Returns sample ids, centres and the feature matrix, row-aligned."""
    _, _, body = readCsv(path, featureHeader())
    ids = [row[0] for _, row in body]
    centres = np.array([[parseInt(t, path, line) for t in row[1:4]] for line, row in body],
                       dtype=np.int64).reshape(-1, 3)
    matrix = np.array([[parseFloat(t, path, line) for t in row[4:]] for line, row in body],
                      dtype=np.float64).reshape(-1, len(builtin.FEATURE_NAMES))
    return ids, centres, matrix


def writeLabels(path: PathLike, ids: Sequence[str], centres: np.ndarray,
                labels: Sequence[int], meta: Mapping[str, Any]) -> None:
    rows = [[i] + [str(int(c)) for c in centre] + [str(int(label))]
            for i, centre, label in zip(ids, centres, labels)]
    atomicWrite(path, csvText(meta, ['sample_id', 'cx', 'cy', 'cz', 'label'], rows))


def readLabels(path: PathLike) -> Tuple[List[str], List[int]]:
    _, _, body = readCsv(path, ['sample_id', 'cx', 'cy', 'cz', 'label'])
    return [row[0] for _, row in body], [parseInt(row[4], path, line) for line, row in body]


def writeCompositions(path: PathLike, compositions: Sequence[lang.TextureComposition],
                      meta: Mapping[str, Any]) -> None:
    k = len(compositions[0].percentages) if compositions else 0
    header = ['sample_id'] + [f"c{i}" for i in range(k)]
    rows = [[c.sample_id] + [formatFloat(p) for p in c.percentages] for c in compositions]
    atomicWrite(path, csvText(meta, header, rows))


def readCompositions(path: PathLike) -> List[lang.TextureComposition]:
    _, _, body = readCsv(path)
    return [lang.TextureComposition(row[0], tuple(parseFloat(t, path, line) for t in row[1:]))
            for line, row in body]


def writeEmbedding(path: PathLike, ids: Sequence[str], embedding: np.ndarray,
                   meta: Mapping[str, Any]) -> None:
    rows = [[i, formatFloat(e[0]), formatFloat(e[1])] for i, e in zip(ids, embedding)]
    atomicWrite(path, csvText(meta, ['sample_id', 'pc1', 'pc2'], rows))


def writeMatrix(path: PathLike, labels: Sequence[str], matrix: np.ndarray,
                meta: Mapping[str, Any]) -> None:
    rows = [[label] + [formatFloat(v) for v in row] for label, row in zip(labels, matrix)]
    atomicWrite(path, csvText(meta, ['label'] + list(labels), rows))


def readMatrix(path: PathLike) -> Tuple[List[str], np.ndarray]:
    _, header, body = readCsv(path)
    labels = header[1:]
    matrix = np.array([[parseFloat(t, path, line) for t in row[1:]] for line, row in body],
                      dtype=np.float64).reshape(len(body), len(labels))
    if [row[0] for _, row in body] != labels:
        raise builtin.FormatError("row labels must match the header", str(path), 2)
    return labels, matrix


# Density grids


def writeDensity(path: PathLike, grid: lang.DensityGrid, meta: Mapping[str, Any]) -> None:
    """Metadata line with bounds and resolution, a header row, then one
    row of death-axis values per birth cell.
    """
    meta = dict(meta, bounds=list(grid.bounds), resolution=list(grid.resolution))
    header = [f"d{j}" for j in range(grid.resolution[1])]
    rows = [[formatFloat(v) for v in row] for row in grid.values]
    atomicWrite(path, csvText(meta, header, rows))


def readDensity(path: PathLike) -> lang.DensityGrid:
    meta, _, body = readCsv(path)
    try:
        bounds = tuple(float(b) for b in meta['bounds'])
        resolution = tuple(int(r) for r in meta['resolution'])
    except (KeyError, TypeError, ValueError):
        raise builtin.FormatError("metadata lacks bounds/resolution", str(path), 1)
    values = np.array([[parseFloat(t, path, line) for t in row] for line, row in body],
                      dtype=np.float64)
    try:
        return lang.DensityGrid(bounds, resolution, values.reshape(-1, resolution[1]))  # type: ignore
    except (builtin.ValidationError, ValueError) as err:
        raise builtin.FormatError(str(err), str(path))


def writePGM(path: PathLike, grid: lang.DensityGrid) -> None:
    """8-bit heatmap scaled to [0, 255] per grid; birth runs left to
    right, death bottom to top.
    """
    peak = float(grid.values.max())
    scaled = grid.values / peak * 255.0 if peak > 0 else np.zeros_like(grid.values)
    image = np.rint(scaled.T[::-1]).astype(np.uint8)
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode('ascii')
    atomicWrite(path, header + image.tobytes())


def readPGM(path: PathLike) -> np.ndarray:
    data = readBytes(path)
    parts = data.split(b'\n', 3)
    if len(parts) < 4 or parts[0] != b'P5':
        raise builtin.FormatError("not a binary PGM", str(path), 1)
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)


def writeText(path: PathLike, text: str) -> None:
    atomicWrite(path, text.encode('utf-8'))


def writeJSON(path: PathLike, obj: Any) -> None:
    atomicWrite(path, (json.dumps(obj, sort_keys=True, indent=2) + '\n').encode('utf-8'))


def readJSON(path: PathLike) -> Any:
    try:
        return json.loads(readBytes(path).decode('utf-8'))
    except (ValueError, UnicodeDecodeError) as err:
        raise builtin.FormatError(f"invalid JSON: {err}", str(path))


# Mixture models


def modelToJSON(model: lang.MixtureModel) -> Dict[str, Any]:
    obj: Dict[str, Any] = {
        'quadrant': model.quadrant,
        'phase': model.phase,
        'components': [
            {
                'alpha': float(comp.alpha),
                'mu': [float(v) for v in np.ravel(comp.mu)],
                'sigma': [[float(v) for v in row] for row in np.atleast_2d(comp.sigma)],
            }
            for comp in model.components
        ],
    }
    if model.fit is not None:
        obj['fit'] = {
            'loglik': model.fit.loglik,
            'bic': model.fit.bic,
            'iters': model.fit.iters,
            'seed': model.fit.seed,
            'reinitialized': model.fit.reinitialized,
            'replicates': model.fit.replicates,
        }
    return obj


def modelFromJSON(obj: Any, path: PathLike) -> lang.MixtureModel:
    try:
        components = tuple(
            lang.Component(float(c['alpha']), np.array(c['mu'], dtype=np.float64),
                           np.array(c['sigma'], dtype=np.float64))
            for c in obj['components']
        )
        fit = None
        if obj.get('fit'):
            f = obj['fit']
            fit = lang.FitReport(float(f['loglik']), float(f['bic']), int(f['iters']),
                                 f.get('seed'), int(f.get('reinitialized', 0)),
                                 replicates=int(f.get('replicates', 1)))
        return lang.MixtureModel(components, obj.get('phase'), obj.get('quadrant'), fit)
    except (KeyError, TypeError, ValueError) as err:
        raise builtin.FormatError(f"invalid model: {err}", str(path))
    except builtin.ValidationError as err:
        raise builtin.FormatError(err.msg(), str(path))


def writeModel(path: PathLike, model: lang.MixtureModel) -> None:
    writeJSON(path, modelToJSON(model))


def readModel(path: PathLike) -> lang.MixtureModel:
    return modelFromJSON(readJSON(path), path)


# Evaluation tables


def writeEvaluation(path: PathLike, rows: Sequence[lang.EvaluationRow],
                    meta: Mapping[str, Any], kind: str = 'hellinger') -> None:
    """The distance table: one row per test sample, one column per phase."""
    table = []
    for row in rows:
        sums = row.hellinger if kind == 'hellinger' else row.kl
        table.append(
            [row.sample_id, row.phase or '']
            + ['' if p not in sums else formatFloat(sums[p]) for p in builtin.PHASES]
            + [row.predicted])
    atomicWrite(path, csvText(dict(meta, measure=kind), builtin.EVALUATION_HEADER, table))


def readEvaluation(path: PathLike) -> List[Tuple[str, str, Dict[str, float], str]]:
    _, _, body = readCsv(path, builtin.EVALUATION_HEADER)
    result = []
    for line, row in body:
        sums = {p: parseFloat(t, path, line)
                for p, t in zip(builtin.PHASES, row[2:5]) if t != ''}
        result.append((row[0], row[1], sums, row[5]))
    return result

"""Reading and writing hb-graphs, rankings and result tables.

Hb-graph JSON format:

```json
{"n": 3, "labels": ["a", "b", "c"],
 "edges": [{"w": 1.0, "members": {"0": 2, "1": 1}},
           {"w": 1.0, "members": {"1": 1, "2": 1}}]}
```

`labels` is optional and `w` defaults to 1.0. Member keys are vertex
indices written as strings.

Co-occurrence CSV format: one row per collaboration or document, one token
per cell. A token repeated within a row becomes a multiplicity; vertices
are numbered in order of first appearance.
"""

from __future__ import annotations

from collections import Counter
import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence, Union

import fastjsonschema
import numpy as np
import orjson

from hbdiff.diffusion import Ranking
from hbdiff.exception import HbDiffException
from hbdiff.hbgraph import HbEdge, HbGraph, ValidationError

LOG = logging.getLogger(__name__)

PathLike = Union[str, Path]

InputFormat = Literal['hbjson', 'cooc_csv']

HBGRAPH_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'properties': {
        'n': {'type': 'integer', 'minimum': 1},
        'labels': {'type': 'array', 'items': {'type': 'string'}},
        'edges': {
            'type': 'array',
            'minItems': 1,
            'items': {
                'type': 'object',
                'properties': {
                    'w': {'type': 'number', 'exclusiveMinimum': 0},
                    'members': {
                        'type': 'object',
                        'minProperties': 1,
                        'propertyNames': {'pattern': '^[0-9]+$'},
                        'additionalProperties': {
                            'type': 'number', 'minimum': 0
                        }
                    }
                },
                'required': ['members']
            }
        }
    },
    'required': ['n', 'edges']
}

_validate_hbgraph = fastjsonschema.compile(HBGRAPH_SCHEMA)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | \
    orjson.OPT_SERIALIZE_NUMPY


class ParseError(HbDiffException):
    """Raised when an input file is not well-formed."""
    exit_code = 3


def _number(value: float) -> str:
    return repr(float(value))


def loads_json(bytes_: bytes, source: str = '<bytes>') -> Any:
    try:
        return orjson.loads(bytes_)
    except orjson.JSONDecodeError as e:
        raise ParseError(
            f'{source}:{e.lineno}: invalid JSON ({e.msg})'
        ) from e


def dumps_json(data: Any) -> bytes:
    return orjson.dumps(data, option=JSON_OPTIONS) + b'\n'


def write_json(data: Any, path: PathLike):
    Path(path).write_bytes(dumps_json(data))


def hbgraph_to_dict(g: HbGraph) -> dict:
    data: dict[str, Any] = {'n': g.n}
    if g.labels is not None:
        data['labels'] = list(g.labels)
    data['edges'] = [
        {'w': e.weight, 'members': {str(v): m for v, m in e.members.items()}}
        for e in g.edges
    ]
    return data


def hbgraph_from_dict(data: Any, source: str = '<dict>') -> HbGraph:
    try:
        _validate_hbgraph(data)
    except fastjsonschema.JsonSchemaValueException as e:
        raise ParseError(f'{source}: {e.message}') from e
    edges = [
        HbEdge({int(v): m for v, m in edge['members'].items()},
               edge.get('w', 1.0))
        for edge in data['edges']
    ]
    return HbGraph(data['n'], edges, data.get('labels'))


def dumps_hbgraph(g: HbGraph) -> bytes:
    # member keys keep vertex order rather than string order
    return orjson.dumps(hbgraph_to_dict(g), option=orjson.OPT_INDENT_2) \
        + b'\n'


def loads_hbgraph(bytes_: bytes, source: str = '<bytes>') -> HbGraph:
    return hbgraph_from_dict(loads_json(bytes_, source), source)


def read_hbgraph(path: PathLike) -> HbGraph:
    return loads_hbgraph(Path(path).read_bytes(), str(path))


def write_hbgraph(g: HbGraph, path: PathLike):
    Path(path).write_bytes(dumps_hbgraph(g))


def parse_cooc_rows(rows: Iterable[Sequence[str]],
                    source: str = '<rows>',
                    weight: float = 1.0) -> HbGraph:
    """Build a hb-graph from token rows, counting repeated tokens."""
    index: dict[str, int] = {}
    edges = []
    for line, row in enumerate(rows, start=1):
        tokens = [token.strip() for token in row if token.strip()]
        if not tokens:
            raise ValidationError(f'{source}:{line}: empty co-occurrence row')
        counts = Counter(tokens)
        for token in counts:
            index.setdefault(token, len(index))
        edges.append(HbEdge({index[t]: c for t, c in counts.items()},
                            weight))
    if not edges:
        raise ValidationError(f'{source}: no co-occurrence rows')
    return HbGraph(len(index), edges, list(index))


def read_cooc_csv(path: PathLike, weight: float = 1.0) -> HbGraph:
    rows = []
    try:
        with open(path, newline='', encoding='utf-8') as f:
            reader = csv.reader(f)
            for row in reader:
                rows.append(row)
    except csv.Error as e:
        raise ParseError(f'{path}:{reader.line_num}: {e}') from e
    except UnicodeDecodeError as e:
        raise ParseError(f'{path}: not valid UTF-8 text') from e
    return parse_cooc_rows(rows, str(path), weight)


def ingest(path: PathLike, format: InputFormat = 'hbjson') -> HbGraph:
    """Read and validate a hb-graph from a file.

    Raises:
        ParseError: if the file is malformed.
        ValidationError: if the content breaks a hb-graph invariant, e.g.
            an empty hb-edge.
    """
    if format == 'hbjson':
        g = read_hbgraph(path)
    elif format == 'cooc_csv':
        g = read_cooc_csv(path)
    else:
        raise ValueError(f'unknown input format {format!r}')
    LOG.info('ingested %r from %s', g, path)
    return g


RANKING_HEADER = ('rank', 'entity_id', 'score', 'tie_group')


def ranking_rows(ranking: Ranking) -> list[tuple[int, str, str, int]]:
    """Rows of the ranking table; ranks and tie groups count from 1."""
    return [
        (position, ranking.label(int(entity)),
         _number(ranking.scores[entity]), int(ranking.groups[entity]) + 1)
        for position, entity in enumerate(ranking.order, start=1)
    ]


def write_csv(path: PathLike, header: Sequence[str],
              rows: Iterable[Sequence[Any]]):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def write_ranking_csv(ranking: Ranking, path: PathLike):
    write_csv(path, RANKING_HEADER, ranking_rows(ranking))


def write_matrix_csv(matrix: np.ndarray, path: PathLike,
                     names: Sequence[str] = ()):
    """Write a square matrix with experiment names as header row/column.

    Names default to the 1-based experiment indices.
    """
    names = list(names) or [str(i) for i in range(1, len(matrix) + 1)]
    write_csv(path, ['experiment', *names],
              ([name, *(_number(x) for x in row)]
               for name, row in zip(names, matrix)))

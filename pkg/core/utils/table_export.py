"""
Table Export Utilities using Pandas
===================================

Sweep tables and single results as CSV or JSON. Floats keep 17
significant digits so that written values parse back bit-identically.
"""

import json
import logging
import math
from contextlib import contextmanager

import pandas as pd

logger = logging.getLogger(__name__)


FLOAT_FORMAT = '%.17g'


def sweep_columns(m):
    """xi_1..xi_m, value, grad_1..grad_m, residual, status"""
    return (
        [f'xi_{j}' for j in range(1, m + 1)]
        + ['value']
        + [f'grad_{j}' for j in range(1, m + 1)]
        + ['residual', 'status']
    )


def build_sweep_frame(rows, m):
    """
    Sweep rows as a DataFrame in lattice order

    Args:
        rows: dicts with keys xi (tuple), value, gradient (tuple or None),
              residual (float or None), status
        m: number of coordinates

    Returns:
        pd.DataFrame with the sweep_columns(m) header
    """
    records = []
    for row in rows:
        gradient = row.get('gradient') or (math.nan,) * m
        residual = row.get('residual')
        record = {f'xi_{j + 1}': row['xi'][j] for j in range(m)}
        record['value'] = row.get('value', math.nan)
        record.update({f'grad_{j + 1}': gradient[j] for j in range(m)})
        record['residual'] = math.nan if residual is None else residual
        record['status'] = row['status']
        records.append(record)

    return pd.DataFrame(records, columns=sweep_columns(m))


def _plain(value):
    """JSON-safe Python value; NaN becomes null"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, 'item'):
        return _plain(value.item())
    return value


def frame_to_records(df):
    return [{column: _plain(value) for column, value in record.items()} for record in df.to_dict(orient='records')]


def frame_to_csv(df):
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def frame_to_json(df):
    return json.dumps(frame_to_records(df), indent=2) + '\n'


def result_to_json(result):
    """A pydantic result as one JSON document"""
    return json.dumps(result.model_dump(mode='json'), indent=2) + '\n'


@contextmanager
def open_output(path, stdout):
    """Yield a writable text stream: the file at path, or stdout"""
    if path is None:
        yield stdout
        return
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        yield handle
    logger.info(f"Wrote {path}")


def write_text(text, path, stdout):
    with open_output(path, stdout) as stream:
        stream.write(text)

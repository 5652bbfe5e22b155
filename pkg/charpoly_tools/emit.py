"""CSV/JSON emission with atomic replacement of the target file."""
import json
import logging
import math
import os
import tempfile

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _plain(obj):
    ''' Convert numpy scalars/arrays and non-finite floats for JSON '''
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, pd.DataFrame):
        return [_plain(r) for r in obj.to_dict(orient='records')]
    if isinstance(obj, pd.Series):
        return _plain(obj.to_dict())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def atomic_write(path, text):
    ''' Write ``text`` to a temporary file next to ``path``, then rename '''
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.debug('wrote %s', path)


def to_frame(records, columns=None):
    if isinstance(records, pd.DataFrame):
        return records if columns is None else records[list(columns)]
    return pd.DataFrame(list(records), columns=columns)


def emit(records, path, fmt=None, columns=None):
    ''' Write records as CSV or JSON

    Parameters
    ----------
    records : DataFrame, list of dict or dict
        Homogeneous rows (CSV) or any JSON-able structure

    path : str
        Output file

    fmt : {'csv', 'json'}, optional
        Defaults to the file extension

    columns : sequence of str, optional
        CSV header; required to write a header-only file from no rows
    '''
    if fmt is None:
        fmt = 'json' if str(path).lower().endswith('.json') else 'csv'
    if fmt == 'csv':
        frame = to_frame(records, columns)
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT)
    elif fmt == 'json':
        text = json.dumps(_plain(records), indent=2, sort_keys=True) + '\n'
    else:
        raise ValueError('unknown output format %r' % fmt)
    atomic_write(path, text)

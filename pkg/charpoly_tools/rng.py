"""Reproducible random streams and the task pool used by every experiment.

Every random draw in the package comes from a Philox generator keyed by the
master seed and a task index, so the sample stream never depends on how the
tasks are scheduled.
"""
import logging
import os
import pickle
from concurrent.futures import ProcessPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)

THREADS_ENV = 'CHARPOLY_THREADS'


def substream(seed, *key):
    ''' Independent generator for task ``key`` under master ``seed``

    Parameters
    ----------
    seed : int
        Master seed (nonnegative, up to 64 bits)

    *key : int
        Task coordinates, e.g. sample index or (block, row)

    Returns
    -------
    numpy.random.Generator
        Philox-backed generator
    '''
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def default_threads():
    ''' Thread count from CHARPOLY_THREADS, else 1 '''
    value = os.environ.get(THREADS_ENV, '').strip()
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        logger.warning('ignoring non-integer %s=%r', THREADS_ENV, value)
        return 1


def map_tasks(fn, tasks, threads=1):
    ''' Apply ``fn`` to every task, returning results in task order

    Parameters
    ----------
    fn : callable
        Picklable top-level function of one argument

    tasks : iterable
        Task arguments

    threads : int, optional
        Worker count; 1 runs in-process

    Returns
    -------
    list
        ``[fn(t) for t in tasks]``
    '''
    tasks = list(tasks)
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    try:
        pickle.dumps(tasks[0])
    except (pickle.PicklingError, AttributeError, TypeError) as exc:
        logger.warning('tasks cannot be sent to worker processes (%s); running in-process', exc)
        return [fn(task) for task in tasks]
    workers = min(int(threads), len(tasks))
    logger.debug('running %d tasks on %d workers', len(tasks), workers)
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks, chunksize=chunk))

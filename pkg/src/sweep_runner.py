import logging
import multiprocessing
from typing import Callable, Iterable, List

logger = logging.getLogger(__name__)


class SweepRunner:
    """
    Evaluates independent sweep points (simulation runs, spectrum points) either
    serially or on a process pool. Results always come back in task order, so
    artifacts written from them are identical for any worker count.
    """

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        logger.debug(f"SweepRunner initialized with {workers} worker(s).")

    def map(self, fn: Callable, tasks: Iterable) -> List:
        tasks = list(tasks)
        if self.workers == 1 or len(tasks) < 2:
            return [fn(task) for task in tasks]

        processes = min(self.workers, len(tasks))
        logger.info(f"Dispatching {len(tasks)} sweep points to {processes} processes.")
        with multiprocessing.Pool(processes=processes) as pool:
            # Pool.map preserves input order
            return pool.map(fn, tasks)

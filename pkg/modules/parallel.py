from concurrent.futures import ProcessPoolExecutor


class WorkerPool:
    """Ordered map over work units; serial for workers <= 1.

    Results come back in submission order, so merged output never depends on
    which worker finished first.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._executor = None

    def __enter__(self):
        if self.workers > 1:
            self._executor = ProcessPoolExecutor(self.workers)
        return self

    def __exit__(self, *exc):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def map(self, fn, *iterables) -> list:
        if self._executor is None:
            return list(map(fn, *iterables))
        return list(self._executor.map(fn, *iterables))

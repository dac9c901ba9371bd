import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Hashable, Iterable

from dotenv import load_dotenv
from tqdm import tqdm

from utils.data import load_json, save_json
from utils.logs import set_logger

load_dotenv()


logger = set_logger(__name__)

OUTPUT_PATH = os.getenv("OUTPUT_PATH", "outputs")
SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", "4"))



class SweepRunner:
    """
    Evaluate one task over many parameter keys on a thread pool.

    Results can be kept in ``$OUTPUT_PATH/<name>/sweep.json``; stored keys are
    skipped unless ``override`` is set.
    """
    def __init__(self,
        name: str,
        workers: int | None = None,
        save: bool = False
    ):
        self.name = name
        self.workers = workers or SWEEP_WORKERS
        self.save = save
        self.result_file = os.path.join(OUTPUT_PATH, name, "sweep.json")

    @property
    def workers(self) -> int:
        return self._workers

    @workers.setter
    def workers(self, value: int):
        if value < 1:
            raise ValueError("Sweep needs at least one worker.")
        self._workers = value

    def _stored(self) -> dict[str, float]:
        if not os.path.exists(self.result_file):
            return {}
        return load_json(self.result_file)

    def __call__(self,
        task: Callable[[Hashable], float],
        keys: Iterable[Hashable],
        override: bool = False
    ) -> dict[Hashable, float]:
        """
        Run ``task`` on every key.

        Args:
            task (Callable): Pure function of one key.
            keys (Iterable): Parameter keys, e.g. ``(N, eta)`` pairs.
            override (bool): Recompute keys already stored on disk.

        Returns:
            dict: Result per key, in the order of ``keys``.
        """
        keys = list(keys)
        stored = {} if override or not self.save else self._stored()
        results = {k: stored[str(k)] for k in keys if str(k) in stored}
        if results:
            logger.info(f"Skipping {len(results)} stored results of {self.name}")
        todo = [k for k in keys if k not in results]

        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            futures = {ex.submit(task, k): k for k in todo}
            for fut in tqdm(as_completed(futures), total=len(futures), desc=f"Sweep: {self.name}"):
                key = futures[fut]
                results[key] = fut.result()
                logger.debug(f"{self.name}[{key}] = {results[key]}")

        if self.save and todo:
            save_json(self.result_file, {**stored, **{str(k): v for k, v in results.items()}})
            logger.debug(f"Sweep results saved at {self.result_file}")
        return {k: results[k] for k in keys}



__all__ = ['SweepRunner']

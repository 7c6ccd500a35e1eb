"""
Job pool for experiment harnesses.

Experiment jobs (one per grid combination or replicate) are independent and
read only immutable inputs, so they run on a thread pool. Results come back
in submission order regardless of completion order.
"""

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import structlog

logger = structlog.get_logger(__name__)


class JobStatus(Enum):
    """Status of a finished job."""
    SUCCESS = "success"
    FAILED = "failed"


@dataclass
class JobResult:
    """
    Result of a single job.

    Attributes:
        job_id: Caller-supplied identifier
        value: Return value of the job (None on failure)
        status: Outcome
        processing_time_ms: Wall time of the job
        error: The raised exception, if any
    """
    job_id: Hashable
    value: Any
    status: JobStatus = JobStatus.SUCCESS
    processing_time_ms: float = 0.0
    error: Optional[BaseException] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == JobStatus.SUCCESS


class JobPool:
    """Runs independent jobs on a thread pool."""

    def __init__(self, max_workers: Optional[int] = None):
        """
        Args:
            max_workers: Maximum parallel jobs (None = executor default)
        """
        self.max_workers = max_workers
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self.completed = 0
        self.failed = 0
        self.total_processing_time_ms = 0.0

    def _run(self, job_id: Hashable, fn: Callable[..., Any], args: Tuple) -> JobResult:
        start = time.perf_counter()
        try:
            value = fn(*args)
            status, error = JobStatus.SUCCESS, None
        except Exception as e:
            value, status, error = None, JobStatus.FAILED, e
        elapsed = (time.perf_counter() - start) * 1000
        return JobResult(job_id=job_id, value=value, status=status, processing_time_ms=elapsed, error=error)

    def run(self, fn: Callable[..., Any], jobs: Sequence[Tuple[Hashable, Tuple]]) -> List[JobResult]:
        """
        Run ``fn(*args)`` for every ``(job_id, args)`` pair.

        Returns:
            Job results in submission order
        """
        logger.info("jobs_submitted", count=len(jobs), max_workers=self.max_workers)
        futures = {
            self.executor.submit(self._run, job_id, fn, args): index
            for index, (job_id, args) in enumerate(jobs)
        }

        results: List[Optional[JobResult]] = [None] * len(jobs)
        for future in as_completed(futures):
            result = future.result()
            results[futures[future]] = result
            self.total_processing_time_ms += result.processing_time_ms
            if result.ok:
                self.completed += 1
            else:
                self.failed += 1
                logger.error("job_failed", job_id=result.job_id, error=str(result.error),
                             error_type=type(result.error).__name__)
        return results

    def map(self, fn: Callable[..., Any], jobs: Sequence[Tuple[Hashable, Tuple]]) -> List[Any]:
        """
        Like ``run`` but returns plain values and re-raises the first failure.
        """
        results = self.run(fn, jobs)
        for result in results:
            if not result.ok:
                raise result.error
        return [result.value for result in results]

    def get_statistics(self) -> Dict[str, Any]:
        finished = self.completed + self.failed
        return {
            "completed": self.completed,
            "failed": self.failed,
            "average_processing_time_ms": self.total_processing_time_ms / max(finished, 1),
        }

    def shutdown(self) -> None:
        logger.debug("job_pool_shutdown", **self.get_statistics())
        self.executor.shutdown(wait=True)

    def __enter__(self) -> "JobPool":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

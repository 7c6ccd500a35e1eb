"""Tests for the experiment job pool."""

import time

import pytest

from edgeflow.experiments.pool import JobPool, JobStatus


def _square(x, delay=0.0):
    time.sleep(delay)
    return x * x


def _fail(x):
    raise ValueError(f"bad job {x}")


class TestJobPool:
    def test_results_keep_submission_order(self):
        jobs = [(i, (i, 0.02 * (5 - i))) for i in range(5)]
        with JobPool(max_workers=5) as pool:
            results = pool.run(_square, jobs)
        assert [r.job_id for r in results] == [0, 1, 2, 3, 4]
        assert [r.value for r in results] == [0, 1, 4, 9, 16]
        assert all(r.ok and r.processing_time_ms >= 0.0 for r in results)

    def test_failures_are_recorded(self):
        with JobPool(max_workers=2) as pool:
            results = pool.run(_fail, [("a", (1,))])
            stats = pool.get_statistics()
        assert results[0].status == JobStatus.FAILED
        assert isinstance(results[0].error, ValueError)
        assert results[0].value is None
        assert stats["failed"] == 1 and stats["completed"] == 0

    def test_map_reraises(self):
        with JobPool(max_workers=2) as pool:
            with pytest.raises(ValueError, match="bad job 2"):
                pool.map(_fail, [(2, (2,)), (3, (3,))])

    def test_map_values(self):
        with JobPool() as pool:
            assert pool.map(_square, [(i, (i,)) for i in range(4)]) == [0, 1, 4, 9]
            assert pool.get_statistics()["completed"] == 4

    def test_empty(self):
        with JobPool(max_workers=1) as pool:
            assert pool.map(_square, []) == []

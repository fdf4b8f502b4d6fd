import psutil

from src.utils.statistics import RunStatistics
from src.utils.workers import THREADS_ENV, WorkerPool, available_workers


def square(x):
    return x * x


def test_thread_cap_from_environment(monkeypatch):
    monkeypatch.setattr(psutil, "cpu_count", lambda logical=True: 8)
    monkeypatch.setenv(THREADS_ENV, "3")
    assert available_workers() == 3
    assert available_workers(2) == 2
    assert available_workers(16) == 3


def test_bad_cap_is_ignored(monkeypatch):
    monkeypatch.setattr(psutil, "cpu_count", lambda logical=True: 4)
    monkeypatch.setenv(THREADS_ENV, "many")
    assert available_workers() == 4


def test_unknown_core_count_falls_back_to_one(monkeypatch):
    monkeypatch.setattr(psutil, "cpu_count", lambda logical=True: None)
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert available_workers() == 1


def test_serial_map_keeps_order():
    pool = WorkerPool(1)
    assert pool.workers == 1
    assert pool.map(square, [3, 1, 2]) == [9, 1, 4]


def test_parallel_map_keeps_order():
    assert WorkerPool(2).map(square, list(range(20))) == [x * x for x in range(20)]


def test_statistics_record_and_merge():
    first = RunStatistics()
    first.record(True)
    first.record(False)
    first.record(True, inconclusive=True)
    second = RunStatistics()
    second.record(True)
    first.merge(second)
    assert first.get_stats() == {"trials": 4, "passed": 2, "failed": 1, "inconclusive": 1}

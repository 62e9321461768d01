"""
This module provides the thread-safe work list the diagnostics are drained from, and the worker threads
that drain it.

Checks are independent of each other, so any number of workers may pull from the same CheckQueue.
Results are stored by check name; callers read them back in their own fixed order, which keeps the
assembled report independent of thread scheduling.

Example:
    Queue two checks and run them on two workers::

        from modules.check_queue import CheckTask, run_checks_parallel

        results = run_checks_parallel([CheckTask("a", lambda: 1), CheckTask("b", lambda: 2)], 2)
        results["a"]  # returns 1

Classes:
- CheckTask: a named zero-argument callable.
- CheckQueue: a lock-protected FIFO list of tasks.
- CheckWorker: a thread that drains a CheckQueue into a shared result dictionary.

Functions:
- run_checks_parallel: runs tasks on worker threads and returns their results by name.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Any, Callable, Dict, Generic, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class CheckTask:
    """
    Attributes:
        name (str): unique name the result is stored under.
        run (Callable[[], Any]): the check itself.
    """
    name: str
    run: Callable[[], Any]


class CheckQueue(Generic[T]):
    """
    A thread-safe FIFO list.

    Attributes:
        list (List[T]): The underlying list.
        lock (threading.Lock): Synchronizes access to the list.
    """

    def __init__(self, items: Optional[List[T]] = None):
        self.list: List[T] = list(items) if items else []
        self.lock = threading.Lock()

    def get(self) -> T | None:
        """
        Removes and returns the first item, or None if the list is empty.
        """
        with self.lock:
            if self.list:
                return self.list.pop(0)
            return None

    def put(self, item: T):
        with self.lock:
            self.list.append(item)

    def size(self) -> int:
        with self.lock:
            return len(self.list)


class CheckWorker(threading.Thread):
    """
    A worker thread that runs CheckTasks until its queue is empty or it is stopped.

    Attributes:
        stop (bool): Whether this worker will stop before its next task.
    """

    def __init__(self, work_queue: CheckQueue[CheckTask], results: Dict[str, Any],
                 errors: Dict[str, BaseException], results_lock: threading.Lock):
        """
        Args:
            work_queue (CheckQueue[CheckTask]): tasks to run.
            results (Dict[str, Any]): shared result store, keyed by task name.
            errors (Dict[str, BaseException]): shared store for tasks that raised.
            results_lock (threading.Lock): guards both stores.
        """
        super().__init__(daemon=True)
        self._work_queue = work_queue
        self._results = results
        self._errors = errors
        self._results_lock = results_lock
        self.stop = False

    def _process_task(self, task: CheckTask):
        logger.debug("%s running check %s", self.name, task.name)
        try:
            result = task.run()
        except Exception as e:  # pylint: disable=broad-except
            with self._results_lock:
                self._errors[task.name] = e
            return
        with self._results_lock:
            self._results[task.name] = result

    def run(self):
        while not self.stop:
            task = self._work_queue.get()
            if task is None:
                break
            self._process_task(task)


def run_checks_parallel(tasks: List[CheckTask], workers: int) -> Dict[str, Any]:
    """
    Runs tasks on up to `workers` threads.

    Args:
        tasks (List[CheckTask]): tasks with unique names.
        workers (int): thread cap, at least 1.

    Returns:
        Dict[str, Any]: results keyed by task name.

    Raises:
        ValueError: if two tasks share a name.
        Exception: the error of the first failing task, in task order.
    """
    names = [task.name for task in tasks]
    if len(set(names)) != len(names):
        raise ValueError(f"check names must be unique, got {names}")

    work_queue: CheckQueue[CheckTask] = CheckQueue(tasks)
    results: Dict[str, Any] = {}
    errors: Dict[str, BaseException] = {}
    lock = threading.Lock()
    threads = [CheckWorker(work_queue, results, errors, lock) for _ in range(max(1, min(workers, len(tasks))))]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    for name in names:
        if name in errors:
            raise errors[name]
    return results

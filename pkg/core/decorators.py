import inspect
import logging
import time
from contextlib import contextmanager
from functools import wraps
from typing import Dict, Iterator

logger = logging.getLogger(__name__)


def log_execution(func):
    """
    Log the start and completion of a function's execution.

    Works for plain functions and coroutine functions; for a coroutine function the
    completion message is logged when the awaited coroutine finishes.

    Args:
        func (Callable): The function to be decorated.

    Returns:
        Callable: A wrapper function that logs execution details.
    """

    if inspect.iscoroutinefunction(func):
        @wraps(func)
        async def async_wrapper(*args, **kwargs):
            logger.info(f"Execution has begun: {func.__qualname__}")
            result = await func(*args, **kwargs)
            logger.info(f"Execution has been completed: {func.__qualname__}")
            return result

        return async_wrapper

    @wraps(func)
    def wrapper(*args, **kwargs):
        logger.info(f"Execution has begun: {func.__qualname__}")
        result = func(*args, **kwargs)
        logger.info(f"Execution has been completed: {func.__qualname__}")
        return result

    return wrapper


def measure_time(func):
    """
    Measure and log the execution time of a function.

    Uses a monotonic clock. Coroutine functions are timed until the coroutine
    completes, not until it is created.

    Args:
        func (Callable): The function to be decorated.

    Returns:
        Callable: A wrapper function that logs execution time.
    """

    if inspect.iscoroutinefunction(func):
        @wraps(func)
        async def async_wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            result = await func(*args, **kwargs)
            logger.info(f"Execution time {func.__qualname__}: {time.perf_counter() - start_time:.4f} s")
            return result

        return async_wrapper

    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        logger.info(f"Execution time {func.__qualname__}: {time.perf_counter() - start_time:.4f} s")
        return result

    return wrapper


@contextmanager
def stage_timer(timings: Dict[str, float], stage: str) -> Iterator[None]:
    """
    Record the wall time of a block, in milliseconds, under `stage`.

    Repeated use of the same stage name accumulates.

    Args:
        timings (Dict[str, float]): Mapping that receives the elapsed time.
        stage (str): Stage name.
    """
    start_time = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - start_time) * 1000.0

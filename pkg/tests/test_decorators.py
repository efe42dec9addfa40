import logging

import pytest

from core.decorators import log_execution, measure_time, stage_timer


def test_stage_timer_accumulates_and_survives_errors():
    timings = {}
    with stage_timer(timings, "cluster"):
        pass
    first = timings["cluster"]
    with pytest.raises(RuntimeError):
        with stage_timer(timings, "cluster"):
            raise RuntimeError("stage failed")
    assert timings["cluster"] >= first >= 0.0, "Repeated stages accumulate, even when they raise"


def test_measure_time_logs(caplog):
    @measure_time
    def work(value):
        return value * 2

    with caplog.at_level(logging.INFO, logger="core.decorators"):
        assert work(4) == 8, "The wrapped result must be returned"
    assert any("Execution time" in record.getMessage() for record in caplog.records), "Timing not logged"


@pytest.mark.asyncio
async def test_log_execution_awaits_coroutines(caplog):
    """Test that the completion of a coroutine is logged after it finishes."""
    @log_execution
    async def work():
        return "done"

    with caplog.at_level(logging.INFO, logger="core.decorators"):
        assert await work() == "done", "The awaited result must be returned"
    messages = [record.getMessage() for record in caplog.records]
    assert any(m.startswith("Execution has been completed") for m in messages), "Completion not logged"

"""Tests for src/observability"""

import pytest

from src.observability import get_metrics, get_tracer, setup_otel, shutdown_otel, traced, SpanHelper


def test_setup_without_endpoint_is_disabled():
    assert setup_otel("tcl-detection-test") is False
    shutdown_otel()


def test_metrics_singleton_accepts_records():
    metrics = get_metrics()
    assert get_metrics() is metrics
    metrics.record_images(3)
    metrics.record_extraction_failure({"reason": "FormatError"})
    metrics.record_models(16, {"protocol": "8020"})
    metrics.record_tie_draws(1)
    metrics.record_smo_iterations(42)
    metrics.record_duration(0.5, {"stage": "extract"})


def test_traced_passes_results_and_errors_through():
    @traced("test.add")
    def add(a, b):
        SpanHelper.set_attributes({"a": a, "b": b})
        SpanHelper.add_event("added")
        return a + b

    @traced()
    def fail():
        raise ValueError("boom")

    assert add(2, 3) == 5
    assert add.__name__ == "add"
    with pytest.raises(ValueError, match="boom"):
        fail()


def test_tracer_is_usable_when_disabled():
    with get_tracer(__name__).start_as_current_span("noop") as span:
        span.set_attribute("k", 1)

from .otel_config import setup_otel, get_tracer, get_meter, shutdown_otel
from .metrics import MetricsCollector, get_metrics
from .traces import traced, SpanHelper

__all__ = [
    'setup_otel',
    'shutdown_otel',
    'get_tracer',
    'get_meter',
    'MetricsCollector',
    'get_metrics',
    'traced',
    'SpanHelper',
]

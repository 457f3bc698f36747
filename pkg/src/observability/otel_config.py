from opentelemetry import trace, metrics
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import Resource
from opentelemetry.semconv.resource import ResourceAttributes
from typing import Optional
import logging
import os

logger = logging.getLogger(__name__)

_tracer_provider: Optional[TracerProvider] = None
_meter_provider: Optional[MeterProvider] = None


def setup_otel(service_name: str, otel_endpoint: Optional[str] = None) -> bool:
    """Setup OpenTelemetry tracing and metrics.

    Without an endpoint (argument or OTEL_EXPORTER_OTLP_ENDPOINT) nothing is
    installed and the OpenTelemetry API stays a no-op. Returns True when
    exporters were installed.
    """
    global _tracer_provider, _meter_provider

    if otel_endpoint is None:
        otel_endpoint = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT") or None
    if not otel_endpoint:
        logger.debug("No OTLP endpoint configured, telemetry stays disabled")
        return False

    try:
        # Exporter imports pull in grpc; keep them off the default path
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
        from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter

        resource = Resource.create({
            ResourceAttributes.SERVICE_NAME: service_name,
            ResourceAttributes.SERVICE_VERSION: "1.0.0",
        })

        _tracer_provider = TracerProvider(resource=resource)
        _tracer_provider.add_span_processor(
            BatchSpanProcessor(OTLPSpanExporter(endpoint=otel_endpoint, insecure=True))
        )
        trace.set_tracer_provider(_tracer_provider)

        metric_reader = PeriodicExportingMetricReader(
            OTLPMetricExporter(endpoint=otel_endpoint, insecure=True),
            export_interval_millis=10000
        )
        _meter_provider = MeterProvider(resource=resource, metric_readers=[metric_reader])
        metrics.set_meter_provider(_meter_provider)

        logger.info(f"✅ OpenTelemetry initialized for {service_name}")
        logger.info(f"   OTLP endpoint: {otel_endpoint}")
        return True

    except Exception as e:
        logger.error(f"⚠️ OpenTelemetry setup failed: {e}", exc_info=True)
        _tracer_provider = None
        _meter_provider = None
        return False


def shutdown_otel():
    """Flush pending spans and metrics before the process exits"""
    global _tracer_provider, _meter_provider
    for provider in (_tracer_provider, _meter_provider):
        if provider is None:
            continue
        try:
            provider.shutdown()
        except Exception as e:
            logger.warning(f"⚠️ Telemetry shutdown failed: {e}")
    _tracer_provider = None
    _meter_provider = None


def get_tracer(name: str):
    """Get a tracer instance (no-op tracer when telemetry is disabled)"""
    return trace.get_tracer(name)


def get_meter(name: str):
    """Get a meter instance (no-op meter when telemetry is disabled)"""
    return metrics.get_meter(name)
